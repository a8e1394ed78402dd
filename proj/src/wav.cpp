#include "ser/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace ser {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32(const unsigned char* p) {
    std::uint32_t u = read_u32(p);
    float f;
    std::memcpy(&f, &u, sizeof f);
    return f;
}

struct FmtInfo {
    std::uint16_t format_tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

} // namespace

AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV file: " + path);

    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file: " + path);
    }

    FmtInfo fmt;
    bool fmt_found = false;
    const unsigned char* data_chunk = nullptr;
    std::size_t data_len = 0;

    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + off;
        std::uint32_t chunk_size = read_u32(hdr + 4);
        const unsigned char* body = hdr + 8;
        std::size_t avail = bytes.size() - (off + 8);

        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_size < 16 || avail < 16)
                throw FormatError("corrupt WAV: fmt chunk too small in " + path);
            fmt.format_tag = read_u16(body);
            fmt.channels = read_u16(body + 2);
            fmt.sample_rate = read_u32(body + 4);
            fmt.bits_per_sample = read_u16(body + 14);
            fmt_found = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (chunk_size > avail) {
                throw FormatError("corrupt WAV: data chunk truncated (" +
                                  std::to_string(chunk_size) + " declared, " +
                                  std::to_string(avail) + " present) in " + path);
            }
            data_chunk = body;
            data_len = chunk_size;
            break; // all format chunks precede data in the files we accept
        }
        // chunks are word-aligned
        off += 8 + chunk_size + (chunk_size & 1);
    }

    if (!fmt_found) throw FormatError("corrupt WAV: missing fmt chunk in " + path);
    if (data_chunk == nullptr) throw FormatError("corrupt WAV: missing data chunk in " + path);
    if (data_len == 0) throw FormatError("corrupt WAV: empty data chunk in " + path);
    if (fmt.channels < 1 || fmt.channels > 2)
        throw FormatError("unsupported WAV channel count " + std::to_string(fmt.channels) +
                          " in " + path);
    if (fmt.sample_rate < 8000 || fmt.sample_rate > 192000)
        throw FormatError("unsupported WAV sample rate " + std::to_string(fmt.sample_rate) +
                          " in " + path);

    const bool pcm16 = fmt.format_tag == 1 && fmt.bits_per_sample == 16;
    const bool float32 = fmt.format_tag == 3 && fmt.bits_per_sample == 32;
    if (!pcm16 && !float32) {
        std::ostringstream os;
        os << "unsupported WAV codec: format tag " << fmt.format_tag << " with "
           << fmt.bits_per_sample << " bits per sample in " << path
           << " (only PCM16 and IEEE float32 are accepted)";
        throw FormatError(os.str());
    }

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    if (data_len % frame_bytes != 0)
        throw FormatError("corrupt WAV: data chunk not a whole number of frames in " + path);
    const std::size_t n_frames = data_len / frame_bytes;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    clip.channels = fmt.channels;
    clip.samples.resize(n_frames * fmt.channels);

    // Decode interleaved frames into planar channel data.
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (int c = 0; c < fmt.channels; ++c) {
            const unsigned char* p = data_chunk + (f * fmt.channels + c) * bytes_per_sample;
            double v;
            if (pcm16) {
                std::int16_t s = static_cast<std::int16_t>(read_u16(p));
                v = static_cast<double>(s) / 32768.0;
            } else {
                v = static_cast<double>(read_f32(p));
                v = std::clamp(v, -1.0, 1.0);
            }
            clip.samples[static_cast<std::size_t>(c) * n_frames + f] = v;
        }
    }
    return clip;
}

AudioClip to_mono(const AudioClip& clip) {
    if (clip.channels == 1) return clip;
    if (clip.channels != 2)
        throw FormatError("to_mono: unsupported channel count " + std::to_string(clip.channels));
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.channels = 1;
    const std::size_t n = clip.frames();
    out.samples.resize(n);
    const double* left = clip.channel(0);
    const double* right = clip.channel(1);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = 0.5 * (left[i] + right[i]);
    return out;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (clip.channels != 1) throw FormatError("resample: input must be mono");
    if (target_rate < 8000)
        throw FormatError("resample: target rate must be >= 8000 Hz, got " +
                          std::to_string(target_rate));
    if (clip.sample_rate == target_rate) return clip;

    const int source_rate = clip.sample_rate;
    const std::size_t in_len = clip.samples.size();

    // Anti-aliasing kernel at the source rate. Cutoff sits at 0.45 x the
    // lower rate so downsampling never folds energy past the new Nyquist.
    constexpr int kHalfTaps = 64;
    const double cutoff_hz = 0.45 * static_cast<double>(std::min(source_rate, target_rate));
    const double fc = cutoff_hz / static_cast<double>(source_rate); // cycles per sample
    std::vector<double> kernel(2 * kHalfTaps + 1);
    double kernel_sum = 0.0;
    for (int k = -kHalfTaps; k <= kHalfTaps; ++k) {
        double sinc;
        if (k == 0) {
            sinc = 2.0 * fc;
        } else {
            sinc = std::sin(2.0 * kPi * fc * k) / (kPi * k);
        }
        const double hann = 0.5 * (1.0 + std::cos(kPi * k / static_cast<double>(kHalfTaps)));
        kernel[k + kHalfTaps] = sinc * hann;
        kernel_sum += kernel[k + kHalfTaps];
    }
    for (double& v : kernel) v /= kernel_sum; // unit DC gain

    // Filter with zero padding at the edges.
    std::vector<double> filtered(in_len, 0.0);
    for (std::size_t n = 0; n < in_len; ++n) {
        double acc = 0.0;
        for (int k = -kHalfTaps; k <= kHalfTaps; ++k) {
            const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n) - k;
            if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(in_len))
                acc += kernel[k + kHalfTaps] * clip.samples[static_cast<std::size_t>(idx)];
        }
        filtered[n] = acc;
    }

    const double ratio = static_cast<double>(source_rate) / static_cast<double>(target_rate);
    const std::size_t out_len = static_cast<std::size_t>(std::llround(
        static_cast<double>(in_len) * static_cast<double>(target_rate) / source_rate));

    AudioClip out;
    out.sample_rate = target_rate;
    out.channels = 1;
    out.samples.resize(out_len);
    for (std::size_t j = 0; j < out_len; ++j) {
        const double pos = static_cast<double>(j) * ratio;
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        const double a = i0 < in_len ? filtered[i0] : 0.0;
        const double b = (i0 + 1) < in_len ? filtered[i0 + 1] : 0.0;
        out.samples[j] = a + frac * (b - a);
    }
    return out;
}

} // namespace ser
