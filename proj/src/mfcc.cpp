#include "ser/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace ser {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 complex FFT, in place. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

} // namespace

int MfccConfig::frame_samples() const {
    return static_cast<int>(std::lround(frame_len_ms * kModelSampleRate / 1000.0));
}

int MfccConfig::hop_samples() const {
    return static_cast<int>(std::lround(hop_ms * kModelSampleRate / 1000.0));
}

std::size_t MfccConfig::min_samples() const {
    return static_cast<std::size_t>(frame_samples()) +
           static_cast<std::size_t>(target_frames - 1) * hop_samples();
}

void MfccConfig::validate() const {
    std::ostringstream os;
    if (num_coeffs < 1 || num_coeffs > mel_filters)
        throw ConfigError("mfcc: num_coeffs must be in [1, mel_filters]");
    if (frame_samples() < 1 || hop_samples() < 1)
        throw ConfigError("mfcc: frame and hop lengths must be positive");
    if (!is_pow2(fft_size)) throw ConfigError("mfcc: fft_size must be a power of two");
    if (fft_size < frame_samples()) {
        os << "mfcc: fft_size " << fft_size << " smaller than frame length "
           << frame_samples() << " samples";
        throw ConfigError(os.str());
    }
    if (target_frames < 1) throw ConfigError("mfcc: target_frames must be >= 1");
    if (preemphasis < 0.0 || preemphasis >= 1.0)
        throw ConfigError("mfcc: preemphasis must lie in [0, 1)");
    if (mel_filters < 1) throw ConfigError("mfcc: mel_filters must be >= 1");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix frame_signal(std::span<const double> samples, const MfccConfig& cfg) {
    cfg.validate();
    const int flen = cfg.frame_samples();
    const int hop = cfg.hop_samples();
    if (samples.size() < static_cast<std::size_t>(flen)) {
        std::ostringstream os;
        os << "signal too short to frame: " << samples.size() << " samples, need at least "
           << flen;
        throw DataError(os.str());
    }

    std::vector<double> emphasized(samples.size());
    emphasized[0] = samples[0];
    for (std::size_t n = 1; n < samples.size(); ++n)
        emphasized[n] = samples[n] - cfg.preemphasis * samples[n - 1];

    // Periodic Hann window.
    std::vector<double> window(flen);
    for (int n = 0; n < flen; ++n)
        window[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / static_cast<double>(flen)));

    const int num_frames =
        1 + static_cast<int>((samples.size() - static_cast<std::size_t>(flen)) / hop);
    Matrix frames(num_frames, flen);
    for (int f = 0; f < num_frames; ++f) {
        const std::size_t start = static_cast<std::size_t>(f) * hop;
        for (int n = 0; n < flen; ++n) frames(f, n) = emphasized[start + n] * window[n];
    }
    return frames;
}

std::vector<double> mel_center_frequencies(const MfccConfig& cfg) {
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(kModelSampleRate / 2.0);
    std::vector<double> centers(cfg.mel_filters);
    for (int j = 1; j <= cfg.mel_filters; ++j) {
        const double mel = mel_lo + (mel_hi - mel_lo) * j / static_cast<double>(cfg.mel_filters + 1);
        centers[j - 1] = mel_to_hz(mel);
    }
    return centers;
}

Matrix mel_filterbank(const MfccConfig& cfg) {
    cfg.validate();
    const int bins = cfg.fft_size / 2 + 1;
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(kModelSampleRate / 2.0);

    // Edge frequencies: mel-equally-spaced points 0 .. mel_filters+1.
    std::vector<double> edges(cfg.mel_filters + 2);
    for (int j = 0; j < cfg.mel_filters + 2; ++j)
        edges[j] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * j / static_cast<double>(cfg.mel_filters + 1));

    Matrix fb(cfg.mel_filters, bins);
    for (int j = 0; j < cfg.mel_filters; ++j) {
        const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
        double peak = 0.0;
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * kModelSampleRate / cfg.fft_size;
            double w = 0.0;
            if (f > lo && f < mid) {
                w = (f - lo) / (mid - lo);
            } else if (f >= mid && f < hi) {
                w = (hi - f) / (hi - mid);
            }
            fb(j, k) = w;
            peak = std::max(peak, w);
        }
        // Height normalization: peak weight of each sampled triangle is 1.
        if (peak > 0.0)
            for (int k = 0; k < bins; ++k) fb(j, k) /= peak;
    }
    return fb;
}

Matrix compute_mfcc(const AudioClip& clip, const MfccConfig& cfg) {
    if (clip.channels != 1)
        throw DataError("compute_mfcc: clip must be mono");
    if (clip.sample_rate != kModelSampleRate)
        throw DataError("compute_mfcc: clip must be at " + std::to_string(kModelSampleRate) +
                        " Hz, got " + std::to_string(clip.sample_rate));

    const Matrix frames = frame_signal(clip.samples, cfg);
    const Matrix fb = mel_filterbank(cfg);
    const int bins = cfg.fft_size / 2 + 1;
    const int n_mel = cfg.mel_filters;

    // Orthonormal DCT-II basis, (num_coeffs, mel_filters).
    Matrix dct(cfg.num_coeffs, n_mel);
    for (int k = 0; k < cfg.num_coeffs; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / n_mel) : std::sqrt(2.0 / n_mel);
        for (int n = 0; n < n_mel; ++n)
            dct(k, n) = s * std::cos(kPi * (2.0 * n + 1.0) * k / (2.0 * n_mel));
    }

    Matrix out(frames.rows, cfg.num_coeffs);
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.fft_size));
    std::vector<double> power(bins);
    std::vector<double> logmel(n_mel);

    for (int f = 0; f < frames.rows; ++f) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (int n = 0; n < frames.cols; ++n) buf[n] = frames(f, n);
        fft_inplace(buf);
        for (int k = 0; k < bins; ++k) power[k] = std::norm(buf[k]);

        for (int j = 0; j < n_mel; ++j) {
            double e = 0.0;
            for (int k = 0; k < bins; ++k) e += fb(j, k) * power[k];
            logmel[j] = std::log(std::max(e, kLogFloor));
        }
        for (int k = 0; k < cfg.num_coeffs; ++k) {
            double acc = 0.0;
            for (int n = 0; n < n_mel; ++n) acc += dct(k, n) * logmel[n];
            out(f, k) = acc;
        }
    }
    return out;
}

FeatureMatrix pool_frames(const Matrix& raw, int target_frames) {
    if (raw.rows < target_frames) {
        std::ostringstream os;
        os << "pool_frames: " << raw.rows << " raw frames, need at least " << target_frames;
        throw DataError(os.str());
    }
    Matrix pooled(target_frames, raw.cols);
    const std::int64_t n = raw.rows;
    for (int b = 0; b < target_frames; ++b) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(b) * n / target_frames);
        const int hi = static_cast<int>(static_cast<std::int64_t>(b + 1) * n / target_frames);
        for (int c = 0; c < raw.cols; ++c) {
            double acc = 0.0;
            for (int r = lo; r < hi; ++r) acc += raw(r, c);
            pooled(b, c) = acc / static_cast<double>(hi - lo);
        }
    }
    return FeatureMatrix{std::move(pooled)};
}

FeaturizeResult featurize_clip(const AudioClip& clip, const MfccConfig& cfg) {
    if (clip.channels != 1 || clip.sample_rate != kModelSampleRate)
        throw DataError("featurize_clip: expects a mono clip at model rate");
    FeaturizeResult result;
    const std::size_t need = cfg.min_samples();
    if (clip.samples.size() < need) {
        AudioClip padded = clip;
        padded.samples.resize(need, 0.0); // zero-pad at the end, never drop data
        result.padded = true;
        result.features = pool_frames(compute_mfcc(padded, cfg), cfg.target_frames);
        return result;
    }
    result.features = pool_frames(compute_mfcc(clip, cfg), cfg.target_frames);
    return result;
}

FeatureStats compute_feature_stats(const std::vector<FeatureMatrix>& features,
                                   std::span<const int> indices) {
    if (indices.empty()) throw DataError("compute_feature_stats: empty index list");
    const int dim = features[static_cast<std::size_t>(indices[0])].frames.cols;
    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
    std::size_t count = 0;
    // Single deterministic reduction pass in index order.
    for (int idx : indices) {
        const Matrix& m = features[static_cast<std::size_t>(idx)].frames;
        for (int r = 0; r < m.rows; ++r) {
            for (int c = 0; c < dim; ++c) {
                const double v = m(r, c);
                sum[c] += v;
                sumsq[c] += v * v;
            }
        }
        count += static_cast<std::size_t>(m.rows);
    }
    FeatureStats stats{Matrix(1, dim), Matrix(1, dim)};
    for (int c = 0; c < dim; ++c) {
        const double mean = sum[c] / static_cast<double>(count);
        const double var = std::max(sumsq[c] / static_cast<double>(count) - mean * mean, 0.0);
        stats.mean(0, c) = mean;
        stats.stdev(0, c) = std::max(std::sqrt(var), 1e-8);
    }
    return stats;
}

Matrix apply_feature_stats(const FeatureStats& stats, const Matrix& frames) {
    if (frames.cols != stats.mean.cols)
        throw ShapeError("apply_feature_stats: feature width " + shape_str(frames) +
                         " vs stats " + shape_str(stats.mean));
    Matrix out = frames;
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out(r, c) = (out(r, c) - stats.mean(0, c)) / stats.stdev(0, c);
    return out;
}

} // namespace ser
