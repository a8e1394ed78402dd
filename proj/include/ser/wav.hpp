#ifndef SER_WAV_HPP
#define SER_WAV_HPP

#include <string>
#include <vector>

#include "ser/error.hpp"

namespace ser {

// Decoded audio. Samples are stored channel-planar (all of channel 0, then
// all of channel 1) with every value in [-1, 1]; interleaving is resolved at
// decode time and never reappears.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;
    int channels = 1;

    std::size_t frames() const { return samples.size() / static_cast<std::size_t>(channels); }
    const double* channel(int c) const { return samples.data() + static_cast<std::size_t>(c) * frames(); }
};

// Reads a RIFF/WAVE file. Supported encodings: PCM 16-bit and IEEE float
// 32-bit, 1 or 2 channels. int16 samples are normalized by 1/32768.
//
// Throws IoError if the file is missing, FormatError for unsupported codecs
// (the message names the format tag) and for truncated or empty data chunks.
AudioClip read_wav(const std::string& path);

// Stereo is mixed down as the per-sample arithmetic mean of both channels;
// mono input is returned unchanged.
AudioClip to_mono(const AudioClip& clip);

// Resamples a mono clip to target_rate. A windowed-sinc FIR low-pass
// (Hann window, 64 taps per side, cutoff 0.45 x the lower of the two rates)
// runs at the source rate, then output samples are taken by linear
// interpolation at fractional source positions. Edges are zero-padded.
// For integer ratios such as 48k -> 16k this reduces to filtered decimation.
AudioClip resample(const AudioClip& clip, int target_rate);

} // namespace ser

#endif
