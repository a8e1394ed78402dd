#ifndef SER_MFCC_HPP
#define SER_MFCC_HPP

#include <span>
#include <vector>

#include "ser/matrix.hpp"
#include "ser/wav.hpp"

namespace ser {

// The model consumes audio at this rate; everything is resampled to it.
constexpr int kModelSampleRate = 16000;

// MFCC front-end parameters. target_frames and num_coeffs define the model
// input geometry; the rest are the pinned front-end constants, all
// overridable through the run configuration.
struct MfccConfig {
    double frame_len_ms = 25.0;
    double hop_ms = 10.0;
    int fft_size = 512;
    int mel_filters = 64;
    int num_coeffs = 40;
    int target_frames = 20;
    double preemphasis = 0.97;

    int frame_samples() const;
    int hop_samples() const;
    // Shortest signal that still yields target_frames raw frames.
    std::size_t min_samples() const;
    void validate() const; // throws ConfigError on any violated invariant
};

// Fixed-size model input: (target_frames, num_coeffs), default (20, 40).
struct FeatureMatrix {
    Matrix frames;
};

// mel(f) = 2595 * log10(1 + f / 700) and its inverse.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Pre-emphasis y[n] = x[n] - preemphasis * x[n-1], then overlapping frames
// of frame_samples() length at hop_samples() stride, each multiplied by a
// periodic Hann window. Output shape (num_raw_frames, frame_samples()).
// Throws DataError when the signal is shorter than one frame.
Matrix frame_signal(std::span<const double> samples, const MfccConfig& cfg);

// Triangular mel filterbank of shape (mel_filters, fft_size/2 + 1). Centers
// are equally spaced on the mel scale between 0 Hz and Nyquist; each row is
// rescaled so its peak weight is exactly 1.
Matrix mel_filterbank(const MfccConfig& cfg);

// Filter center frequencies in Hz, strictly increasing.
std::vector<double> mel_center_frequencies(const MfccConfig& cfg);

// Full per-frame MFCC: power spectrum via a real FFT, mel filterbank,
// natural log floored at 1e-10, orthonormal DCT-II, first num_coeffs
// coefficients kept. clip must be mono at kModelSampleRate. Output shape
// (num_raw_frames, num_coeffs).
Matrix compute_mfcc(const AudioClip& clip, const MfccConfig& cfg);

// Reduces a variable number of raw frames to exactly target_frames rows by
// contiguous bucket mean-pooling: bucket b covers raw rows
// [floor(b*N/T), floor((b+1)*N/T)). Throws DataError when N < T.
FeatureMatrix pool_frames(const Matrix& raw, int target_frames);

// Convenience pipeline for one 16 kHz mono clip. Clips too short for
// target_frames raw frames are zero-padded at the end to the minimum length;
// `padded` reports when that happened so callers can surface a warning.
struct FeaturizeResult {
    FeatureMatrix features;
    bool padded = false;
};
FeaturizeResult featurize_clip(const AudioClip& clip, const MfccConfig& cfg);

// Per-coefficient standardization statistics (1 x num_coeffs each),
// computed over every frame of the training split only and stored in the
// checkpoint so inference uses the same affine map.
struct FeatureStats {
    Matrix mean;
    Matrix stdev;
};

FeatureStats compute_feature_stats(const std::vector<FeatureMatrix>& features,
                                   std::span<const int> indices);
Matrix apply_feature_stats(const FeatureStats& stats, const Matrix& frames);

} // namespace ser

#endif
