#include <cmath>
#include <cstring>

#include <doctest.h>

#include "ser/mfcc.hpp"
#include "ser/rng.hpp"
#include "reference_mfcc.hpp"

using namespace ser;

namespace {

constexpr double kPi = 3.14159265358979323846;

AudioClip model_rate_clip(std::vector<double> samples) {
    AudioClip clip;
    clip.sample_rate = kModelSampleRate;
    clip.channels = 1;
    clip.samples = std::move(samples);
    return clip;
}

std::vector<double> sine(double freq, double amplitude, double seconds) {
    std::vector<double> s(static_cast<std::size_t>(seconds * kModelSampleRate));
    for (std::size_t n = 0; n < s.size(); ++n)
        s[n] = amplitude * std::sin(2.0 * kPi * freq * static_cast<double>(n) / kModelSampleRate);
    return s;
}

std::vector<double> random_clip(double seconds, std::uint64_t seed, double amplitude = 0.5) {
    XorShift64 rng(seed);
    std::vector<double> s(static_cast<std::size_t>(seconds * kModelSampleRate));
    for (double& v : s) v = rng.uniform(-amplitude, amplitude);
    return s;
}

} // namespace

TEST_CASE("framing arithmetic") {
    MfccConfig cfg;
    CHECK(cfg.frame_samples() == 400);
    CHECK(cfg.hop_samples() == 160);

    SUBCASE("exactly one frame") {
        std::vector<double> s(400, 0.1);
        Matrix frames = frame_signal(s, cfg);
        CHECK(frames.rows == 1);
        CHECK(frames.cols == 400);
    }
    SUBCASE("one hop more gives two frames") {
        std::vector<double> s(560, 0.1);
        CHECK(frame_signal(s, cfg).rows == 2);
    }
    SUBCASE("too short throws with the required minimum") {
        std::vector<double> s(399, 0.1);
        try {
            frame_signal(s, cfg);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("400") != std::string::npos);
        }
    }
    SUBCASE("zero input gives zero frames") {
        std::vector<double> s(800, 0.0);
        Matrix frames = frame_signal(s, cfg);
        for (double v : frames.data) CHECK(v == 0.0);
    }
}

TEST_CASE("mel scale closed form") {
    CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5).epsilon(1e-10));
}

TEST_CASE("mel filterbank shape and normalization") {
    MfccConfig cfg;
    Matrix fb = mel_filterbank(cfg);
    CHECK(fb.rows == 64);
    CHECK(fb.cols == 257);

    for (int j = 0; j < fb.rows; ++j) {
        double peak = 0.0;
        int peak_count = 0;
        for (int k = 0; k < fb.cols; ++k) {
            CHECK(fb(j, k) >= 0.0);
            if (fb(j, k) > peak) {
                peak = fb(j, k);
                peak_count = 1;
            } else if (fb(j, k) == peak && peak > 0.0) {
                ++peak_count;
            }
        }
        CHECK(peak == 1.0);
        CHECK(peak_count == 1);
    }

    const std::vector<double> centers = mel_center_frequencies(cfg);
    REQUIRE(centers.size() == 64);
    for (std::size_t j = 1; j < centers.size(); ++j) CHECK(centers[j] > centers[j - 1]);
}

TEST_CASE("mfcc of silence: constant log floor in coefficient 0 only") {
    MfccConfig cfg;
    Matrix mfcc = compute_mfcc(model_rate_clip(std::vector<double>(16000, 0.0)), cfg);
    REQUIRE(mfcc.rows > 1);
    REQUIRE(mfcc.cols == 40);

    // DCT of the constant ln(1e-10) vector: sqrt(1/64) * 64 * ln(1e-10)
    const double expected_c0 = std::sqrt(1.0 / 64.0) * 64.0 * std::log(1e-10);
    for (int f = 0; f < mfcc.rows; ++f) {
        CHECK(mfcc(f, 0) == doctest::Approx(expected_c0).epsilon(1e-12));
        for (int k = 1; k < 40; ++k) CHECK(std::abs(mfcc(f, k)) < 1e-9);
    }
    // all frames identical
    for (int f = 1; f < mfcc.rows; ++f)
        for (int k = 0; k < 40; ++k) CHECK(mfcc(f, k) == mfcc(0, k));
}

TEST_CASE("mfcc of a stationary tone: interior frames agree") {
    MfccConfig cfg;
    // 1 kHz at 16 kHz: the 160-sample hop spans exactly 10 periods
    Matrix mfcc = compute_mfcc(model_rate_clip(sine(1000.0, 0.5, 1.0)), cfg);
    for (int f = 2; f < mfcc.rows; ++f)
        for (int k = 0; k < 40; ++k)
            CHECK(std::abs(mfcc(f, k) - mfcc(1, k)) < 1e-6);
}

TEST_CASE("mfcc is deterministic") {
    MfccConfig cfg;
    AudioClip clip = model_rate_clip(random_clip(0.5, 77));
    Matrix a = compute_mfcc(clip, cfg);
    Matrix b = compute_mfcc(clip, cfg);
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

TEST_CASE("mfcc matches the naive-DFT reference implementation") {
    MfccConfig cfg;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        AudioClip clip = model_rate_clip(random_clip(1.0, seed));
        Matrix fast = compute_mfcc(clip, cfg);
        Matrix ref = ser::testing::reference_mfcc(clip.samples, cfg);
        REQUIRE(fast.rows == ref.rows);
        REQUIRE(fast.cols == ref.cols);
        for (int f = 0; f < fast.rows; ++f)
            for (int k = 0; k < fast.cols; ++k)
                CHECK(std::abs(fast(f, k) - ref(f, k)) < 1e-4);
    }
}

TEST_CASE("amplitude scaling shifts only coefficient 0") {
    MfccConfig cfg;
    const std::vector<double> base = random_clip(0.6, 11, 0.4);
    Matrix m1 = compute_mfcc(model_rate_clip(base), cfg);

    const double k = 2.0;
    std::vector<double> scaled = base;
    for (double& v : scaled) v *= k;
    Matrix m2 = compute_mfcc(model_rate_clip(scaled), cfg);

    // log power gains 2 ln k per mel bin; after the orthonormal DCT that is
    // a sqrt(1/64)*64*2 ln k shift of coefficient 0 and nothing elsewhere
    const double expected_shift = std::sqrt(1.0 / 64.0) * 64.0 * 2.0 * std::log(k);
    for (int f = 0; f < m1.rows; ++f) {
        CHECK(m2(f, 0) - m1(f, 0) == doctest::Approx(expected_shift).epsilon(1e-6));
        for (int c = 1; c < m1.cols; ++c) CHECK(std::abs(m2(f, c) - m1(f, c)) < 1e-6);
    }
}

TEST_CASE("pool_frames bucket means") {
    SUBCASE("20 rows pass through") {
        Matrix raw(20, 3);
        XorShift64 rng(2);
        for (double& v : raw.data) v = rng.uniform(-1, 1);
        FeatureMatrix pooled = pool_frames(raw, 20);
        CHECK(std::memcmp(pooled.frames.data.data(), raw.data.data(),
                          raw.data.size() * sizeof(double)) == 0);
    }
    SUBCASE("identical rows collapse to the same row") {
        Matrix raw(40, 4);
        for (int r = 0; r < 40; ++r)
            for (int c = 0; c < 4; ++c) raw(r, c) = 3.25 + c;
        FeatureMatrix pooled = pool_frames(raw, 20);
        REQUIRE(pooled.frames.rows == 20);
        for (int r = 0; r < 20; ++r)
            for (int c = 0; c < 4; ++c) CHECK(pooled.frames(r, c) == 3.25 + c);
    }
    SUBCASE("row i = i averages to 2b + 0.5") {
        Matrix raw(40, 2);
        for (int r = 0; r < 40; ++r)
            for (int c = 0; c < 2; ++c) raw(r, c) = r;
        FeatureMatrix pooled = pool_frames(raw, 20);
        for (int b = 0; b < 20; ++b)
            for (int c = 0; c < 2; ++c)
                CHECK(pooled.frames(b, c) == doctest::Approx(2.0 * b + 0.5).epsilon(1e-15));
    }
    SUBCASE("too few rows throw") {
        Matrix raw(19, 2);
        CHECK_THROWS_AS(pool_frames(raw, 20), DataError);
    }
}

TEST_CASE("any clip of at least 2.2 s yields exactly (20, 40)") {
    MfccConfig cfg;
    XorShift64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const double seconds = 2.2 + rng.uniform01() * 2.0;
        AudioClip clip = model_rate_clip(random_clip(seconds, 100 + static_cast<std::uint64_t>(trial)));
        FeaturizeResult r = featurize_clip(clip, cfg);
        CHECK(r.features.frames.rows == 20);
        CHECK(r.features.frames.cols == 40);
        CHECK_FALSE(r.padded);
        CHECK(all_finite(r.features.frames));
    }
}

TEST_CASE("short clips are zero-padded and flagged") {
    MfccConfig cfg;
    // 0.1 s = 1600 samples, below the 3440-sample minimum for 20 raw frames
    AudioClip clip = model_rate_clip(random_clip(0.1, 55));
    FeaturizeResult r = featurize_clip(clip, cfg);
    CHECK(r.padded);
    CHECK(r.features.frames.rows == 20);
    CHECK(r.features.frames.cols == 40);
}

TEST_CASE("feature standardization uses only the chosen indices") {
    MfccConfig cfg;
    cfg.target_frames = 2;
    cfg.num_coeffs = 3;
    cfg.mel_filters = 8;

    std::vector<FeatureMatrix> features;
    for (int i = 0; i < 4; ++i) {
        Matrix m(2, 3);
        for (double& v : m.data) v = i + 1.0;
        features.push_back(FeatureMatrix{m});
    }
    const std::vector<int> train_idx{0, 1}; // values 1 and 2 -> mean 1.5
    FeatureStats stats = compute_feature_stats(features, train_idx);
    for (int c = 0; c < 3; ++c) {
        CHECK(stats.mean(0, c) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(stats.stdev(0, c) == doctest::Approx(0.5).epsilon(1e-12));
    }

    Matrix z = apply_feature_stats(stats, features[3].frames);
    for (double v : z.data) CHECK(v == doctest::Approx(5.0).epsilon(1e-12)); // (4-1.5)/0.5
}

TEST_CASE("config validation") {
    MfccConfig cfg;
    cfg.num_coeffs = 65;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = MfccConfig{};
    cfg.fft_size = 300; // not a power of two
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = MfccConfig{};
    cfg.fft_size = 256; // smaller than the 400-sample frame
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
