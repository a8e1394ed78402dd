#include "ravdess_fixture.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "ser/rng.hpp"
#include "wav_writer.hpp"

namespace fs = std::filesystem;

namespace ser::testing {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string ravdess_name(int modality, int channel, int emotion, int intensity, int statement,
                         int repetition, int actor) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02d-%02d-%02d-%02d-%02d-%02d-%02d.wav", modality, channel,
                  emotion, intensity, statement, repetition, actor);
    return buf;
}

// Synthetic "speech": a fundamental that depends on the emotion code with a
// couple of harmonics plus noise, so classes are separable in the mel bands.
std::vector<double> synth_clip(int emotion, double seconds, int sample_rate,
                               ser::XorShift64& rng) {
    const double f0 = 180.0 + 140.0 * emotion;
    std::vector<double> s(static_cast<std::size_t>(seconds * sample_rate));
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = static_cast<double>(n) / sample_rate;
        s[n] = 0.4 * std::sin(2.0 * kPi * f0 * t + phase) +
               0.2 * std::sin(2.0 * kPi * 2.0 * f0 * t) +
               0.08 * rng.uniform(-1.0, 1.0);
    }
    return s;
}

void emit_file(const fs::path& dir, const std::string& name, int emotion,
               double audio_seconds, int sample_rate, ser::XorShift64& rng) {
    fs::create_directories(dir);
    if (audio_seconds > 0.0) {
        write_wav_pcm16((dir / name).string(), {synth_clip(emotion, audio_seconds, sample_rate, rng)},
                        sample_rate);
    } else {
        std::ofstream((dir / name).string()).put('\0');
    }
}

} // namespace

int make_ravdess_layout(const fs::path& root, bool with_song, double audio_seconds,
                        int sample_rate, std::uint64_t seed) {
    ser::XorShift64 rng(seed);
    int written = 0;
    for (int actor = 1; actor <= 24; ++actor) {
        char actor_dir[16];
        std::snprintf(actor_dir, sizeof actor_dir, "Actor_%02d", actor);
        const fs::path dir = root / actor_dir;
        for (int emotion = 1; emotion <= 8; ++emotion) {
            const int max_intensity = emotion == 1 ? 1 : 2;
            for (int intensity = 1; intensity <= max_intensity; ++intensity)
                for (int statement = 1; statement <= 2; ++statement)
                    for (int repetition = 1; repetition <= 2; ++repetition) {
                        emit_file(dir,
                                  ravdess_name(3, 1, emotion, intensity, statement, repetition,
                                               actor),
                                  emotion, audio_seconds, sample_rate, rng);
                        ++written;
                    }
        }
        if (with_song && actor != 18) {
            for (int emotion = 1; emotion <= 6; ++emotion) {
                const int max_intensity = emotion == 1 ? 1 : 2;
                for (int intensity = 1; intensity <= max_intensity; ++intensity)
                    for (int statement = 1; statement <= 2; ++statement)
                        for (int repetition = 1; repetition <= 2; ++repetition) {
                            emit_file(dir,
                                      ravdess_name(3, 2, emotion, intensity, statement,
                                                   repetition, actor),
                                      emotion, audio_seconds, sample_rate, rng);
                            ++written;
                        }
            }
        }
    }
    return written;
}

int make_small_ravdess(const fs::path& root, int per_emotion, double audio_seconds,
                       int sample_rate, std::uint64_t seed) {
    ser::XorShift64 rng(seed);
    int written = 0;
    for (int emotion = 1; emotion <= 8; ++emotion) {
        for (int k = 0; k < per_emotion; ++k) {
            const int actor = 1 + (k % 24);
            const int statement = 1 + (k / 24) % 2;
            const int repetition = 1 + (k / 48) % 2;
            char actor_dir[16];
            std::snprintf(actor_dir, sizeof actor_dir, "Actor_%02d", actor);
            emit_file(root / actor_dir,
                      ravdess_name(3, 1, emotion, 1, statement, repetition, actor), emotion,
                      audio_seconds, sample_rate, rng);
            ++written;
        }
    }
    return written;
}

} // namespace ser::testing
