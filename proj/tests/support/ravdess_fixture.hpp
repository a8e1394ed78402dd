#ifndef SER_TESTS_RAVDESS_FIXTURE_HPP
#define SER_TESTS_RAVDESS_FIXTURE_HPP

#include <cstdint>
#include <filesystem>

namespace ser::testing {

// Fabricates the official RAVDESS speech filename grid under root/Actor_XX:
// 24 actors x (neutral at one intensity + 7 emotions at two intensities,
// each with 2 statements x 2 repetitions) = 1,440 files. When with_song is
// set, the song grid is added too: 23 actors (actor 18 has no song
// recordings) x 44 files = 1,012. Files are created empty unless
// audio_seconds > 0, in which case each holds a synthetic PCM16 clip at
// sample_rate whose spectrum depends on the emotion code.
int make_ravdess_layout(const std::filesystem::path& root, bool with_song,
                        double audio_seconds = 0.0, int sample_rate = 48000,
                        std::uint64_t seed = 1);

// Small synthetic subset with real audio: `per_emotion` clips per emotion
// code, round-robin over actors/statements/repetitions.
int make_small_ravdess(const std::filesystem::path& root, int per_emotion,
                       double audio_seconds, int sample_rate = 48000,
                       std::uint64_t seed = 1);

} // namespace ser::testing

#endif
