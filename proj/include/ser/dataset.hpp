#ifndef SER_DATASET_HPP
#define SER_DATASET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ser/error.hpp"
#include "ser/matrix.hpp"

namespace ser {

constexpr int kNumEmotions = 8;

// Emotion code 1..8 -> display name.
extern const std::array<const char*, kNumEmotions> kEmotionNames;

// Parsed RAVDESS filename: seven dash-separated two-digit fields,
// "MM-VV-EE-II-SS-RR-AA.wav" = modality, vocal channel, emotion, intensity,
// statement, repetition, actor.
struct RavdessLabel {
    int modality = 0;
    int vocal_channel = 0; // 1 = speech, 2 = song
    int emotion = 0;       // 1..8
    int intensity = 0;     // 1..2
    int statement = 0;
    int repetition = 0;
    int actor = 0;         // 1..24

    int emotion_index() const { return emotion - 1; }
    // Metadata only (odd actor id = male, even = female); never a label.
    bool actor_is_male() const { return actor % 2 == 1; }
    std::string to_filename() const;
};

// Parses the basename of `name`. Throws ParseError (message carries the
// offending filename) on wrong field count, non-numeric fields or
// out-of-range emotion/intensity/actor codes.
RavdessLabel parse_filename(const std::string& name);

struct DatasetEntry {
    std::string path;
    RavdessLabel label;
};

struct DatasetIndex {
    std::vector<DatasetEntry> entries;                 // sorted by path
    std::array<std::int64_t, kNumEmotions> class_counts{}; // by emotion_index
    std::vector<std::string> skipped;                  // unparseable .wav names
};

// Recursively collects *.wav files whose names parse as RAVDESS labels.
// Song recordings (vocal channel 2) are excluded unless include_song is set.
// Entries are sorted lexicographically by path so downstream splits are
// deterministic. Throws IoError for an unreadable root and DataError when
// nothing parseable is found.
DatasetIndex scan_dataset(const std::string& root, bool include_song = false);

// Serializes one entry per line as JSON for audit.
void write_index_jsonl(const DatasetIndex& index, const std::string& path);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::vector<int> train; // indices into DatasetIndex::entries
    std::vector<int> test;
};

// Shuffles entry indices with XorShift64(seed) (Fisher-Yates, documented in
// rng.hpp) and takes the first round(fraction * N) as the training split.
// Throws DataError when either side would be empty.
SplitSpec split_dataset(const DatasetIndex& index, double fraction, std::uint64_t seed);

// Speaker-disjoint variant: shuffles actor ids instead and assigns whole
// actors to the training side until it holds at least round(fraction * N)
// files. Stricter than the default file-level split; off by default.
SplitSpec split_dataset_speaker_disjoint(const DatasetIndex& index, double fraction,
                                         std::uint64_t seed);

// 1x8 one-hot row for the label's emotion.
Matrix label_to_onehot(const RavdessLabel& label);

} // namespace ser

#endif
