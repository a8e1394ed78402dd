#include "ser/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ser/rng.hpp"

namespace fs = std::filesystem;

namespace ser {

const std::array<const char*, kNumEmotions> kEmotionNames = {
    "neutral", "calm", "happy", "sad", "angry", "fearful", "disgust", "surprised"};

std::string RavdessLabel::to_filename() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02d-%02d-%02d-%02d-%02d-%02d-%02d.wav", modality,
                  vocal_channel, emotion, intensity, statement, repetition, actor);
    return buf;
}

RavdessLabel parse_filename(const std::string& name) {
    const std::string base = fs::path(name).filename().string();

    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError("cannot parse RAVDESS filename \"" + base + "\": " + why);
    };

    // Expect exactly "NN-NN-NN-NN-NN-NN-NN.wav".
    if (base.size() != 24 || base.substr(20) != ".wav")
        throw fail("expected seven two-digit dash-separated fields plus .wav");
    int fields[7];
    for (int i = 0; i < 7; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * 3;
        const char a = base[off], b = base[off + 1];
        if (a < '0' || a > '9' || b < '0' || b > '9')
            throw fail("field " + std::to_string(i + 1) + " is not two digits");
        if (i < 6 && base[off + 2] != '-')
            throw fail("fields must be dash-separated");
        fields[i] = (a - '0') * 10 + (b - '0');
    }

    RavdessLabel label;
    label.modality = fields[0];
    label.vocal_channel = fields[1];
    label.emotion = fields[2];
    label.intensity = fields[3];
    label.statement = fields[4];
    label.repetition = fields[5];
    label.actor = fields[6];

    if (label.emotion < 1 || label.emotion > kNumEmotions)
        throw fail("emotion code " + std::to_string(label.emotion) + " outside 1.." +
                   std::to_string(kNumEmotions));
    if (label.intensity < 1 || label.intensity > 2)
        throw fail("intensity code " + std::to_string(label.intensity) + " outside 1..2");
    if (label.actor < 1 || label.actor > 24)
        throw fail("actor id " + std::to_string(label.actor) + " outside 1..24");
    return label;
}

DatasetIndex scan_dataset(const std::string& root, bool include_song) {
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw IoError("dataset root is not a readable directory: " + root);

    DatasetIndex index;
    for (fs::recursive_directory_iterator it(root, ec), end; it != end; it.increment(ec)) {
        if (ec) throw IoError("error scanning " + root + ": " + ec.message());
        if (!it->is_regular_file()) continue;
        const fs::path& p = it->path();
        if (p.extension() != ".wav") continue;
        try {
            RavdessLabel label = parse_filename(p.filename().string());
            if (!include_song && label.vocal_channel != 1) continue;
            index.entries.push_back({p.string(), label});
        } catch (const ParseError&) {
            index.skipped.push_back(p.string());
        }
    }

    std::sort(index.entries.begin(), index.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.path < b.path; });
    std::sort(index.skipped.begin(), index.skipped.end());

    if (index.entries.empty())
        throw DataError("no RAVDESS files found under " + root);

    for (const DatasetEntry& e : index.entries)
        index.class_counts[static_cast<std::size_t>(e.label.emotion_index())]++;
    return index;
}

void write_index_jsonl(const DatasetIndex& index, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write index file: " + path);
    for (const DatasetEntry& e : index.entries) {
        nlohmann::json j{{"path", e.path},
                         {"modality", e.label.modality},
                         {"vocal_channel", e.label.vocal_channel},
                         {"emotion", e.label.emotion},
                         {"emotion_name", kEmotionNames[static_cast<std::size_t>(e.label.emotion_index())]},
                         {"intensity", e.label.intensity},
                         {"statement", e.label.statement},
                         {"repetition", e.label.repetition},
                         {"actor", e.label.actor},
                         {"gender", e.label.actor_is_male() ? "male" : "female"}};
        out << j.dump() << "\n";
    }
}

namespace {

void check_split_pre(std::size_t n, double fraction) {
    if (n == 0) throw DataError("split: empty dataset index");
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DataError("split: fraction must lie strictly between 0 and 1");
}

void check_split_nonempty(const SplitSpec& s) {
    if (s.train.empty() || s.test.empty()) {
        std::ostringstream os;
        os << "degenerate split: " << s.train.size() << " train / " << s.test.size()
           << " test";
        throw DataError(os.str());
    }
}

} // namespace

SplitSpec split_dataset(const DatasetIndex& index, double fraction, std::uint64_t seed) {
    const std::size_t n = index.entries.size();
    check_split_pre(n, fraction);

    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    XorShift64 rng(seed);
    rng.shuffle(order);

    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

    SplitSpec spec;
    spec.train_fraction = fraction;
    spec.seed = seed;
    spec.train.assign(order.begin(), order.begin() + std::min(n_train, n));
    spec.test.assign(order.begin() + std::min(n_train, n), order.end());
    check_split_nonempty(spec);
    return spec;
}

SplitSpec split_dataset_speaker_disjoint(const DatasetIndex& index, double fraction,
                                         std::uint64_t seed) {
    const std::size_t n = index.entries.size();
    check_split_pre(n, fraction);

    std::set<int> actor_set;
    for (const DatasetEntry& e : index.entries) actor_set.insert(e.label.actor);
    std::vector<int> actors(actor_set.begin(), actor_set.end());
    XorShift64 rng(seed);
    rng.shuffle(actors);

    const std::size_t want_train =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::set<int> train_actors;
    std::size_t have = 0;
    for (int a : actors) {
        if (have >= want_train) break;
        train_actors.insert(a);
        for (const DatasetEntry& e : index.entries)
            if (e.label.actor == a) ++have;
    }

    SplitSpec spec;
    spec.train_fraction = fraction;
    spec.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        if (train_actors.count(index.entries[i].label.actor))
            spec.train.push_back(static_cast<int>(i));
        else
            spec.test.push_back(static_cast<int>(i));
    }
    check_split_nonempty(spec);
    return spec;
}

Matrix label_to_onehot(const RavdessLabel& label) {
    Matrix row(1, kNumEmotions);
    row(0, label.emotion_index()) = 1.0;
    return row;
}

} // namespace ser
