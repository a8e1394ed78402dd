#ifndef SER_CHECKPOINT_HPP
#define SER_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ser/adam.hpp"
#include "ser/dataset.hpp"
#include "ser/lstm.hpp"
#include "ser/mfcc.hpp"

namespace ser {

// Container layout shared by checkpoints ("SERLSTM1") and feature archives
// ("SERFEAT1"), documented byte-exactly in the README:
//   [0..7]   magic, 8 ASCII bytes
//   [8..11]  u32 little-endian format version (currently 1)
//   [12..19] u64 little-endian JSON header length
//   [20..]   UTF-8 JSON header: config, metadata and an array manifest of
//            {name, rows, cols, dtype, offset}
//   then raw float64 little-endian arrays, offsets relative to the end of
//   the header, in manifest order.
constexpr std::uint32_t kContainerVersion = 1;

struct TrainMeta {
    std::uint64_t seed = 0;
    int epoch = 0; // epochs completed when the checkpoint was written
    double lr0 = 0.001;
    double decay = 0.98;
    std::string schedule = "exp"; // "exp" or "step"
    int step_every = 20;
};

struct Checkpoint {
    ModelParams params;      // includes the ModelConfig snapshot
    FeatureStats stats;      // per-coefficient standardization, 2 x input_dim
    TrainMeta meta;
    bool has_adam = false;   // moments are optional; inference never needs them
    AdamState adam;
};

// Writes the full checkpoint. load(save(x)) reproduces every array bit for
// bit on any host; all multi-byte values are little-endian on disk.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Validates magic, version and manifest before touching any array, then
// reconstructs and re-validates all types (shapes, finiteness). Errors:
// FormatError for wrong magic / version / truncation (naming the array),
// IoError for filesystem failures.
Checkpoint load_checkpoint(const std::string& path);

// Throws ConfigError listing every differing field.
void check_config_compatible(const ModelConfig& expected, const ModelConfig& actual);

// Per-clip MFCC features with their labels, same container with the
// "SERFEAT1" magic.
struct FeatureArchive {
    MfccConfig mfcc;
    std::vector<std::string> paths;
    std::vector<RavdessLabel> labels;
    std::vector<bool> padded; // true where the clip was zero-padded
    std::vector<FeatureMatrix> features;
};

void save_feature_archive(const FeatureArchive& archive, const std::string& path);
FeatureArchive load_feature_archive(const std::string& path);

} // namespace ser

#endif
