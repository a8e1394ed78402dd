#ifndef SER_CONFIG_HPP
#define SER_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ser/lstm.hpp"
#include "ser/mfcc.hpp"

namespace ser {

// Merged run configuration: dataset discovery, split, MFCC front-end, model
// and training hyperparameters. Loaded from a flat key=value file with
// [section] headers; command-line flags override file values. Unknown keys
// are hard errors so typos never silently fall back to defaults.
struct RunConfig {
    // [dataset]
    std::string dataset_root;
    bool include_song = false;

    // [split]
    double split_fraction = 0.8;
    bool speaker_disjoint = false;

    // [mfcc]
    MfccConfig mfcc;

    // [model]
    int num_lstm_layers = 2;
    int hidden_dim = 128;
    double dropout_rate = 0.001;
    bool flatten_all = true;

    // [train]
    int epochs = 60;
    int batch_size = 64;
    double lr0 = 0.001;
    double decay = 0.98;
    std::string schedule = "exp"; // "exp" or "step"
    int step_every = 20;
    std::uint64_t seed = 1;
    double grad_clip = 0.0; // 0 disables clipping

    // [run]
    int jobs = 0; // 0 = all available CPUs; 1 = bitwise-deterministic path

    ModelConfig model_config() const;
    void validate() const;

    // Applies key=value assignments from the file at `path`. Throws
    // ConfigError for unknown sections/keys and unparseable values.
    void load_file(const std::string& path);

    // One "section.key = value" line per field, full precision.
    void print(std::ostream& out) const;

    int effective_jobs() const;
};

} // namespace ser

#endif
