#ifndef SER_TRAIN_HPP
#define SER_TRAIN_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ser/checkpoint.hpp"
#include "ser/config.hpp"
#include "ser/dataset.hpp"
#include "ser/metrics.hpp"
#include "ser/mfcc.hpp"

namespace ser {

// Featurized dataset held in memory: one (target_frames x num_coeffs) matrix
// per clip plus its label. Rows stay aligned across the four vectors.
struct TrainData {
    MfccConfig mfcc;
    std::vector<std::string> paths;
    std::vector<RavdessLabel> labels;
    std::vector<FeatureMatrix> features;
    std::vector<bool> padded;

    std::size_t size() const { return paths.size(); }
    DatasetIndex as_index() const; // for splitting after featurization
};

struct FeaturizeFailure {
    std::string path;
    std::string reason;
};

// Decodes, downmixes, resamples and featurizes every entry. Files are
// processed in parallel (jobs > 1) but stored in entry order, so the result
// is independent of the thread count. Failing files are skipped and
// reported; the caller decides whether the failure rate is acceptable.
TrainData featurize_dataset(const DatasetIndex& index, const MfccConfig& cfg, int jobs,
                            std::vector<FeaturizeFailure>* failures = nullptr);

TrainData archive_to_train_data(const FeatureArchive& archive);
FeatureArchive train_data_to_archive(const TrainData& data);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct TrainResult {
    Checkpoint final_ckpt;
    Checkpoint best_ckpt; // highest test accuracy seen (first epoch on ties)
    std::vector<EpochLog> log;
};

// Full training run: standardization statistics from the training split
// only, shuffled batches each epoch, Adam with the configured learning-rate
// schedule, per-epoch train/test accuracy. A non-finite batch loss aborts
// with NumericError after writing checkpoint_lastgood.serlstm to
// abort_dir (when non-empty) holding the last completed epoch's parameters.
// `resume` continues from a checkpoint; it must carry optimizer moments.
TrainResult train_model(const RunConfig& cfg, const TrainData& data, const SplitSpec& split,
                        std::ostream* progress = nullptr, const std::string& abort_dir = "",
                        const Checkpoint* resume = nullptr);

// Inference over the given entries: populates the confusion matrix and all
// derived metrics, then times the feature->probability path serially
// (at least min_latency_reps repetitions, cycling through the entries).
MetricsReport evaluate_model(const ModelParams& params, const FeatureStats& stats,
                             const TrainData& data, std::span<const int> entry_indices,
                             int jobs, int min_latency_reps = 100);

// epoch,lr,train_loss,train_acc,test_acc rows at full precision.
void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path);

// metrics.json (deterministic), latency.json (timing), confusion.csv and
// confusion.svg under out_dir, each named <prefix>... when prefix is given.
void write_eval_artifacts(const MetricsReport& report, std::int64_t param_count,
                          const std::string& out_dir, const std::string& prefix = "");

struct CompareVariant {
    int num_lstm_layers = 0;
    std::int64_t param_count = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double latency_mean_s = 0.0;
    double latency_p95_s = 0.0;
};

struct CompareResult {
    CompareVariant variants[2]; // [0] single layer, [1] dual layer
};

// Trains and evaluates the 1- and 2-layer variants under identical data,
// split, seed and hyperparameters, writing per-variant artifacts.
CompareResult compare_architectures(const RunConfig& cfg, const TrainData& data,
                                    const SplitSpec& split, std::ostream* progress,
                                    const std::string& out_dir);

void write_compare_json(const CompareResult& result, const std::string& path);

} // namespace ser

#endif
