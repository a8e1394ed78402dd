#ifndef SER_METRICS_HPP
#define SER_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ser/error.hpp"

namespace ser {

// True-class x predicted-class count grid.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<std::int64_t> counts; // row-major, rows = true class

    explicit ConfusionMatrix(int classes);
    void add(int true_class, int predicted_class);
    std::int64_t at(int t, int p) const {
        return counts[static_cast<std::size_t>(t) * num_classes + p];
    }
    std::int64_t total() const;
    std::int64_t trace() const;
    std::int64_t row_sum(int t) const;
    std::int64_t col_sum(int p) const;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> per_class_recall;    // diagonal / row sum, 0 when row empty
    std::vector<double> per_class_precision; // diagonal / column sum
    std::vector<double> per_class_f1;
    double macro_f1 = 0.0;
    std::vector<bool> recall_undefined; // true where the class had no test samples
    double latency_mean_s = 0.0;        // per-clip inference, feature -> probability
    double latency_p95_s = 0.0;
    int latency_reps = 0;
    ConfusionMatrix confusion{1};
};

// All ratios derive from the confusion matrix alone; recall for an absent
// class is reported as 0 and flagged, and macro F1 is the unweighted mean
// over all classes.
MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                         const std::string& path);

// Row-normalized heatmap with per-cell counts, one SVG text file.
void write_confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                         const std::string& path);

} // namespace ser

#endif
