#include "ser/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ser {

ConfusionMatrix::ConfusionMatrix(int classes) : num_classes(classes) {
    if (classes < 1) throw ShapeError("ConfusionMatrix: need at least one class");
    counts.assign(static_cast<std::size_t>(classes) * classes, 0);
}

void ConfusionMatrix::add(int true_class, int predicted_class) {
    if (true_class < 0 || true_class >= num_classes || predicted_class < 0 ||
        predicted_class >= num_classes)
        throw ShapeError("ConfusionMatrix::add: class index out of range");
    counts[static_cast<std::size_t>(true_class) * num_classes + predicted_class]++;
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), static_cast<std::int64_t>(0));
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (int i = 0; i < num_classes; ++i) s += at(i, i);
    return s;
}

std::int64_t ConfusionMatrix::row_sum(int t) const {
    std::int64_t s = 0;
    for (int p = 0; p < num_classes; ++p) s += at(t, p);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(int p) const {
    std::int64_t s = 0;
    for (int t = 0; t < num_classes; ++t) s += at(t, p);
    return s;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
    MetricsReport r;
    r.confusion = cm;
    const int n = cm.num_classes;
    const std::int64_t total = cm.total();
    r.accuracy = total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;

    r.per_class_recall.resize(static_cast<std::size_t>(n), 0.0);
    r.per_class_precision.resize(static_cast<std::size_t>(n), 0.0);
    r.per_class_f1.resize(static_cast<std::size_t>(n), 0.0);
    r.recall_undefined.resize(static_cast<std::size_t>(n), false);

    for (int c = 0; c < n; ++c) {
        const std::int64_t row = cm.row_sum(c);
        const std::int64_t col = cm.col_sum(c);
        const std::int64_t tp = cm.at(c, c);
        const double recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        const double precision =
            col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        r.recall_undefined[static_cast<std::size_t>(c)] = row == 0;
        r.per_class_recall[static_cast<std::size_t>(c)] = recall;
        r.per_class_precision[static_cast<std::size_t>(c)] = precision;
        r.per_class_f1[static_cast<std::size_t>(c)] =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    r.macro_f1 = std::accumulate(r.per_class_f1.begin(), r.per_class_f1.end(), 0.0) /
                 static_cast<double>(n);
    return r;
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write confusion CSV: " + path);
    out << "true\\pred";
    for (int p = 0; p < cm.num_classes; ++p) out << "," << names[static_cast<std::size_t>(p)];
    out << "\n";
    for (int t = 0; t < cm.num_classes; ++t) {
        out << names[static_cast<std::size_t>(t)];
        for (int p = 0; p < cm.num_classes; ++p) out << "," << cm.at(t, p);
        out << "\n";
    }
}

void write_confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                         const std::string& path) {
    const int n = cm.num_classes;
    const int cell = 56, margin = 96, legend = 24;
    const int width = margin + n * cell + legend;
    const int height = margin + n * cell + legend;

    std::ofstream out(path);
    if (!out) throw IoError("cannot write confusion SVG: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    for (int t = 0; t < n; ++t) {
        const std::int64_t row = cm.row_sum(t);
        for (int p = 0; p < n; ++p) {
            const double share =
                row > 0 ? static_cast<double>(cm.at(t, p)) / static_cast<double>(row) : 0.0;
            // white -> steel blue ramp on the row-normalized share
            const int rch = static_cast<int>(255 - share * (255 - 70));
            const int gch = static_cast<int>(255 - share * (255 - 130));
            const int bch = static_cast<int>(255 - share * (255 - 180));
            const int x = margin + p * cell, y = margin + t * cell;
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << rch << "," << gch << ","
                << bch << ")\" stroke=\"#888\"/>\n";
            out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" fill=\"" << (share > 0.55 ? "white" : "black")
                << "\">" << cm.at(t, p) << "</text>\n";
        }
    }
    for (int i = 0; i < n; ++i) {
        out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + i * cell + cell / 2 + 4
            << "\" text-anchor=\"end\">" << names[static_cast<std::size_t>(i)] << "</text>\n";
        out << "<text x=\"" << margin + i * cell + cell / 2 << "\" y=\"" << margin - 8
            << "\" text-anchor=\"middle\" transform=\"rotate(-35 "
            << margin + i * cell + cell / 2 << " " << margin - 8 << ")\">"
            << names[static_cast<std::size_t>(i)] << "</text>\n";
    }
    out << "<text x=\"" << margin / 4 << "\" y=\"" << margin + n * cell / 2
        << "\" transform=\"rotate(-90 " << margin / 4 << " " << margin + n * cell / 2
        << ")\" text-anchor=\"middle\">true</text>\n";
    out << "<text x=\"" << margin + n * cell / 2 << "\" y=\"" << margin / 4
        << "\" text-anchor=\"middle\">predicted</text>\n";
    out << "</svg>\n";
}

} // namespace ser
