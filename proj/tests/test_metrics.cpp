#include <fstream>

#include <doctest.h>

#include "ser/metrics.hpp"
#include "tempdir.hpp"

using namespace ser;
using ser::testing::TempDir;

TEST_CASE("toy 2-class confusion matrix, metrics from first principles") {
    // [[3,1],[2,4]]: 10 samples, 7 on the diagonal
    ConfusionMatrix cm(2);
    for (int i = 0; i < 3; ++i) cm.add(0, 0);
    cm.add(0, 1);
    for (int i = 0; i < 2; ++i) cm.add(1, 0);
    for (int i = 0; i < 4; ++i) cm.add(1, 1);

    CHECK(cm.total() == 10);
    CHECK(cm.trace() == 7);

    MetricsReport r = metrics_from_confusion(cm);
    CHECK(r.accuracy == doctest::Approx(0.7).epsilon(1e-15));

    // recall: diagonal over row sums
    CHECK(r.per_class_recall[0] == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
    CHECK(r.per_class_recall[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-15));

    // precision: diagonal over column sums
    CHECK(r.per_class_precision[0] == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
    CHECK(r.per_class_precision[1] == doctest::Approx(4.0 / 5.0).epsilon(1e-15));

    // f1 from the definitions, computed inline
    const double p0 = 0.6, r0 = 0.75;
    CHECK(r.per_class_f1[0] == doctest::Approx(2.0 * p0 * r0 / (p0 + r0)).epsilon(1e-15));
    const double p1 = 0.8, r1 = 2.0 / 3.0;
    CHECK(r.per_class_f1[1] == doctest::Approx(2.0 * p1 * r1 / (p1 + r1)).epsilon(1e-15));
    CHECK(r.macro_f1 ==
          doctest::Approx(0.5 * (r.per_class_f1[0] + r.per_class_f1[1])).epsilon(1e-15));
}

TEST_CASE("all-correct predictions give perfect scores") {
    ConfusionMatrix cm(8);
    for (int c = 0; c < 8; ++c)
        for (int i = 0; i < 5; ++i) cm.add(c, c);
    MetricsReport r = metrics_from_confusion(cm);
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);
    for (int c = 0; c < 8; ++c) {
        CHECK(r.per_class_recall[static_cast<std::size_t>(c)] == 1.0);
        CHECK_FALSE(r.recall_undefined[static_cast<std::size_t>(c)]);
    }
}

TEST_CASE("a class with no samples reports recall 0 and a flag") {
    ConfusionMatrix cm(3);
    cm.add(0, 0);
    cm.add(1, 1); // class 2 never appears
    MetricsReport r = metrics_from_confusion(cm);
    CHECK(r.per_class_recall[2] == 0.0);
    CHECK(r.recall_undefined[2]);
    CHECK_FALSE(r.recall_undefined[0]);
    // accuracy still derives from the trace
    CHECK(r.accuracy == 1.0);
}

TEST_CASE("accuracy equals trace over total for random fills") {
    ConfusionMatrix cm(4);
    int next = 1;
    for (int t = 0; t < 4; ++t)
        for (int p = 0; p < 4; ++p)
            for (int k = 0; k < (t * 4 + p + next) % 5; ++k) cm.add(t, p);
    MetricsReport r = metrics_from_confusion(cm);
    CHECK(r.accuracy ==
          doctest::Approx(static_cast<double>(cm.trace()) / static_cast<double>(cm.total()))
              .epsilon(1e-15));
}

TEST_CASE("confusion matrix rejects out-of-range classes") {
    ConfusionMatrix cm(4);
    CHECK_THROWS_AS(cm.add(4, 0), ShapeError);
    CHECK_THROWS_AS(cm.add(0, -1), ShapeError);
}

TEST_CASE("csv and svg emission") {
    TempDir dir("metrics_files");
    ConfusionMatrix cm(2);
    cm.add(0, 0);
    cm.add(0, 0);
    cm.add(1, 0);
    cm.add(1, 1);
    const std::vector<std::string> names{"no", "yes"};

    write_confusion_csv(cm, names, dir.file("c.csv"));
    std::ifstream csv(dir.file("c.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "true\\pred,no,yes");
    std::getline(csv, line);
    CHECK(line == "no,2,0");
    std::getline(csv, line);
    CHECK(line == "yes,1,1");

    write_confusion_svg(cm, names, dir.file("c.svg"));
    std::ifstream svg(dir.file("c.svg"));
    std::string all((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(all.find("<svg") != std::string::npos);
    CHECK(all.find(">2<") != std::string::npos); // the count appears in a cell
    CHECK(all.find("predicted") != std::string::npos);
}
