#include "ser/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "ser/adam.hpp"
#include "ser/rng.hpp"
#include "ser/wav.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ser {

namespace {

using nlohmann::json;

// Dropout stream for sample `entry` in epoch `epoch`; depends only on the
// run seed and the sample's identity, never on the thread that runs it.
std::uint64_t dropout_seed_for(std::uint64_t run_seed, int epoch, int entry) {
    return derive_seed(run_seed, (static_cast<std::uint64_t>(epoch) << 32) |
                                     static_cast<std::uint64_t>(entry),
                       0xD80FULL);
}

int predict_class(const ModelParams& params, const Matrix& standardized) {
    ForwardCache cache = model_forward(params, standardized, /*training=*/false);
    int argmax = 0;
    for (int c = 1; c < cache.probs.cols; ++c)
        if (cache.probs(0, c) > cache.probs(0, argmax)) argmax = c;
    return argmax;
}

std::vector<std::string> emotion_name_vec() {
    std::vector<std::string> names;
    for (const char* n : kEmotionNames) names.emplace_back(n);
    return names;
}

} // namespace

DatasetIndex TrainData::as_index() const {
    DatasetIndex index;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        index.entries.push_back({paths[i], labels[i]});
        index.class_counts[static_cast<std::size_t>(labels[i].emotion_index())]++;
    }
    return index;
}

TrainData featurize_dataset(const DatasetIndex& index, const MfccConfig& cfg, int jobs,
                            std::vector<FeaturizeFailure>* failures) {
    cfg.validate();
    const std::size_t n = index.entries.size();
    std::vector<FeatureMatrix> slots(n);
    std::vector<bool> ok(n, false);
    std::vector<bool> was_padded(n, false);
    std::vector<std::string> errors(n);

    auto featurize_one = [&](std::size_t i) {
        try {
            AudioClip clip = read_wav(index.entries[i].path);
            clip = to_mono(clip);
            clip = resample(clip, kModelSampleRate);
            FeaturizeResult r = featurize_clip(clip, cfg);
            slots[i] = std::move(r.features);
            was_padded[i] = r.padded;
            ok[i] = true;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    };

#ifdef _OPENMP
    if (jobs > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
        for (long i = 0; i < static_cast<long>(n); ++i)
            featurize_one(static_cast<std::size_t>(i));
    } else
#endif
    {
        (void)jobs;
        for (std::size_t i = 0; i < n; ++i) featurize_one(i);
    }

    TrainData data;
    data.mfcc = cfg;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) {
            if (failures) failures->push_back({index.entries[i].path, errors[i]});
            continue;
        }
        data.paths.push_back(index.entries[i].path);
        data.labels.push_back(index.entries[i].label);
        data.features.push_back(std::move(slots[i]));
        data.padded.push_back(was_padded[i]);
    }
    return data;
}

TrainData archive_to_train_data(const FeatureArchive& archive) {
    TrainData data;
    data.mfcc = archive.mfcc;
    data.paths = archive.paths;
    data.labels = archive.labels;
    data.features = archive.features;
    data.padded.assign(archive.padded.begin(), archive.padded.end());
    return data;
}

FeatureArchive train_data_to_archive(const TrainData& data) {
    FeatureArchive archive;
    archive.mfcc = data.mfcc;
    archive.paths = data.paths;
    archive.labels = data.labels;
    archive.features = data.features;
    archive.padded.assign(data.padded.begin(), data.padded.end());
    return archive;
}

TrainResult train_model(const RunConfig& cfg, const TrainData& data, const SplitSpec& split,
                        std::ostream* progress, const std::string& abort_dir,
                        const Checkpoint* resume) {
    cfg.validate();
    if (data.size() == 0) throw DataError("train: no featurized data");
    const ModelConfig mc = cfg.model_config();

    const LrSchedule sched =
        cfg.schedule == "step" ? LrSchedule::Step : LrSchedule::Exponential;

    ModelParams params = ModelParams::init(mc, cfg.seed);
    AdamState adam = AdamState::create(mc);
    FeatureStats stats;
    int start_epoch = 0;
    if (resume != nullptr) {
        check_config_compatible(mc, resume->params.cfg);
        if (!resume->has_adam)
            throw ConfigError("checkpoint has no optimizer moments; it can be used for "
                              "inference but not to resume training");
        params = resume->params;
        adam = resume->adam;
        stats = resume->stats;
        start_epoch = resume->meta.epoch;
    } else {
        stats = compute_feature_stats(data.features, split.train);
    }

    // Standardize once; training and evaluation reuse these.
    std::vector<Matrix> standardized;
    standardized.reserve(data.size());
    for (const FeatureMatrix& f : data.features)
        standardized.push_back(apply_feature_stats(stats, f.frames));

    TrainMeta meta;
    meta.seed = cfg.seed;
    meta.lr0 = cfg.lr0;
    meta.decay = cfg.decay;
    meta.schedule = cfg.schedule;
    meta.step_every = cfg.step_every;

    auto snapshot = [&](int epochs_done) {
        Checkpoint ckpt;
        ckpt.params = params;
        ckpt.stats = stats;
        ckpt.meta = meta;
        ckpt.meta.epoch = epochs_done;
        ckpt.has_adam = true;
        ckpt.adam = adam;
        return ckpt;
    };

    TrainResult result;
    Checkpoint last_good = snapshot(start_epoch);
    double best_test_acc = -1.0;
    const int jobs = cfg.effective_jobs();

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const double lr_t = lr_schedule(epoch, cfg.lr0, cfg.decay, sched, cfg.step_every);

        std::vector<int> order = split.train;
        XorShift64 shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xBA7C4ULL));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        std::size_t seen = 0;

        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t b1 =
                std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t bn = b1 - b0;

            std::vector<const Matrix*> feats(bn);
            std::vector<int> labels(bn);
            std::vector<std::uint64_t> seeds(bn);
            for (std::size_t k = 0; k < bn; ++k) {
                const int idx = order[b0 + k];
                feats[k] = &standardized[static_cast<std::size_t>(idx)];
                labels[k] = data.labels[static_cast<std::size_t>(idx)].emotion_index();
                seeds[k] = dropout_seed_for(cfg.seed, epoch, idx);
            }

            ModelParams grads = ModelParams::zeros(mc);
            BatchStats batch = batch_forward_backward(params, feats, labels, seeds,
                                                      /*training=*/true, jobs, grads);
            if (!std::isfinite(batch.mean_loss)) {
                if (!abort_dir.empty()) {
                    std::filesystem::create_directories(abort_dir);
                    save_checkpoint(last_good,
                                    (std::filesystem::path(abort_dir) /
                                     "checkpoint_lastgood.serlstm").string());
                }
                throw NumericError("train: non-finite loss in epoch " + std::to_string(epoch) +
                                   "; last-good checkpoint retained" +
                                   (abort_dir.empty() ? "" : " in " + abort_dir));
            }
            if (lr_t > 0.0) adam_step(params, grads, adam, lr_t, cfg.grad_clip);

            // Last partial batch counts with its true size.
            loss_sum += batch.mean_loss * static_cast<double>(bn);
            correct += batch.correct;
            seen += bn;
        }

        // Inference-mode accuracy on the held-out entries; the integer
        // reduction makes this deterministic at any thread count.
        std::int64_t test_correct = 0;
        const std::size_t tn = split.test.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : test_correct) num_threads(jobs) \
    if (jobs > 1 && tn > 1)
#endif
        for (long k = 0; k < static_cast<long>(tn); ++k) {
            const int idx = split.test[static_cast<std::size_t>(k)];
            if (predict_class(params, standardized[static_cast<std::size_t>(idx)]) ==
                data.labels[static_cast<std::size_t>(idx)].emotion_index())
                ++test_correct;
        }

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr_t;
        log.train_loss = loss_sum / static_cast<double>(seen);
        log.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        log.test_acc = tn > 0 ? static_cast<double>(test_correct) / static_cast<double>(tn) : 0.0;
        result.log.push_back(log);

        if (progress) {
            (*progress) << "epoch " << epoch << " lr " << lr_t << " train_loss "
                        << log.train_loss << " train_acc " << log.train_acc << " test_acc "
                        << log.test_acc << "\n";
        }

        last_good = snapshot(epoch + 1);
        if (log.test_acc > best_test_acc) {
            best_test_acc = log.test_acc;
            result.best_ckpt = last_good;
        }
    }

    result.final_ckpt = snapshot(cfg.epochs);
    if (best_test_acc < 0.0) result.best_ckpt = result.final_ckpt;
    return result;
}

MetricsReport evaluate_model(const ModelParams& params, const FeatureStats& stats,
                             const TrainData& data, std::span<const int> entry_indices,
                             int jobs, int min_latency_reps) {
    if (entry_indices.empty()) throw DataError("evaluate: no entries to evaluate");
    const std::size_t n = entry_indices.size();

    std::vector<Matrix> standardized;
    standardized.reserve(n);
    for (int idx : entry_indices)
        standardized.push_back(
            apply_feature_stats(stats, data.features[static_cast<std::size_t>(idx)].frames));

    std::vector<int> predictions(n, -1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(jobs) if (jobs > 1 && n > 1)
#endif
    for (long k = 0; k < static_cast<long>(n); ++k)
        predictions[static_cast<std::size_t>(k)] =
            predict_class(params, standardized[static_cast<std::size_t>(k)]);

    ConfusionMatrix cm(params.cfg.num_classes);
    std::int64_t streaming_correct = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const int truth =
            data.labels[static_cast<std::size_t>(entry_indices[k])].emotion_index();
        cm.add(truth, predictions[k]);
        if (predictions[k] == truth) ++streaming_correct;
    }
    if (cm.trace() != streaming_correct)
        throw NumericError("evaluate: confusion trace disagrees with streaming counter");

    MetricsReport report = metrics_from_confusion(cm);

    // Per-clip latency of the feature -> probability path, timed serially.
    const int reps = static_cast<int>(
        n >= static_cast<std::size_t>(min_latency_reps)
            ? n
            : ((static_cast<std::size_t>(min_latency_reps) + n - 1) / n) * n);
    std::vector<double> elapsed(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const std::size_t k = static_cast<std::size_t>(r) % n;
        const Matrix& raw = data.features[static_cast<std::size_t>(entry_indices[k])].frames;
        const auto t0 = std::chrono::steady_clock::now();
        const Matrix prepared = apply_feature_stats(stats, raw);
        volatile int sink = predict_class(params, prepared);
        (void)sink;
        const auto t1 = std::chrono::steady_clock::now();
        elapsed[static_cast<std::size_t>(r)] =
            std::chrono::duration<double>(t1 - t0).count();
    }
    std::sort(elapsed.begin(), elapsed.end());
    report.latency_reps = reps;
    report.latency_mean_s =
        std::accumulate(elapsed.begin(), elapsed.end(), 0.0) / static_cast<double>(reps);
    const std::size_t p95_idx = static_cast<std::size_t>(
        std::min<double>(std::ceil(0.95 * reps), static_cast<double>(reps)) - 1);
    report.latency_p95_s = elapsed[p95_idx];
    return report;
}

void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write train log: " + path);
    out.precision(17);
    out << "epoch,lr,train_loss,train_acc,test_acc\n";
    for (const EpochLog& e : log)
        out << e.epoch << "," << e.lr << "," << e.train_loss << "," << e.train_acc << ","
            << e.test_acc << "\n";
}

void write_eval_artifacts(const MetricsReport& report, std::int64_t param_count,
                          const std::string& out_dir, const std::string& prefix) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const std::vector<std::string> names = emotion_name_vec();

    json per_class = json::array();
    for (int c = 0; c < report.confusion.num_classes; ++c) {
        per_class.push_back(
            json{{"name", c < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                             : std::to_string(c)},
                 {"recall", report.per_class_recall[static_cast<std::size_t>(c)]},
                 {"precision", report.per_class_precision[static_cast<std::size_t>(c)]},
                 {"f1", report.per_class_f1[static_cast<std::size_t>(c)]},
                 {"support", report.confusion.row_sum(c)},
                 {"recall_undefined",
                  static_cast<bool>(report.recall_undefined[static_cast<std::size_t>(c)])}});
    }
    json confusion = json::array();
    for (int t = 0; t < report.confusion.num_classes; ++t) {
        json row = json::array();
        for (int p = 0; p < report.confusion.num_classes; ++p)
            row.push_back(report.confusion.at(t, p));
        confusion.push_back(row);
    }
    json metrics{{"accuracy", report.accuracy},
                 {"macro_f1", report.macro_f1},
                 {"per_class", per_class},
                 {"confusion", confusion},
                 {"total", report.confusion.total()},
                 {"param_count", param_count}};
    {
        std::ofstream out(dir / (prefix + "metrics.json"));
        if (!out) throw IoError("cannot write metrics.json in " + out_dir);
        out << metrics.dump(2) << "\n";
    }
    // Timing lives in its own file: every other artifact is byte-reproducible
    // for a fixed seed, measured wall time is not.
    json latency{{"latency_mean_s", report.latency_mean_s},
                 {"latency_p95_s", report.latency_p95_s},
                 {"reps", report.latency_reps},
                 {"param_count", param_count}};
    {
        std::ofstream out(dir / (prefix + "latency.json"));
        if (!out) throw IoError("cannot write latency.json in " + out_dir);
        out << latency.dump(2) << "\n";
    }

    const std::vector<std::string> class_names = [&] {
        std::vector<std::string> v;
        for (int c = 0; c < report.confusion.num_classes; ++c)
            v.push_back(c < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                           : std::to_string(c));
        return v;
    }();
    write_confusion_csv(report.confusion, class_names, (dir / (prefix + "confusion.csv")).string());
    write_confusion_svg(report.confusion, class_names, (dir / (prefix + "confusion.svg")).string());
}

CompareResult compare_architectures(const RunConfig& cfg, const TrainData& data,
                                    const SplitSpec& split, std::ostream* progress,
                                    const std::string& out_dir) {
    CompareResult result;
    for (int variant = 0; variant < 2; ++variant) {
        RunConfig vcfg = cfg;
        vcfg.num_lstm_layers = variant + 1;
        const std::string prefix =
            vcfg.num_lstm_layers == 1 ? "single_layer_" : "dual_layer_";
        if (progress)
            (*progress) << "=== training " << vcfg.num_lstm_layers << "-layer variant ===\n";

        TrainResult tr = train_model(vcfg, data, split, progress, out_dir);
        MetricsReport report =
            evaluate_model(tr.final_ckpt.params, tr.final_ckpt.stats, data, split.test,
                           cfg.effective_jobs());

        if (!out_dir.empty()) {
            write_eval_artifacts(report, vcfg.model_config().param_count(), out_dir, prefix);
            write_train_log_csv(tr.log, (std::filesystem::path(out_dir) /
                                         (prefix + "train_log.csv")).string());
            save_checkpoint(tr.final_ckpt, (std::filesystem::path(out_dir) /
                                            (prefix + "checkpoint_final.serlstm")).string());
        }

        CompareVariant& row = result.variants[variant];
        row.num_lstm_layers = vcfg.num_lstm_layers;
        row.param_count = vcfg.model_config().param_count();
        row.accuracy = report.accuracy;
        row.macro_f1 = report.macro_f1;
        row.latency_mean_s = report.latency_mean_s;
        row.latency_p95_s = report.latency_p95_s;
    }
    return result;
}

void write_compare_json(const CompareResult& result, const std::string& path) {
    json variants = json::array();
    for (const CompareVariant& v : result.variants) {
        variants.push_back(json{{"num_lstm_layers", v.num_lstm_layers},
                                {"param_count", v.param_count},
                                {"accuracy", v.accuracy},
                                {"macro_f1", v.macro_f1},
                                {"latency_mean_s", v.latency_mean_s},
                                {"latency_p95_s", v.latency_p95_s}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write compare report: " + path);
    out << json{{"variants", variants}}.dump(2) << "\n";
}

} // namespace ser
