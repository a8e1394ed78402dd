#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ser/checkpoint.hpp"
#include "ser/config.hpp"
#include "ser/dataset.hpp"
#include "ser/lstm.hpp"
#include "ser/train.hpp"
#include "ser/wav.hpp"

namespace fs = std::filesystem;
using namespace ser;

namespace {

// Exit codes: 0 success, 1 usage/config, 2 data, 3 numeric.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Options {
    RunConfig cfg;
    std::string config_path;
    std::string out_dir = "serlstm_run";
    std::string features_path;
    std::string resume_path;
    std::string root_arg;
    int digits = 17;
    bool print_config = false;
};

std::string resolve_root(const Options& opts) {
    if (!opts.root_arg.empty()) return opts.root_arg;
    if (!opts.cfg.dataset_root.empty()) return opts.cfg.dataset_root;
    if (const char* env = std::getenv("SER_LSTM_DATA"); env && *env) return env;
    throw ConfigError("no dataset root given (positional argument, dataset.root in the "
                      "config file, or SER_LSTM_DATA)");
}

// Registers the options shared by the pipeline subcommands. File values are
// applied first, then any flag that was actually passed overrides them.
void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("--config", opts.config_path, "key=value configuration file");
    cmd->add_option("--seed", opts.cfg.seed, "run seed");
    cmd->add_option("--epochs", opts.cfg.epochs, "training epochs");
    cmd->add_option("--batch-size", opts.cfg.batch_size, "minibatch size");
    cmd->add_option("--lr0", opts.cfg.lr0, "initial learning rate");
    cmd->add_option("--decay", opts.cfg.decay, "per-epoch learning-rate decay factor");
    cmd->add_option("--layers", opts.cfg.num_lstm_layers, "number of LSTM layers (1 or 2)");
    cmd->add_option("--hidden", opts.cfg.hidden_dim, "LSTM hidden units");
    cmd->add_option("--dropout", opts.cfg.dropout_rate, "inter-layer dropout rate");
    cmd->add_option("--fraction", opts.cfg.split_fraction, "training split fraction");
    cmd->add_flag("--include-song", opts.cfg.include_song, "include song recordings");
    cmd->add_flag("--speaker-disjoint", opts.cfg.speaker_disjoint,
                  "split by actor instead of by file");
    cmd->add_option("--jobs", opts.cfg.jobs,
                    "worker threads (0 = all CPUs; 1 = bitwise-deterministic)");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--digits", opts.digits, "significant digits in printed numbers");
    cmd->add_flag("--print-config", opts.print_config, "print the merged configuration");
}

// The config file must be applied before flag overrides, so flags are staged
// into a scratch config during parsing and re-applied afterwards.
void merge_config_file(CLI::App* cmd, Options& opts) {
    if (opts.config_path.empty()) return;
    RunConfig merged;
    merged.load_file(opts.config_path);
    RunConfig& flags = opts.cfg;
    if (cmd->count("--seed")) merged.seed = flags.seed;
    if (cmd->count("--epochs")) merged.epochs = flags.epochs;
    if (cmd->count("--batch-size")) merged.batch_size = flags.batch_size;
    if (cmd->count("--lr0")) merged.lr0 = flags.lr0;
    if (cmd->count("--decay")) merged.decay = flags.decay;
    if (cmd->count("--layers")) merged.num_lstm_layers = flags.num_lstm_layers;
    if (cmd->count("--hidden")) merged.hidden_dim = flags.hidden_dim;
    if (cmd->count("--dropout")) merged.dropout_rate = flags.dropout_rate;
    if (cmd->count("--fraction")) merged.split_fraction = flags.split_fraction;
    if (cmd->count("--include-song")) merged.include_song = flags.include_song;
    if (cmd->count("--speaker-disjoint")) merged.speaker_disjoint = flags.speaker_disjoint;
    if (cmd->count("--jobs")) merged.jobs = flags.jobs;
    opts.cfg = merged;
}

void maybe_print_config(const Options& opts) {
    if (opts.print_config) opts.cfg.print(std::cout);
}

void print_class_counts(const DatasetIndex& index) {
    std::cout << "emotion counts:\n";
    for (int c = 0; c < kNumEmotions; ++c)
        std::cout << "  " << std::left << std::setw(10) << kEmotionNames[static_cast<std::size_t>(c)]
                  << index.class_counts[static_cast<std::size_t>(c)] << "\n";
    std::cout << "total: " << index.entries.size() << "\n";
    if (!index.skipped.empty())
        std::cout << "skipped (unparseable names): " << index.skipped.size() << "\n";
}

SplitSpec make_split(const RunConfig& cfg, const DatasetIndex& index) {
    return cfg.speaker_disjoint
               ? split_dataset_speaker_disjoint(index, cfg.split_fraction, cfg.seed)
               : split_dataset(index, cfg.split_fraction, cfg.seed);
}

TrainData load_or_featurize(const Options& opts, std::vector<FeaturizeFailure>* failures) {
    if (!opts.features_path.empty())
        return archive_to_train_data(load_feature_archive(opts.features_path));
    const DatasetIndex index = scan_dataset(resolve_root(opts), opts.cfg.include_song);
    print_class_counts(index);
    return featurize_dataset(index, opts.cfg.mfcc, opts.cfg.effective_jobs(), failures);
}

void write_feature_index_jsonl(const TrainData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature index: " + path);
    for (std::size_t i = 0; i < data.size(); ++i) {
        nlohmann::json j{{"record", i},
                         {"path", data.paths[i]},
                         {"emotion", data.labels[i].emotion},
                         {"emotion_name",
                          kEmotionNames[static_cast<std::size_t>(data.labels[i].emotion_index())]},
                         {"actor", data.labels[i].actor},
                         {"padded", static_cast<bool>(data.padded[i])}};
        out << j.dump() << "\n";
    }
}

int cmd_scan(const Options& opts) {
    maybe_print_config(opts);
    const DatasetIndex index = scan_dataset(resolve_root(opts), opts.cfg.include_song);
    print_class_counts(index);
    for (const std::string& s : index.skipped)
        std::cerr << "warning: skipped unparseable file " << s << "\n";
    fs::create_directories(opts.out_dir);
    const std::string index_path = (fs::path(opts.out_dir) / "index.jsonl").string();
    write_index_jsonl(index, index_path);
    std::cout << "index written to " << index_path << "\n";
    return 0;
}

int cmd_featurize(const Options& opts) {
    maybe_print_config(opts);
    const DatasetIndex index = scan_dataset(resolve_root(opts), opts.cfg.include_song);
    print_class_counts(index);

    std::vector<FeaturizeFailure> failures;
    TrainData data = featurize_dataset(index, opts.cfg.mfcc, opts.cfg.effective_jobs(),
                                       &failures);
    for (const FeaturizeFailure& f : failures)
        std::cerr << "warning: skipped " << f.path << ": " << f.reason << "\n";
    std::size_t padded = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.padded[i]) {
            ++padded;
            std::cerr << "warning: zero-padded short clip " << data.paths[i] << "\n";
        }

    fs::create_directories(opts.out_dir);
    const std::string archive_path = (fs::path(opts.out_dir) / "features.serfeat").string();
    save_feature_archive(train_data_to_archive(data), archive_path);
    write_feature_index_jsonl(data, (fs::path(opts.out_dir) / "features_index.jsonl").string());

    std::cout << "featurized " << data.size() << " clips (" << failures.size()
              << " failed, " << padded << " padded) -> " << archive_path << "\n";
    if (failures.size() * 10 > index.entries.size()) {
        std::cerr << "error: more than 10% of files failed to featurize\n";
        return kExitData;
    }
    return 0;
}

int cmd_train(const Options& opts) {
    maybe_print_config(opts);
    std::vector<FeaturizeFailure> failures;
    TrainData data = load_or_featurize(opts, &failures);
    for (const FeaturizeFailure& f : failures)
        std::cerr << "warning: skipped " << f.path << ": " << f.reason << "\n";

    const SplitSpec split = make_split(opts.cfg, data.as_index());
    std::cout << "split: " << split.train.size() << " train / " << split.test.size()
              << " test\n";

    Checkpoint resume;
    const Checkpoint* resume_ptr = nullptr;
    if (!opts.resume_path.empty()) {
        resume = load_checkpoint(opts.resume_path);
        resume_ptr = &resume;
    }

    fs::create_directories(opts.out_dir);
    TrainResult result =
        train_model(opts.cfg, data, split, &std::cout, opts.out_dir, resume_ptr);

    const fs::path dir(opts.out_dir);
    write_train_log_csv(result.log, (dir / "train_log.csv").string());
    save_checkpoint(result.final_ckpt, (dir / "checkpoint_final.serlstm").string());
    save_checkpoint(result.best_ckpt, (dir / "checkpoint_best.serlstm").string());

    MetricsReport report = evaluate_model(result.final_ckpt.params, result.final_ckpt.stats,
                                          data, split.test, opts.cfg.effective_jobs());
    write_eval_artifacts(report, opts.cfg.model_config().param_count(), opts.out_dir);

    std::cout.precision(opts.digits);
    std::cout << "final test accuracy " << report.accuracy << ", macro F1 " << report.macro_f1
              << "\n";
    std::cout << "checkpoints and logs written to " << opts.out_dir << "\n";
    return 0;
}

int cmd_eval(const Options& opts, const std::string& ckpt_path) {
    maybe_print_config(opts);
    Checkpoint ckpt = load_checkpoint(ckpt_path);

    std::vector<FeaturizeFailure> failures;
    TrainData data = load_or_featurize(opts, &failures);
    const SplitSpec split = make_split(opts.cfg, data.as_index());

    MetricsReport report = evaluate_model(ckpt.params, ckpt.stats, data, split.test,
                                          opts.cfg.effective_jobs());
    write_eval_artifacts(report, ckpt.params.cfg.param_count(), opts.out_dir);

    std::cout.precision(opts.digits);
    std::cout << "test accuracy " << report.accuracy << "\n";
    std::cout << "macro F1      " << report.macro_f1 << "\n";
    for (int c = 0; c < kNumEmotions; ++c)
        std::cout << "  recall " << std::left << std::setw(10)
                  << kEmotionNames[static_cast<std::size_t>(c)]
                  << report.per_class_recall[static_cast<std::size_t>(c)]
                  << (report.recall_undefined[static_cast<std::size_t>(c)]
                          ? "  (no test samples)"
                          : "")
                  << "\n";
    std::cout << "params        " << ckpt.params.cfg.param_count() << "\n";
    std::cout << "latency mean  " << report.latency_mean_s << " s/clip (p95 "
              << report.latency_p95_s << " s, " << report.latency_reps << " reps)\n";
    std::cout << "artifacts written to " << opts.out_dir << "\n";
    return 0;
}

int cmd_compare(const Options& opts) {
    maybe_print_config(opts);
    std::vector<FeaturizeFailure> failures;
    TrainData data = load_or_featurize(opts, &failures);
    const SplitSpec split = make_split(opts.cfg, data.as_index());
    std::cout << "split: " << split.train.size() << " train / " << split.test.size()
              << " test\n";

    fs::create_directories(opts.out_dir);
    CompareResult result =
        compare_architectures(opts.cfg, data, split, &std::cout, opts.out_dir);
    write_compare_json(result, (fs::path(opts.out_dir) / "compare.json").string());

    std::cout.precision(opts.digits);
    std::cout << "\nlayers  params   accuracy  macro_f1  latency_mean_s  latency_p95_s\n";
    for (const CompareVariant& v : result.variants)
        std::cout << v.num_lstm_layers << "       " << v.param_count << "   " << v.accuracy
                  << "  " << v.macro_f1 << "  " << v.latency_mean_s << "  "
                  << v.latency_p95_s << "\n";
    std::cout << "reports written to " << opts.out_dir << "\n";
    return 0;
}

int cmd_infer(const Options& opts, const std::string& ckpt_path, const std::string& wav_path) {
    maybe_print_config(opts);
    Checkpoint ckpt = load_checkpoint(ckpt_path);

    MfccConfig mfcc = opts.cfg.mfcc;
    mfcc.num_coeffs = ckpt.params.cfg.input_dim;
    mfcc.target_frames = ckpt.params.cfg.seq_len;

    AudioClip clip = read_wav(wav_path);
    clip = to_mono(clip);
    clip = resample(clip, kModelSampleRate);
    FeaturizeResult feat = featurize_clip(clip, mfcc);
    if (feat.padded) std::cerr << "warning: clip was zero-padded to the minimum length\n";

    const Matrix standardized = apply_feature_stats(ckpt.stats, feat.features.frames);
    ForwardCache cache = model_forward(ckpt.params, standardized, /*training=*/false);

    std::cout.precision(opts.digits);
    int argmax = 0;
    for (int c = 0; c < kNumEmotions; ++c) {
        if (cache.probs(0, c) > cache.probs(0, argmax)) argmax = c;
        std::cout << std::left << std::setw(10) << kEmotionNames[static_cast<std::size_t>(c)]
                  << cache.probs(0, c) << "\n";
    }
    std::cout << "predicted: " << kEmotionNames[static_cast<std::size_t>(argmax)] << "\n";
    return 0;
}

int cmd_gradcheck(const ModelConfig& cfg, std::uint64_t seed, double step, int digits) {
    GradCheckReport report = gradient_check(cfg, seed, step);
    std::cout.precision(digits);
    std::cout << "block               max_rel_err\n";
    for (const auto& block : report.blocks)
        std::cout << std::left << std::setw(20) << block.name << block.max_rel_err << "\n";
    std::cout << "max relative error: " << report.max_rel_err << "\n";
    const bool ok = report.max_rel_err < 1e-6;
    std::cout << (ok ? "PASS" : "FAIL") << " (threshold 1e-6)\n";
    return ok ? 0 : kExitNumeric;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"speech emotion recognition with a stacked LSTM over MFCC features"};
    app.require_subcommand(1);

    Options opts;

    CLI::App* scan = app.add_subcommand("scan", "index a RAVDESS directory tree");
    scan->add_option("root", opts.root_arg, "dataset root directory");
    add_common(scan, opts);

    CLI::App* featurize =
        app.add_subcommand("featurize", "extract MFCC features into an archive");
    featurize->add_option("root", opts.root_arg, "dataset root directory");
    add_common(featurize, opts);

    CLI::App* train = app.add_subcommand("train", "train the model");
    train->add_option("root", opts.root_arg, "dataset root directory");
    train->add_option("--features", opts.features_path, "prebuilt feature archive");
    train->add_option("--resume", opts.resume_path, "checkpoint to resume from");
    add_common(train, opts);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    std::string ckpt_path;
    eval->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
    eval->add_option("root", opts.root_arg, "dataset root directory");
    eval->add_option("--features", opts.features_path, "prebuilt feature archive");
    add_common(eval, opts);

    CLI::App* compare =
        app.add_subcommand("compare", "train and compare 1-layer vs 2-layer variants");
    compare->add_option("root", opts.root_arg, "dataset root directory");
    compare->add_option("--features", opts.features_path, "prebuilt feature archive");
    add_common(compare, opts);

    CLI::App* infer = app.add_subcommand("infer", "classify one WAV file");
    std::string wav_path;
    infer->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
    infer->add_option("wav", wav_path, "input WAV file")->required();
    add_common(infer, opts);

    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "verify analytic gradients with finite differences");
    ModelConfig gc_cfg;
    gc_cfg.num_lstm_layers = 2;
    gc_cfg.hidden_dim = 4;
    gc_cfg.input_dim = 3;
    gc_cfg.seq_len = 5;
    gc_cfg.num_classes = 3;
    gc_cfg.dropout_rate = 0.0;
    std::uint64_t gc_seed = 1;
    double gc_step = 1e-5;
    gradcheck->add_option("--layers", gc_cfg.num_lstm_layers, "LSTM layers");
    gradcheck->add_option("--hidden", gc_cfg.hidden_dim, "hidden units");
    gradcheck->add_option("--input", gc_cfg.input_dim, "input dimension");
    gradcheck->add_option("--timesteps", gc_cfg.seq_len, "sequence length");
    gradcheck->add_option("--classes", gc_cfg.num_classes, "output classes");
    gradcheck->add_option("--dropout", gc_cfg.dropout_rate, "dropout rate (mask held fixed)");
    gradcheck->add_option("--seed", gc_seed, "instance seed");
    gradcheck->add_option("--step", gc_step, "finite-difference step");
    gradcheck->add_option("--digits", opts.digits, "significant digits in printed numbers");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(gradcheck))
            return cmd_gradcheck(gc_cfg, gc_seed, gc_step, opts.digits);

        CLI::App* active = app.get_subcommands().front();
        merge_config_file(active, opts);
        opts.cfg.validate();

        if (app.got_subcommand(scan)) return cmd_scan(opts);
        if (app.got_subcommand(featurize)) return cmd_featurize(opts);
        if (app.got_subcommand(train)) return cmd_train(opts);
        if (app.got_subcommand(eval)) return cmd_eval(opts, ckpt_path);
        if (app.got_subcommand(compare)) return cmd_compare(opts);
        if (app.got_subcommand(infer)) return cmd_infer(opts, ckpt_path, wav_path);
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) { // Io, Format, Parse, Data
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
