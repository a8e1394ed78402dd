#include <fstream>
#include <sstream>

#include <doctest.h>

#include "ser/config.hpp"
#include "tempdir.hpp"

using namespace ser;
using ser::testing::TempDir;

TEST_CASE("defaults validate and map onto the model config") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    ModelConfig mc = cfg.model_config();
    CHECK(mc.num_lstm_layers == 2);
    CHECK(mc.hidden_dim == 128);
    CHECK(mc.input_dim == 40);
    CHECK(mc.seq_len == 20);
    CHECK(mc.num_classes == 8);
    CHECK(mc.dropout_rate == 0.001);
    CHECK(cfg.epochs == 60);
    CHECK(cfg.batch_size == 64);
    CHECK(cfg.lr0 == 0.001);
    CHECK(cfg.split_fraction == 0.8);
}

TEST_CASE("config file parsing with sections and comments") {
    TempDir dir("cfg_parse");
    std::ofstream(dir.file("run.conf")) << R"(# experiment settings
[dataset]
root = /data/ravdess
include_song = true

[train]
epochs = 5          # short run
batch_size = 16
lr0 = 0.01
seed = 99

[model]
num_lstm_layers = 1
)";
    RunConfig cfg;
    cfg.load_file(dir.file("run.conf"));
    CHECK(cfg.dataset_root == "/data/ravdess");
    CHECK(cfg.include_song);
    CHECK(cfg.epochs == 5);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.lr0 == 0.01);
    CHECK(cfg.seed == 99);
    CHECK(cfg.num_lstm_layers == 1);
    // untouched values keep their defaults
    CHECK(cfg.decay == 0.98);
    CHECK(cfg.mfcc.num_coeffs == 40);
}

TEST_CASE("unknown keys are hard errors") {
    TempDir dir("cfg_unknown");
    std::ofstream(dir.file("bad.conf")) << "[train]\nepochz = 5\n";
    RunConfig cfg;
    try {
        cfg.load_file(dir.file("bad.conf"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.epochz") != std::string::npos);
    }

    std::ofstream(dir.file("bad2.conf")) << "[nosuch]\nkey = 1\n";
    CHECK_THROWS_AS(cfg.load_file(dir.file("bad2.conf")), ConfigError);
}

TEST_CASE("unparseable values are hard errors") {
    TempDir dir("cfg_value");
    std::ofstream(dir.file("bad.conf")) << "[train]\nepochs = sixty\n";
    RunConfig cfg;
    CHECK_THROWS_AS(cfg.load_file(dir.file("bad.conf")), ConfigError);

    std::ofstream(dir.file("bad2.conf")) << "[dataset]\ninclude_song = maybe\n";
    CHECK_THROWS_AS(cfg.load_file(dir.file("bad2.conf")), ConfigError);

    std::ofstream(dir.file("bad3.conf")) << "[train]\nno equals sign here\n";
    CHECK_THROWS_AS(cfg.load_file(dir.file("bad3.conf")), ConfigError);
}

TEST_CASE("every field appears in the printed config") {
    RunConfig cfg;
    std::ostringstream out;
    cfg.print(out);
    const std::string text = out.str();
    for (const char* key :
         {"root", "include_song", "fraction", "speaker_disjoint", "frame_len_ms", "hop_ms",
          "fft_size", "mel_filters", "num_coeffs", "target_frames", "preemphasis",
          "num_lstm_layers", "hidden_dim", "dropout_rate", "flatten_all", "epochs",
          "batch_size", "lr0", "decay", "schedule", "step_every", "seed", "grad_clip",
          "jobs"}) {
        INFO(key);
        CHECK(text.find(key) != std::string::npos);
    }
}

TEST_CASE("printed config re-parses to the same values") {
    TempDir dir("cfg_reparse");
    RunConfig cfg;
    cfg.dataset_root = "/tmp/x";
    cfg.epochs = 7;
    cfg.lr0 = 0.0025;
    cfg.num_lstm_layers = 1;
    cfg.mfcc.mel_filters = 48;
    {
        std::ofstream out(dir.file("echo.conf"));
        cfg.print(out);
    }
    RunConfig back;
    back.load_file(dir.file("echo.conf"));
    CHECK(back.dataset_root == cfg.dataset_root);
    CHECK(back.epochs == 7);
    CHECK(back.lr0 == 0.0025);
    CHECK(back.num_lstm_layers == 1);
    CHECK(back.mfcc.mel_filters == 48);
}

TEST_CASE("validation catches out-of-range values") {
    RunConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.split_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.num_lstm_layers = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.schedule = "linear";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.lr0 = 0.0; // allowed: a zero rate means no optimizer steps
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("effective jobs") {
    RunConfig cfg;
    cfg.jobs = 3;
    CHECK(cfg.effective_jobs() == 3);
    cfg.jobs = 0;
    CHECK(cfg.effective_jobs() >= 1);
}
