#include "ser/config.hpp"

#include "ser/dataset.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace ser {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key \"" + key + "\" expects a boolean, got \"" + v + "\"");
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
    std::istringstream is(v);
    T out;
    is >> out;
    if (is.fail() || !is.eof())
        throw ConfigError("config: key \"" + key + "\" has unparseable value \"" + v + "\"");
    return out;
}

} // namespace

ModelConfig RunConfig::model_config() const {
    ModelConfig m;
    m.num_lstm_layers = num_lstm_layers;
    m.hidden_dim = hidden_dim;
    m.input_dim = mfcc.num_coeffs;
    m.seq_len = mfcc.target_frames;
    m.num_classes = kNumEmotions;
    m.dropout_rate = dropout_rate;
    m.flatten_all = flatten_all;
    return m;
}

void RunConfig::validate() const {
    mfcc.validate();
    model_config().validate();
    if (epochs < 1) throw ConfigError("config: train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("config: train.batch_size must be >= 1");
    if (lr0 < 0.0) throw ConfigError("config: train.lr0 must be >= 0");
    if (decay <= 0.0 || decay > 1.0)
        throw ConfigError("config: train.decay must lie in (0, 1]");
    if (schedule != "exp" && schedule != "step")
        throw ConfigError("config: train.schedule must be \"exp\" or \"step\"");
    if (step_every < 1) throw ConfigError("config: train.step_every must be >= 1");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw ConfigError("config: split.fraction must lie strictly between 0 and 1");
    if (jobs < 0) throw ConfigError("config: run.jobs must be >= 0");
    if (grad_clip < 0.0) throw ConfigError("config: train.grad_clip must be >= 0");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
        setters = {
            {"dataset.root", [this](const std::string&, const std::string& v) { dataset_root = v; }},
            {"dataset.include_song",
             [this](const std::string& k, const std::string& v) { include_song = parse_bool(v, k); }},
            {"split.fraction",
             [this](const std::string& k, const std::string& v) { split_fraction = parse_number<double>(v, k); }},
            {"split.speaker_disjoint",
             [this](const std::string& k, const std::string& v) { speaker_disjoint = parse_bool(v, k); }},
            {"mfcc.frame_len_ms",
             [this](const std::string& k, const std::string& v) { mfcc.frame_len_ms = parse_number<double>(v, k); }},
            {"mfcc.hop_ms",
             [this](const std::string& k, const std::string& v) { mfcc.hop_ms = parse_number<double>(v, k); }},
            {"mfcc.fft_size",
             [this](const std::string& k, const std::string& v) { mfcc.fft_size = parse_number<int>(v, k); }},
            {"mfcc.mel_filters",
             [this](const std::string& k, const std::string& v) { mfcc.mel_filters = parse_number<int>(v, k); }},
            {"mfcc.num_coeffs",
             [this](const std::string& k, const std::string& v) { mfcc.num_coeffs = parse_number<int>(v, k); }},
            {"mfcc.target_frames",
             [this](const std::string& k, const std::string& v) { mfcc.target_frames = parse_number<int>(v, k); }},
            {"mfcc.preemphasis",
             [this](const std::string& k, const std::string& v) { mfcc.preemphasis = parse_number<double>(v, k); }},
            {"model.num_lstm_layers",
             [this](const std::string& k, const std::string& v) { num_lstm_layers = parse_number<int>(v, k); }},
            {"model.hidden_dim",
             [this](const std::string& k, const std::string& v) { hidden_dim = parse_number<int>(v, k); }},
            {"model.dropout_rate",
             [this](const std::string& k, const std::string& v) { dropout_rate = parse_number<double>(v, k); }},
            {"model.flatten_all",
             [this](const std::string& k, const std::string& v) { flatten_all = parse_bool(v, k); }},
            {"train.epochs",
             [this](const std::string& k, const std::string& v) { epochs = parse_number<int>(v, k); }},
            {"train.batch_size",
             [this](const std::string& k, const std::string& v) { batch_size = parse_number<int>(v, k); }},
            {"train.lr0",
             [this](const std::string& k, const std::string& v) { lr0 = parse_number<double>(v, k); }},
            {"train.decay",
             [this](const std::string& k, const std::string& v) { decay = parse_number<double>(v, k); }},
            {"train.schedule", [this](const std::string&, const std::string& v) { schedule = v; }},
            {"train.step_every",
             [this](const std::string& k, const std::string& v) { step_every = parse_number<int>(v, k); }},
            {"train.seed",
             [this](const std::string& k, const std::string& v) { seed = parse_number<std::uint64_t>(v, k); }},
            {"train.grad_clip",
             [this](const std::string& k, const std::string& v) { grad_clip = parse_number<double>(v, k); }},
            {"run.jobs",
             [this](const std::string& k, const std::string& v) { jobs = parse_number<int>(v, k); }},
        };

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header at " + path + ":" +
                                  std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at " + path + ":" +
                              std::to_string(lineno));
        const std::string key =
            (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("config: unknown key \"" + key + "\" at " + path + ":" +
                              std::to_string(lineno));
        it->second(key, value);
    }
}

void RunConfig::print(std::ostream& out) const {
    out.precision(17);
    out << "[dataset]\n";
    out << "root = " << dataset_root << "\n";
    out << "include_song = " << (include_song ? "true" : "false") << "\n";
    out << "[split]\n";
    out << "fraction = " << split_fraction << "\n";
    out << "speaker_disjoint = " << (speaker_disjoint ? "true" : "false") << "\n";
    out << "[mfcc]\n";
    out << "frame_len_ms = " << mfcc.frame_len_ms << "\n";
    out << "hop_ms = " << mfcc.hop_ms << "\n";
    out << "fft_size = " << mfcc.fft_size << "\n";
    out << "mel_filters = " << mfcc.mel_filters << "\n";
    out << "num_coeffs = " << mfcc.num_coeffs << "\n";
    out << "target_frames = " << mfcc.target_frames << "\n";
    out << "preemphasis = " << mfcc.preemphasis << "\n";
    out << "[model]\n";
    out << "num_lstm_layers = " << num_lstm_layers << "\n";
    out << "hidden_dim = " << hidden_dim << "\n";
    out << "dropout_rate = " << dropout_rate << "\n";
    out << "flatten_all = " << (flatten_all ? "true" : "false") << "\n";
    out << "[train]\n";
    out << "epochs = " << epochs << "\n";
    out << "batch_size = " << batch_size << "\n";
    out << "lr0 = " << lr0 << "\n";
    out << "decay = " << decay << "\n";
    out << "schedule = " << schedule << "\n";
    out << "step_every = " << step_every << "\n";
    out << "seed = " << seed << "\n";
    out << "grad_clip = " << grad_clip << "\n";
    out << "[run]\n";
    out << "jobs = " << jobs << "\n";
}

int RunConfig::effective_jobs() const {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

} // namespace ser
