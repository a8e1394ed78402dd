#include "ser/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ser {

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[9] = "SERLSTM1";
constexpr char kFeatureMagic[9] = "SERFEAT1";

void put_u32_le(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64_le(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64_le(std::string& buf, double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, sizeof u);
    put_u64_le(buf, u);
}

std::uint32_t get_u32_le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

double get_f64_le(const unsigned char* p) {
    const std::uint64_t u = get_u64_le(p);
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
}

// Assembles a container file: named arrays are appended in call order and
// the manifest records their geometry and offsets.
class ContainerWriter {
public:
    explicit ContainerWriter(const char* magic) : magic_(magic) {}

    void add_array(const std::string& name, const Matrix& m) {
        json entry{{"name", name},
                   {"rows", m.rows},
                   {"cols", m.cols},
                   {"dtype", "f64"},
                   {"offset", arrays_.size()}};
        manifest_.push_back(entry);
        for (double v : m.data) put_f64_le(arrays_, v);
    }

    void write(json header, const std::string& path) {
        header["arrays"] = manifest_;
        const std::string header_text = header.dump();

        std::string buf;
        buf.reserve(20 + header_text.size() + arrays_.size());
        buf.append(magic_, 8);
        put_u32_le(buf, kContainerVersion);
        put_u64_le(buf, header_text.size());
        buf.append(header_text);
        buf.append(arrays_);

        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError("write failed: " + path);
    }

private:
    const char* magic_;
    std::vector<json> manifest_;
    std::string arrays_;
};

struct ManifestEntry {
    int rows = 0;
    int cols = 0;
    std::uint64_t offset = 0;
};

class ContainerReader {
public:
    ContainerReader(const char* magic, const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open: " + path);
        bytes_.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

        if (bytes_.size() < 20 || std::memcmp(bytes_.data(), magic, 8) != 0)
            throw FormatError("not a " + std::string(magic) + " file: " + path);
        const std::uint32_t version = get_u32_le(data() + 8);
        if (version != kContainerVersion)
            throw FormatError("unsupported " + std::string(magic) + " version " +
                              std::to_string(version) + " (expected " +
                              std::to_string(kContainerVersion) + ") in " + path);
        const std::uint64_t header_len = get_u64_le(data() + 12);
        if (20 + header_len > bytes_.size())
            throw FormatError("corrupt header (truncated) in " + path);
        try {
            header_ = json::parse(bytes_.begin() + 20,
                                  bytes_.begin() + 20 + static_cast<std::ptrdiff_t>(header_len));
        } catch (const json::exception& e) {
            throw FormatError("corrupt JSON header in " + path + ": " + e.what());
        }
        arrays_start_ = 20 + header_len;

        if (!header_.contains("arrays") || !header_["arrays"].is_array())
            throw FormatError("missing array manifest in " + path);
        for (const json& e : header_["arrays"]) {
            ManifestEntry m{e.at("rows").get<int>(), e.at("cols").get<int>(),
                            e.at("offset").get<std::uint64_t>()};
            if (e.at("dtype").get<std::string>() != "f64")
                throw FormatError("unsupported dtype in manifest of " + path);
            manifest_[e.at("name").get<std::string>()] = m;
        }
    }

    const json& header() const { return header_; }
    bool has_array(const std::string& name) const { return manifest_.count(name) > 0; }
    std::size_t array_count() const { return manifest_.size(); }

    Matrix read_array(const std::string& name) const {
        auto it = manifest_.find(name);
        if (it == manifest_.end())
            throw FormatError("array \"" + name + "\" missing from manifest of " + path_);
        const ManifestEntry& m = it->second;
        if (m.rows < 1 || m.cols < 1)
            throw FormatError("array \"" + name + "\" has invalid shape in " + path_);
        const std::uint64_t n =
            static_cast<std::uint64_t>(m.rows) * static_cast<std::uint64_t>(m.cols);
        const std::uint64_t end = arrays_start_ + m.offset + n * 8;
        if (end > bytes_.size())
            throw FormatError("file truncated in array \"" + name + "\": " + path_);
        Matrix out(m.rows, m.cols);
        const unsigned char* p = data() + arrays_start_ + m.offset;
        for (std::uint64_t k = 0; k < n; ++k) out.data[k] = get_f64_le(p + k * 8);
        return out;
    }

    // Finite-values variant for parameters and statistics.
    Matrix read_finite_array(const std::string& name) const {
        Matrix m = read_array(name);
        if (!all_finite(m))
            throw FormatError("integrity: non-finite values in array \"" + name + "\" of " +
                              path_);
        return m;
    }

private:
    const unsigned char* data() const {
        return reinterpret_cast<const unsigned char*>(bytes_.data());
    }
    std::string path_;
    std::string bytes_;
    json header_;
    std::uint64_t arrays_start_ = 0;
    std::map<std::string, ManifestEntry> manifest_;
};

json config_to_json(const ModelConfig& c) {
    return json{{"num_lstm_layers", c.num_lstm_layers}, {"hidden_dim", c.hidden_dim},
                {"input_dim", c.input_dim},             {"seq_len", c.seq_len},
                {"num_classes", c.num_classes},         {"dropout_rate", c.dropout_rate},
                {"flatten_all", c.flatten_all}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.num_lstm_layers = j.at("num_lstm_layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.input_dim = j.at("input_dim").get<int>();
    c.seq_len = j.at("seq_len").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.flatten_all = j.at("flatten_all").get<bool>();
    c.validate();
    return c;
}

json mfcc_to_json(const MfccConfig& c) {
    return json{{"frame_len_ms", c.frame_len_ms}, {"hop_ms", c.hop_ms},
                {"fft_size", c.fft_size},         {"mel_filters", c.mel_filters},
                {"num_coeffs", c.num_coeffs},     {"target_frames", c.target_frames},
                {"preemphasis", c.preemphasis}};
}

MfccConfig mfcc_from_json(const json& j) {
    MfccConfig c;
    c.frame_len_ms = j.at("frame_len_ms").get<double>();
    c.hop_ms = j.at("hop_ms").get<double>();
    c.fft_size = j.at("fft_size").get<int>();
    c.mel_filters = j.at("mel_filters").get<int>();
    c.num_coeffs = j.at("num_coeffs").get<int>();
    c.target_frames = j.at("target_frames").get<int>();
    c.preemphasis = j.at("preemphasis").get<double>();
    c.validate();
    return c;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    ContainerWriter writer(kCheckpointMagic);
    for (const auto& [name, value] : param_refs_const(ckpt.params))
        writer.add_array(name, *value);
    writer.add_array("feat.mean", ckpt.stats.mean);
    writer.add_array("feat.std", ckpt.stats.stdev);
    if (ckpt.has_adam) {
        for (const auto& [name, value] : param_refs_const(ckpt.adam.m))
            writer.add_array("adam.m." + name, *value);
        for (const auto& [name, value] : param_refs_const(ckpt.adam.v))
            writer.add_array("adam.v." + name, *value);
    }

    json header{{"config", config_to_json(ckpt.params.cfg)},
                {"meta",
                 {{"seed", ckpt.meta.seed},
                  {"epoch", ckpt.meta.epoch},
                  {"lr0", ckpt.meta.lr0},
                  {"decay", ckpt.meta.decay},
                  {"schedule", ckpt.meta.schedule},
                  {"step_every", ckpt.meta.step_every}}},
                {"adam",
                 {{"present", ckpt.has_adam},
                  {"beta1", ckpt.adam.beta1},
                  {"beta2", ckpt.adam.beta2},
                  {"epsilon", ckpt.adam.epsilon},
                  {"t", ckpt.adam.t}}}};
    writer.write(std::move(header), path);
}

Checkpoint load_checkpoint(const std::string& path) {
    ContainerReader reader(kCheckpointMagic, path);
    const json& header = reader.header();

    Checkpoint ckpt;
    try {
        ckpt.params = ModelParams::zeros(config_from_json(header.at("config")));
        const json& meta = header.at("meta");
        ckpt.meta.seed = meta.at("seed").get<std::uint64_t>();
        ckpt.meta.epoch = meta.at("epoch").get<int>();
        ckpt.meta.lr0 = meta.at("lr0").get<double>();
        ckpt.meta.decay = meta.at("decay").get<double>();
        ckpt.meta.schedule = meta.at("schedule").get<std::string>();
        ckpt.meta.step_every = meta.at("step_every").get<int>();
        ckpt.has_adam = header.at("adam").at("present").get<bool>();
    } catch (const json::exception& e) {
        throw FormatError("corrupt checkpoint header in " + path + ": " + e.what());
    }

    for (const ParamRef& ref : param_refs(ckpt.params)) {
        Matrix loaded = reader.read_finite_array(ref.name);
        if (!loaded.same_shape(*ref.value))
            throw FormatError("array \"" + ref.name + "\" has shape " + shape_str(loaded) +
                              ", expected " + shape_str(*ref.value) + " in " + path);
        *ref.value = std::move(loaded);
    }

    ckpt.stats.mean = reader.read_finite_array("feat.mean");
    ckpt.stats.stdev = reader.read_finite_array("feat.std");
    if (ckpt.stats.mean.cols != ckpt.params.cfg.input_dim ||
        ckpt.stats.stdev.cols != ckpt.params.cfg.input_dim)
        throw FormatError("feature statistics width does not match input_dim in " + path);

    if (ckpt.has_adam) {
        const json& aj = reader.header().at("adam");
        ckpt.adam = AdamState::create(ckpt.params.cfg, aj.at("beta1").get<double>(),
                                      aj.at("beta2").get<double>(),
                                      aj.at("epsilon").get<double>());
        ckpt.adam.t = aj.at("t").get<std::int64_t>();
        for (const ParamRef& ref : param_refs(ckpt.adam.m))
            *ref.value = reader.read_finite_array("adam.m." + ref.name);
        for (const ParamRef& ref : param_refs(ckpt.adam.v))
            *ref.value = reader.read_finite_array("adam.v." + ref.name);
    }
    return ckpt;
}

void check_config_compatible(const ModelConfig& expected, const ModelConfig& actual) {
    std::vector<std::string> diffs;
    auto cmp = [&diffs](const char* field, auto a, auto b) {
        if (a != b) {
            std::ostringstream os;
            os << field << " (expected " << a << ", checkpoint has " << b << ")";
            diffs.push_back(os.str());
        }
    };
    cmp("num_lstm_layers", expected.num_lstm_layers, actual.num_lstm_layers);
    cmp("hidden_dim", expected.hidden_dim, actual.hidden_dim);
    cmp("input_dim", expected.input_dim, actual.input_dim);
    cmp("seq_len", expected.seq_len, actual.seq_len);
    cmp("num_classes", expected.num_classes, actual.num_classes);
    cmp("dropout_rate", expected.dropout_rate, actual.dropout_rate);
    cmp("flatten_all", expected.flatten_all, actual.flatten_all);
    if (!diffs.empty()) {
        std::string msg = "checkpoint config mismatch: ";
        for (std::size_t i = 0; i < diffs.size(); ++i)
            msg += (i ? "; " : "") + diffs[i];
        throw ConfigError(msg);
    }
}

void save_feature_archive(const FeatureArchive& archive, const std::string& path) {
    const std::size_t n = archive.features.size();
    if (archive.paths.size() != n || archive.labels.size() != n || archive.padded.size() != n)
        throw ShapeError("save_feature_archive: parallel vectors differ in length");

    ContainerWriter writer(kFeatureMagic);
    json entries = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const RavdessLabel& l = archive.labels[i];
        entries.push_back(json{{"path", archive.paths[i]},
                               {"modality", l.modality},
                               {"vocal_channel", l.vocal_channel},
                               {"emotion", l.emotion},
                               {"intensity", l.intensity},
                               {"statement", l.statement},
                               {"repetition", l.repetition},
                               {"actor", l.actor},
                               {"padded", static_cast<bool>(archive.padded[i])}});
        writer.add_array("feat." + std::to_string(i), archive.features[i].frames);
    }
    json header{{"mfcc", mfcc_to_json(archive.mfcc)}, {"entries", entries}};
    writer.write(std::move(header), path);
}

FeatureArchive load_feature_archive(const std::string& path) {
    ContainerReader reader(kFeatureMagic, path);
    const json& header = reader.header();

    FeatureArchive archive;
    try {
        archive.mfcc = mfcc_from_json(header.at("mfcc"));
        std::size_t i = 0;
        for (const json& e : header.at("entries")) {
            archive.paths.push_back(e.at("path").get<std::string>());
            RavdessLabel l;
            l.modality = e.at("modality").get<int>();
            l.vocal_channel = e.at("vocal_channel").get<int>();
            l.emotion = e.at("emotion").get<int>();
            l.intensity = e.at("intensity").get<int>();
            l.statement = e.at("statement").get<int>();
            l.repetition = e.at("repetition").get<int>();
            l.actor = e.at("actor").get<int>();
            archive.labels.push_back(l);
            archive.padded.push_back(e.at("padded").get<bool>());
            archive.features.push_back(
                FeatureMatrix{reader.read_finite_array("feat." + std::to_string(i))});
            ++i;
        }
    } catch (const json::exception& e) {
        throw FormatError("corrupt feature archive header in " + path + ": " + e.what());
    }
    if (archive.features.empty()) throw DataError("feature archive is empty: " + path);
    return archive;
}

} // namespace ser
