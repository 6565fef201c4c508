#include "snnfaultlab/campaign.hpp"

#include "snnfaultlab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace snnfaultlab::campaign {

namespace {

using circuit::DefenseVariant;
using circuit::NeuronKind;
using fault::AttackKind;
using fault::AttackPhase;

std::uint64_t fnv1a_bytes(const std::uint8_t* data, std::size_t n,
                          std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("bad integer value for " + key + ": '" + value + "'");
    return v;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const std::string& item : split(value, ','))
        if (!item.empty()) out.push_back(parse_double(key, item));
    return out;
}

NeuronKind parse_neuron_kind(const std::string& value) {
    if (value == "axon-hillock") return NeuronKind::AxonHillock;
    if (value == "voltage-amp-if") return NeuronKind::VoltageAmpIF;
    throw ConfigError("unknown neuron kind '" + value + "'");
}

AttackKind parse_attack_kind(const std::string& value) {
    for (AttackKind k :
         {AttackKind::InputSpikeCorruption, AttackKind::ELThreshold, AttackKind::ILThreshold,
          AttackKind::BothThreshold, AttackKind::GlobalVdd})
        if (value == fault::to_string(k)) return k;
    throw ConfigError("unknown attack kind '" + value + "'");
}

AttackPhase parse_phase(const std::string& value) {
    for (AttackPhase p :
         {AttackPhase::TrainAndTest, AttackPhase::TestOnly, AttackPhase::TrainOnly})
        if (value == fault::to_string(p)) return p;
    throw ConfigError("unknown attack phase '" + value + "'");
}

DefenseVariant parse_defense(const std::string& value) {
    for (DefenseVariant d :
         {DefenseVariant::RobustDriver, DefenseVariant::BandgapThreshold,
          DefenseVariant::SizedW32, DefenseVariant::Comparator})
        if (value == circuit::to_string(d)) return d;
    throw ConfigError("unknown defense '" + value + "'");
}

std::string defenses_to_string(const std::set<DefenseVariant>& defenses) {
    if (defenses.empty()) return "none";
    std::string out;
    for (DefenseVariant d : defenses) {
        if (!out.empty()) out += '+';
        out += circuit::to_string(d);
    }
    return out;
}

std::set<DefenseVariant> parse_defense_set(const std::string& value) {
    std::set<DefenseVariant> out;
    if (value == "none" || value.empty()) return out;
    for (const std::string& item : split(value, '+')) out.insert(parse_defense(item));
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (double v : values) {
        if (!out.empty()) out += ',';
        out += fmt(v);
    }
    return out;
}

const char* layer_of(AttackKind kind) {
    switch (kind) {
        case AttackKind::InputSpikeCorruption: return "input";
        case AttackKind::ELThreshold: return "el";
        case AttackKind::ILThreshold: return "il";
        case AttackKind::BothThreshold: return "both";
        case AttackKind::GlobalVdd: return "all";
    }
    return "-";
}

void write_bytes(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
}

template <typename T>
void write_le(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));  // little-endian host assumed, asserted in save_model
    write_bytes(out, buf, sizeof(T));
}

template <typename T>
T read_le(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
    if (offset + sizeof(T) > bytes.size()) throw ConfigError("model snapshot truncated");
    T v;
    std::memcpy(&v, bytes.data() + offset, sizeof(T));
    offset += sizeof(T);
    return v;
}

}  // namespace

CampaignConfig parse_config(const std::string& text) {
    CampaignConfig config;
    config.grid.seeds.clear();  // filled from [campaign] seeds at the end
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = line.substr(1, line.size() - 2);
            if (section != "dataset" && section != "network" && section != "encode" &&
                section != "sweep" && section != "campaign" && section != "detect")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qkey = section + "." + key;

        if (qkey == "dataset.train_images") config.train_images = value;
        else if (qkey == "dataset.train_labels") config.train_labels = value;
        else if (qkey == "dataset.test_images") config.test_images = value;
        else if (qkey == "dataset.test_labels") config.test_labels = value;
        else if (qkey == "network.n_exc") {
            const long long n = parse_int(qkey, value);
            if (n <= 0) throw ConfigError("n_exc must be positive");
            config.network.n_exc = std::size_t(n);
        } else if (qkey == "network.n_inh") {
            const long long n = parse_int(qkey, value);
            if (n <= 0) throw ConfigError("n_inh must be positive");
            config.network.n_inh = std::size_t(n);
        }
        else if (qkey == "network.w_max") config.network.w_max = parse_double(qkey, value);
        else if (qkey == "network.init_w_min") config.network.init_w_min = parse_double(qkey, value);
        else if (qkey == "network.init_w_max") config.network.init_w_max = parse_double(qkey, value);
        else if (qkey == "network.norm") config.network.norm = parse_double(qkey, value);
        else if (qkey == "network.w_exc_inh") config.network.w_exc_inh = parse_double(qkey, value);
        else if (qkey == "network.w_inh_exc") config.network.w_inh_exc = parse_double(qkey, value);
        else if (qkey == "network.lr_pre") config.network.lr_pre = parse_double(qkey, value);
        else if (qkey == "network.lr_post") config.network.lr_post = parse_double(qkey, value);
        else if (qkey == "network.batch") config.network.batch = int(parse_int(qkey, value));
        else if (qkey == "network.tc_trace_ms") config.network.tc_trace_ms = parse_double(qkey, value);
        else if (qkey == "network.pre_trace_plus") config.network.pre_trace_plus = parse_double(qkey, value);
        else if (qkey == "network.post_trace_plus") config.network.post_trace_plus = parse_double(qkey, value);
        else if (qkey == "network.exc_v_rest") config.network.exc.lif.v_rest_mv = parse_double(qkey, value);
        else if (qkey == "network.exc_v_reset") config.network.exc.lif.v_reset_mv = parse_double(qkey, value);
        else if (qkey == "network.exc_v_thresh") config.network.exc.lif.v_thresh_mv = parse_double(qkey, value);
        else if (qkey == "network.exc_tc_decay_ms") config.network.exc.lif.tc_decay_ms = parse_double(qkey, value);
        else if (qkey == "network.exc_refrac_ms") config.network.exc.lif.refrac_ms = parse_double(qkey, value);
        else if (qkey == "network.theta_plus") config.network.exc.theta_plus_mv = parse_double(qkey, value);
        else if (qkey == "network.tc_theta_decay_ms") config.network.exc.tc_theta_decay_ms = parse_double(qkey, value);
        else if (qkey == "network.inh_v_rest") config.network.inh.v_rest_mv = parse_double(qkey, value);
        else if (qkey == "network.inh_v_reset") config.network.inh.v_reset_mv = parse_double(qkey, value);
        else if (qkey == "network.inh_v_thresh") config.network.inh.v_thresh_mv = parse_double(qkey, value);
        else if (qkey == "network.inh_tc_decay_ms") config.network.inh.tc_decay_ms = parse_double(qkey, value);
        else if (qkey == "network.inh_refrac_ms") config.network.inh.refrac_ms = parse_double(qkey, value);
        else if (qkey == "encode.duration_ms") config.encode.duration_ms = parse_double(qkey, value);
        else if (qkey == "encode.dt_ms") config.encode.dt_ms = parse_double(qkey, value);
        else if (qkey == "encode.max_rate_hz") config.encode.max_rate_hz = parse_double(qkey, value);
        else if (qkey == "sweep.attacks") {
            config.grid.kinds.clear();
            for (const std::string& item : split(value, ','))
                if (!item.empty()) config.grid.kinds.push_back(parse_attack_kind(item));
        }
        else if (qkey == "sweep.deltas") config.grid.deltas = parse_double_list(qkey, value);
        else if (qkey == "sweep.vdds") config.grid.v_dds = parse_double_list(qkey, value);
        else if (qkey == "sweep.fractions") config.grid.fractions = parse_double_list(qkey, value);
        else if (qkey == "sweep.defenses") {
            config.grid.defense_sets.clear();
            for (const std::string& item : split(value, ';'))
                config.grid.defense_sets.push_back(parse_defense_set(item));
            if (config.grid.defense_sets.empty()) config.grid.defense_sets.push_back({});
        }
        else if (qkey == "sweep.phase") config.grid.phase = parse_phase(value);
        else if (qkey == "sweep.neuron_kind") config.grid.neuron_kind = parse_neuron_kind(value);
        else if (qkey == "sweep.mask_mode") {
            if (value == "random") config.grid.mask_mode = fault::MaskMode::Random;
            else if (value == "contiguous") config.grid.mask_mode = fault::MaskMode::ContiguousBlock;
            else throw ConfigError("unknown mask_mode '" + value + "'");
        }
        else if (qkey == "campaign.seeds") {
            config.seeds.clear();
            for (const std::string& item : split(value, ','))
                if (!item.empty()) config.seeds.push_back(std::uint64_t(parse_int(qkey, item)));
        }
        else if (qkey == "campaign.train_size") config.train_size = std::size_t(parse_int(qkey, value));
        else if (qkey == "campaign.eval_size") config.eval_size = std::size_t(parse_int(qkey, value));
        else if (qkey == "campaign.out_dir") config.out_dir = value;
        else if (qkey == "detect.neuron_kind") config.detect_neuron_kind = parse_neuron_kind(value);
        else if (qkey == "detect.window_ms") config.detect_window_ms = parse_double(qkey, value);
        else if (qkey == "detect.vdds") config.detect_v_dds = parse_double_list(qkey, value);
        else if (qkey == "detect.threshold_frac") config.detect_threshold_frac = parse_double(qkey, value);
        else throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }

    // Dataset-path fallback.
    if (const char* env = std::getenv("SNN_FAULTLAB_DATA")) {
        const std::string base = std::string(env) + "/";
        if (config.train_images.empty()) config.train_images = base + "train-images-idx3-ubyte";
        if (config.train_labels.empty()) config.train_labels = base + "train-labels-idx1-ubyte";
        if (config.test_images.empty()) config.test_images = base + "t10k-images-idx3-ubyte";
        if (config.test_labels.empty()) config.test_labels = base + "t10k-labels-idx1-ubyte";
    }
    if (config.seeds.empty()) throw ConfigError("campaign.seeds must be nonempty");
    config.grid.seeds = config.seeds;
    config.network.validate();
    config.encode.validate();
    return config;
}

CampaignConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    CampaignConfig config = parse_config(ss.str());
    for (const std::string& p :
         {config.train_images, config.train_labels, config.test_images, config.test_labels}) {
        if (p.empty())
            throw ConfigError("dataset path missing (set [dataset] keys or SNN_FAULTLAB_DATA)");
        if (!std::filesystem::exists(p)) throw ConfigError("dataset file not found: " + p);
    }
    return config;
}

std::string dump_config(const CampaignConfig& c) {
    std::ostringstream out;
    out << "[dataset]\n";
    out << "train_images = " << c.train_images << "\n";
    out << "train_labels = " << c.train_labels << "\n";
    out << "test_images = " << c.test_images << "\n";
    out << "test_labels = " << c.test_labels << "\n";
    out << "\n[network]\n";
    out << "n_exc = " << c.network.n_exc << "\n";
    out << "n_inh = " << c.network.n_inh << "\n";
    out << "w_max = " << fmt(c.network.w_max) << "\n";
    out << "init_w_min = " << fmt(c.network.init_w_min) << "\n";
    out << "init_w_max = " << fmt(c.network.init_w_max) << "\n";
    out << "norm = " << fmt(c.network.norm) << "\n";
    out << "w_exc_inh = " << fmt(c.network.w_exc_inh) << "\n";
    out << "w_inh_exc = " << fmt(c.network.w_inh_exc) << "\n";
    out << "lr_pre = " << fmt(c.network.lr_pre) << "\n";
    out << "lr_post = " << fmt(c.network.lr_post) << "\n";
    out << "batch = " << c.network.batch << "\n";
    out << "tc_trace_ms = " << fmt(c.network.tc_trace_ms) << "\n";
    out << "pre_trace_plus = " << fmt(c.network.pre_trace_plus) << "\n";
    out << "post_trace_plus = " << fmt(c.network.post_trace_plus) << "\n";
    out << "exc_v_rest = " << fmt(c.network.exc.lif.v_rest_mv) << "\n";
    out << "exc_v_reset = " << fmt(c.network.exc.lif.v_reset_mv) << "\n";
    out << "exc_v_thresh = " << fmt(c.network.exc.lif.v_thresh_mv) << "\n";
    out << "exc_tc_decay_ms = " << fmt(c.network.exc.lif.tc_decay_ms) << "\n";
    out << "exc_refrac_ms = " << fmt(c.network.exc.lif.refrac_ms) << "\n";
    out << "theta_plus = " << fmt(c.network.exc.theta_plus_mv) << "\n";
    out << "tc_theta_decay_ms = " << fmt(c.network.exc.tc_theta_decay_ms) << "\n";
    out << "inh_v_rest = " << fmt(c.network.inh.v_rest_mv) << "\n";
    out << "inh_v_reset = " << fmt(c.network.inh.v_reset_mv) << "\n";
    out << "inh_v_thresh = " << fmt(c.network.inh.v_thresh_mv) << "\n";
    out << "inh_tc_decay_ms = " << fmt(c.network.inh.tc_decay_ms) << "\n";
    out << "inh_refrac_ms = " << fmt(c.network.inh.refrac_ms) << "\n";
    out << "\n[encode]\n";
    out << "duration_ms = " << fmt(c.encode.duration_ms) << "\n";
    out << "dt_ms = " << fmt(c.encode.dt_ms) << "\n";
    out << "max_rate_hz = " << fmt(c.encode.max_rate_hz) << "\n";
    out << "\n[sweep]\n";
    std::string kinds;
    for (AttackKind k : c.grid.kinds) {
        if (!kinds.empty()) kinds += ',';
        kinds += fault::to_string(k);
    }
    out << "attacks = " << kinds << "\n";
    out << "deltas = " << join_doubles(c.grid.deltas) << "\n";
    out << "vdds = " << join_doubles(c.grid.v_dds) << "\n";
    out << "fractions = " << join_doubles(c.grid.fractions) << "\n";
    std::string defenses;
    for (const auto& set : c.grid.defense_sets) {
        if (!defenses.empty()) defenses += ';';
        defenses += defenses_to_string(set);
    }
    out << "defenses = " << defenses << "\n";
    out << "phase = " << fault::to_string(c.grid.phase) << "\n";
    out << "neuron_kind = " << circuit::to_string(c.grid.neuron_kind) << "\n";
    out << "mask_mode = "
        << (c.grid.mask_mode == fault::MaskMode::Random ? "random" : "contiguous") << "\n";
    out << "\n[campaign]\n";
    std::string seeds;
    for (std::uint64_t s : c.seeds) {
        if (!seeds.empty()) seeds += ',';
        seeds += std::to_string(s);
    }
    out << "seeds = " << seeds << "\n";
    out << "train_size = " << c.train_size << "\n";
    out << "eval_size = " << c.eval_size << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    out << "\n[detect]\n";
    out << "neuron_kind = " << circuit::to_string(c.detect_neuron_kind) << "\n";
    out << "window_ms = " << fmt(c.detect_window_ms) << "\n";
    out << "vdds = " << join_doubles(c.detect_v_dds) << "\n";
    out << "threshold_frac = " << fmt(c.detect_threshold_frac) << "\n";
    return out.str();
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out =
        "attack,layer,delta,vdd,fraction,defenses,seed,accuracy,baseline,relative_degradation\n";
    for (const ResultRow& r : rows) {
        out += r.attack;
        out += ',';
        out += r.layer;
        out += ',';
        out += fmt6(r.delta);
        out += ',';
        out += fmt6(r.v_dd);
        out += ',';
        out += fmt6(r.fraction);
        out += ',';
        out += r.defenses;
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += fmt6(r.accuracy);
        out += ',';
        out += fmt6(r.baseline);
        out += ',';
        out += fmt6(r.relative_degradation);
        out += '\n';
    }
    return out;
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw ConfigError("cannot write " + path);
    out << to_csv(rows);
    if (!out) throw ConfigError("write failed: " + path);
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        trim(line) !=
            "attack,layer,delta,vdd,fraction,defenses,seed,accuracy,baseline,relative_degradation")
        throw ConfigError("bad CSV header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<std::string> f = split(line, ',');
        if (f.size() != 10) throw ConfigError("bad CSV row: " + line);
        ResultRow r;
        r.attack = f[0];
        r.layer = f[1];
        r.delta = parse_double("delta", f[2]);
        r.v_dd = parse_double("vdd", f[3]);
        r.fraction = parse_double("fraction", f[4]);
        r.defenses = f[5];
        r.seed = std::uint64_t(parse_int("seed", f[6]));
        r.accuracy = parse_double("accuracy", f[7]);
        r.baseline = parse_double("baseline", f[8]);
        r.relative_degradation = parse_double("relative_degradation", f[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void save_model(const snn::TrainedModel& model, const std::string& path) {
    static_assert(std::endian::native == std::endian::little,
                  "snapshot format is little-endian");
    std::vector<std::uint8_t> bytes;
    write_bytes(bytes, "SNFL", 4);
    write_le<std::uint16_t>(bytes, 1);
    write_le<std::uint64_t>(bytes, model.config_fingerprint);
    write_le<std::uint64_t>(bytes, model.seed);
    const std::uint32_t n_exc = std::uint32_t(model.theta_mv.size());
    const std::uint32_t n_input =
        n_exc ? std::uint32_t(model.weights.size() / n_exc) : 0;
    write_le<std::uint32_t>(bytes, n_input);
    write_le<std::uint32_t>(bytes, n_exc);
    for (double w : model.weights) write_le<double>(bytes, w);
    for (double t : model.theta_mv) write_le<double>(bytes, t);
    write_bytes(bytes, model.assignments.data(), model.assignments.size());
    write_le<std::uint64_t>(bytes, fnv1a_bytes(bytes.data(), bytes.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw ConfigError("write failed: " + path);
}

snn::TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 4 + 2 + 8 || std::memcmp(bytes.data(), "SNFL", 4) != 0)
        throw ConfigError("not a model snapshot (bad magic)");
    std::uint64_t trailer;
    std::memcpy(&trailer, bytes.data() + bytes.size() - 8, 8);
    if (fnv1a_bytes(bytes.data(), bytes.size() - 8) != trailer)
        throw ConfigError("model snapshot checksum mismatch");

    std::size_t offset = 4;
    const std::uint16_t version = read_le<std::uint16_t>(bytes, offset);
    if (version != 1)
        throw ConfigError("unsupported snapshot version " + std::to_string(version));
    snn::TrainedModel model;
    model.config_fingerprint = read_le<std::uint64_t>(bytes, offset);
    model.seed = read_le<std::uint64_t>(bytes, offset);
    const std::uint32_t n_input = read_le<std::uint32_t>(bytes, offset);
    const std::uint32_t n_exc = read_le<std::uint32_t>(bytes, offset);
    const std::size_t expect =
        offset + std::size_t(n_input) * n_exc * 8 + std::size_t(n_exc) * 8 + n_exc + 8;
    if (bytes.size() != expect) throw ConfigError("model snapshot payload size mismatch");
    model.weights.resize(std::size_t(n_input) * n_exc);
    for (double& w : model.weights) w = read_le<double>(bytes, offset);
    model.theta_mv.resize(n_exc);
    for (double& t : model.theta_mv) t = read_le<double>(bytes, offset);
    model.assignments.assign(bytes.begin() + std::ptrdiff_t(offset),
                             bytes.begin() + std::ptrdiff_t(offset) + n_exc);
    return model;
}

namespace {

struct Datasets {
    mnist::ImageSet train_images;
    mnist::LabelSet train_labels;
    mnist::ImageSet test_images;
    mnist::LabelSet test_labels;
};

Datasets load_datasets(const CampaignConfig& config) {
    Datasets d;
    d.train_images = mnist::load_images(config.train_images);
    d.train_labels = mnist::load_labels(config.train_labels);
    d.test_images = mnist::load_images(config.test_images);
    d.test_labels = mnist::load_labels(config.test_labels);
    return d;
}

struct SeedData {
    mnist::ImageSet train_images;
    mnist::LabelSet train_labels;
    mnist::ImageSet eval_images;
    mnist::LabelSet eval_labels;
    snn::TrainedModel baseline_model;
    double baseline_accuracy = 0.0;
};

SeedData prepare_seed(const CampaignConfig& config, const Datasets& data, std::uint64_t seed) {
    SeedData sd;
    std::tie(sd.train_images, sd.train_labels) =
        mnist::select_subset(data.train_images, data.train_labels, config.train_size, seed);
    std::tie(sd.eval_images, sd.eval_labels) = mnist::select_subset(
        data.test_images, data.test_labels, config.eval_size, Rng::derive(seed, 0xEAA1));
    const fault::FaultPlan identity =
        fault::FaultPlan::identity(config.network.n_exc, config.network.n_inh);
    sd.baseline_model = snn::train(config.network, config.encode, sd.train_images,
                                   sd.train_labels, seed, identity);
    sd.baseline_accuracy = snn::evaluate(config.network, config.encode, sd.baseline_model,
                                         sd.eval_images, sd.eval_labels, identity, seed);
    return sd;
}

}  // namespace

snn::TrainedModel train_baseline(const CampaignConfig& config, std::uint64_t seed) {
    auto [imgs, lbls] = train_subset(config, seed);
    return snn::train(config.network, config.encode, imgs, lbls, seed,
                      fault::FaultPlan::identity(config.network.n_exc, config.network.n_inh));
}

std::pair<mnist::ImageSet, mnist::LabelSet> train_subset(const CampaignConfig& config,
                                                         std::uint64_t seed) {
    return mnist::select_subset(mnist::load_images(config.train_images),
                                mnist::load_labels(config.train_labels), config.train_size,
                                seed);
}

std::pair<mnist::ImageSet, mnist::LabelSet> eval_subset(const CampaignConfig& config,
                                                        std::uint64_t seed) {
    return mnist::select_subset(mnist::load_images(config.test_images),
                                mnist::load_labels(config.test_labels), config.eval_size,
                                Rng::derive(seed, 0xEAA1));
}

std::vector<ResultRow> run_campaign(const CampaignConfig& config, int n_workers) {
    const Datasets data = load_datasets(config);

    std::map<std::uint64_t, SeedData> by_seed;
    for (std::uint64_t seed : config.seeds)
        by_seed.emplace(seed, prepare_seed(config, data, seed));

    std::vector<ResultRow> rows;
    for (std::uint64_t seed : config.seeds) {
        const SeedData& sd = by_seed.at(seed);
        ResultRow r;
        r.attack = "baseline";
        r.layer = "-";
        r.defenses = "none";
        r.seed = seed;
        r.accuracy = sd.baseline_accuracy;
        r.baseline = sd.baseline_accuracy;
        rows.push_back(std::move(r));
    }

    std::vector<fault::AttackSpec> specs;
    if (!config.grid.kinds.empty()) specs = fault::sweep(config.grid);

    std::vector<ResultRow> sweep_rows(specs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size() || failed.load()) return;
            try {
                const fault::AttackSpec& spec = specs[i];
                const SeedData& sd = by_seed.at(spec.seed);
                const fault::FaultPlan plan =
                    fault::build_fault_plan(spec, config.network.n_exc, config.network.n_inh);
                double accuracy;
                if (!plan.active_during_training()) {
                    accuracy = snn::evaluate(config.network, config.encode, sd.baseline_model,
                                             sd.eval_images, sd.eval_labels, plan, spec.seed);
                } else {
                    const snn::TrainedModel model =
                        snn::train(config.network, config.encode, sd.train_images,
                                   sd.train_labels, spec.seed, plan);
                    accuracy = snn::evaluate(config.network, config.encode, model,
                                             sd.eval_images, sd.eval_labels, plan, spec.seed);
                }
                ResultRow r;
                r.attack = fault::to_string(spec.kind);
                r.layer = layer_of(spec.kind);
                r.delta = spec.kind == fault::AttackKind::GlobalVdd ? 0.0 : spec.delta;
                r.v_dd = spec.kind == fault::AttackKind::GlobalVdd ? spec.v_dd : 1.0;
                r.fraction = spec.fraction_affected;
                r.defenses = defenses_to_string(spec.defenses);
                r.seed = spec.seed;
                r.accuracy = accuracy;
                r.baseline = sd.baseline_accuracy;
                r.relative_degradation =
                    (sd.baseline_accuracy - accuracy) / sd.baseline_accuracy;
                sweep_rows[i] = std::move(r);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error_message = e.what();
                return;
            }
        }
    };

    if (n_workers <= 0)
        n_workers = int(std::max(1u, std::thread::hardware_concurrency()));
    n_workers = int(std::min<std::size_t>(std::size_t(n_workers), std::max<std::size_t>(1, specs.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();

    if (failed.load()) {
        // Flush what completed, in order, with a resume marker.
        std::vector<ResultRow> partial = rows;
        std::size_t done = 0;
        for (const ResultRow& r : sweep_rows) {
            if (r.attack.empty()) break;
            partial.push_back(r);
            ++done;
        }
        std::filesystem::create_directories(config.out_dir);
        const std::string path = config.out_dir + "/results.partial.csv";
        std::ofstream out(path, std::ios::binary);
        out << to_csv(partial) << "# resume-after=" << done << "\n";
        throw ConfigError("campaign failed after " + std::to_string(done) + "/" +
                          std::to_string(specs.size()) + " points (partial results in " + path +
                          "): " + error_message);
    }

    rows.insert(rows.end(), sweep_rows.begin(), sweep_rows.end());
    return rows;
}

std::vector<DetectorRow> detect_report(const CampaignConfig& config) {
    std::vector<DetectorRow> rows;
    const double window = config.detect_window_ms / 1000.0;
    const circuit::DummyCount base = circuit::dummy_spike_count(
        1.0, window, config.detect_neuron_kind, circuit::DefenseVariant::NoDefense);
    for (double v_dd : config.detect_v_dds) {
        for (const char* layer : {"el", "il"}) {
            const circuit::DummyCount obs = circuit::dummy_spike_count(
                v_dd, window, config.detect_neuron_kind, circuit::DefenseVariant::NoDefense);
            DetectorRow r;
            r.layer = layer;
            r.v_dd = v_dd;
            r.observed = obs.count;
            r.baseline = base.count;
            r.deviation = double(obs.count - base.count) / double(base.count);
            r.flagged = obs.never_spiked ||
                        circuit::detect_vdd_anomaly(obs.count, base.count,
                                                    config.detect_threshold_frac);
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace snnfaultlab::campaign
