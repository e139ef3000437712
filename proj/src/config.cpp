#include "sensemask/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sensemask/error.hpp"

namespace sensemask {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end || value.empty()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Prefer the shortest form that round-trips.
    for (int p = 1; p <= 17; ++p) {
        char tmp[64];
        std::snprintf(tmp, sizeof tmp, "%.*g", p, v);
        if (std::strtod(tmp, nullptr) == v) return tmp;
    }
    return buf;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.entries_[key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void RunConfig::merge(const RunConfig& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string RunConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    return parse_number<std::uint64_t>(key, get(key));
}

double RunConfig::get_double(const std::string& key) const {
    return parse_number<double>(key, get(key));
}

void RunConfig::require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : entries_) {
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
}

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
}

void RunConfig::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize();
}

RunConfig plant_spec_defaults() {
    const PlantSpec d;
    return {{"h", std::to_string(d.h)},
            {"l", std::to_string(d.l)},
            {"head_size", std::to_string(d.head_size)},
            {"k_true", std::to_string(d.k_true)},
            {"k_true_b", std::to_string(d.k_true_b)},
            {"n_words", std::to_string(d.n_words)},
            {"senses_min", std::to_string(d.senses_min)},
            {"senses_max", std::to_string(d.senses_max)},
            {"aux_classes", std::to_string(d.aux_classes)},
            {"n_occurrences", std::to_string(d.n_occurrences)},
            {"signal_strength", fmt(d.signal_strength)},
            {"noise_sigma", fmt(d.noise_sigma)},
            {"seed", std::to_string(d.seed)},
            {"source", "hidden"}};
}

PlantSpec to_plant_spec(const RunConfig& cfg) {
    PlantSpec s;
    s.h = cfg.get_int("h");
    s.l = cfg.get_int("l");
    s.head_size = cfg.get_int("head_size");
    s.k_true = cfg.get_int("k_true");
    s.k_true_b = cfg.get_int("k_true_b");
    s.n_words = cfg.get_int("n_words");
    s.senses_min = cfg.get_int("senses_min");
    s.senses_max = cfg.get_int("senses_max");
    s.aux_classes = cfg.get_int("aux_classes");
    s.n_occurrences = cfg.get_int("n_occurrences");
    s.signal_strength = cfg.get_double("signal_strength");
    s.noise_sigma = cfg.get_double("noise_sigma");
    s.seed = cfg.get_u64("seed");
    const auto source = cfg.get("source");
    if (source == "hidden") {
        s.source = Source::Hidden;
    } else if (source == "attention") {
        s.source = Source::Attention;
    } else {
        throw ConfigError("source must be hidden or attention, got '" + source + "'");
    }
    return s;
}

RunConfig train_config_defaults() {
    const TrainConfig d;
    return {{"mode", "dim"},
            {"k", std::to_string(d.k)},
            {"heads", "0"},
            {"batch_size", std::to_string(d.batch_size)},
            {"lr", fmt(d.lr)},
            {"max_epochs", std::to_string(d.max_epochs)},
            {"patience", std::to_string(d.patience)},
            {"seed", std::to_string(d.seed)},
            {"aspects", std::to_string(d.loss.aspects)},
            {"lambda", fmt(d.loss.lambda)},
            {"beta1", fmt(d.beta1)},
            {"beta2", fmt(d.beta2)},
            {"eps", fmt(d.eps)}};
}

TrainConfig to_train_config(const RunConfig& cfg, int head_size) {
    TrainConfig t;
    const auto mode = cfg.get("mode");
    if (mode == "dim") {
        t.mode = MaskMode::Dim;
    } else if (mode == "head") {
        t.mode = MaskMode::Head;
    } else {
        throw ConfigError("mode must be dim or head, got '" + mode + "'");
    }
    t.k = cfg.get_int("k");
    const int heads = cfg.get_int("heads");
    if (heads < 0) throw ConfigError("heads must be >= 0");
    if (heads > 0) {
        if (t.mode != MaskMode::Head) throw ConfigError("heads is only meaningful with mode=head");
        t.k = heads * head_size;
    }
    if (t.mode == MaskMode::Head) {
        if (head_size < 1) throw ConfigError("mode=head needs an attention dump with a head size");
        if (t.k % head_size != 0) {
            throw ConfigError("k=" + std::to_string(t.k) + " is not a multiple of the head size " +
                              std::to_string(head_size));
        }
    }
    t.batch_size = cfg.get_int("batch_size");
    t.lr = cfg.get_double("lr");
    t.max_epochs = cfg.get_int("max_epochs");
    t.patience = cfg.get_int("patience");
    t.seed = cfg.get_u64("seed");
    t.loss.aspects = cfg.get_int("aspects");
    t.loss.lambda = cfg.get_double("lambda");
    t.beta1 = cfg.get_double("beta1");
    t.beta2 = cfg.get_double("beta2");
    t.eps = cfg.get_double("eps");
    t.validate();
    return t;
}

RunConfig classifier_config_defaults() {
    const ClassifierConfig d;
    return {{"cls_batch_size", std::to_string(d.batch_size)},
            {"cls_lr", fmt(d.lr)},
            {"cls_max_epochs", std::to_string(d.max_epochs)},
            {"cls_patience", std::to_string(d.patience)},
            {"seed", std::to_string(d.seed)},
            {"beta1", fmt(d.beta1)},
            {"beta2", fmt(d.beta2)},
            {"eps", fmt(d.eps)}};
}

ClassifierConfig to_classifier_config(const RunConfig& cfg) {
    ClassifierConfig c;
    c.batch_size = cfg.get_int("cls_batch_size");
    c.lr = cfg.get_double("cls_lr");
    c.max_epochs = cfg.get_int("cls_max_epochs");
    c.patience = cfg.get_int("cls_patience");
    c.seed = cfg.get_u64("seed");
    c.beta1 = cfg.get_double("beta1");
    c.beta2 = cfg.get_double("beta2");
    c.eps = cfg.get_double("eps");
    if (c.batch_size < 1 || c.patience < 1 || c.max_epochs < 1) {
        throw ConfigError("classifier batch size, patience and epochs must be >= 1");
    }
    if (!(c.lr >= 0.0)) throw ConfigError("cls_lr must be >= 0");
    return c;
}

}  // namespace sensemask
