#include "qckit/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace qc {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(value, &pos);
        if (pos == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key " + key + " needs an integer, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key " + key + " needs a number, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig rc;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + " has no '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + " has an empty key");
        if (rc.kv_.count(key))
            throw ConfigError("duplicate key " + key + " on line " + std::to_string(lineno));
        rc.kv_.emplace(key, value);
    }
    return rc;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_int(key, it->second);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key " + key + " needs a boolean, got '" + v + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key, std::vector<int> fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<int> out;
    for (const auto& item : split_list(it->second))
        out.push_back(static_cast<int>(parse_int(key, item)));
    return out;
}

std::vector<std::int64_t> RunConfig::get_int64_list(const std::string& key,
                                                    std::vector<std::int64_t> fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(it->second)) out.push_back(parse_int(key, item));
    return out;
}

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

void RunConfig::require_known(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : kv_)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ConfigError("unknown key " + k);
}

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = {
        "model.arch",          "model.data_channels", "model.channels",
        "model.stage_points",  "model.latent_dim",    "model.target_neighbors",
        "model.mlp_hidden",    "model.learned_weights", "model.channel_bias",
        "model.pool_window",   "model.lambda",        "model.domain_volume",
        "model.precision",     "model.seed",          "train.lr",
        "train.batch_size",    "train.max_steps",     "train.train_fraction",
        "train.seed",          "train.log_every",     "train.stop_rel",
    };
    return keys;
}

AutoencoderConfig autoencoder_config_from(const RunConfig& rc) {
    AutoencoderConfig c;
    const std::string arch = rc.get_string("model.arch", "pool");
    if (arch == "pool")
        c.arch = ArchStyle::Pool;
    else if (arch == "downsample")
        c.arch = ArchStyle::Downsample;
    else
        throw ConfigError("model.arch must be pool or downsample, got '" + arch + "'");
    c.data_channels = static_cast<int>(rc.get_int("model.data_channels", c.data_channels));
    c.channels = rc.get_int_list("model.channels", c.channels);
    c.stage_points = rc.get_int64_list("model.stage_points", c.stage_points);
    c.latent_dim = static_cast<int>(rc.get_int("model.latent_dim", c.latent_dim));
    c.target_neighbors = static_cast<int>(rc.get_int("model.target_neighbors", c.target_neighbors));
    c.mlp_hidden = rc.get_int_list("model.mlp_hidden", c.mlp_hidden);
    c.learned_weights = rc.get_bool("model.learned_weights", c.learned_weights);
    c.channel_bias = rc.get_bool("model.channel_bias", c.channel_bias);
    c.pool_window = static_cast<int>(rc.get_int("model.pool_window", c.pool_window));
    c.lambda = rc.get_double("model.lambda", c.lambda);
    c.domain_volume = rc.get_double("model.domain_volume", c.domain_volume);
    const std::string prec = rc.get_string("model.precision", "f64");
    if (prec == "f64")
        c.precision = Precision::F64;
    else if (prec == "f32")
        c.precision = Precision::F32;
    else
        throw ConfigError("model.precision must be f64 or f32, got '" + prec + "'");
    c.seed = static_cast<std::uint64_t>(rc.get_int("model.seed", std::int64_t(c.seed)));
    return c;
}

TrainConfig train_config_from(const RunConfig& rc) {
    TrainConfig c;
    c.lr = rc.get_double("train.lr", c.lr);
    c.batch_size = static_cast<int>(rc.get_int("train.batch_size", c.batch_size));
    c.max_steps = rc.get_int("train.max_steps", c.max_steps);
    c.train_fraction = rc.get_double("train.train_fraction", c.train_fraction);
    c.seed = static_cast<std::uint64_t>(rc.get_int("train.seed", std::int64_t(c.seed)));
    c.log_every = rc.get_int("train.log_every", c.log_every);
    c.stop_rel = rc.get_double("train.stop_rel", c.stop_rel);
    return c;
}

RunConfig to_run_config(const AutoencoderConfig& model, const TrainConfig& train) {
    RunConfig rc;
    const auto join_int = [](const auto& list) {
        std::string out;
        for (std::size_t k = 0; k < list.size(); ++k) {
            if (k) out += ',';
            out += std::to_string(list[k]);
        }
        return out;
    };
    const auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };

    rc.set("model.arch", model.arch == ArchStyle::Pool ? "pool" : "downsample");
    rc.set("model.data_channels", std::to_string(model.data_channels));
    rc.set("model.channels", join_int(model.channels));
    if (!model.stage_points.empty()) rc.set("model.stage_points", join_int(model.stage_points));
    rc.set("model.latent_dim", std::to_string(model.latent_dim));
    rc.set("model.target_neighbors", std::to_string(model.target_neighbors));
    rc.set("model.mlp_hidden", join_int(model.mlp_hidden));
    rc.set("model.learned_weights", model.learned_weights ? "true" : "false");
    rc.set("model.channel_bias", model.channel_bias ? "true" : "false");
    rc.set("model.pool_window", std::to_string(model.pool_window));
    rc.set("model.lambda", fmt(model.lambda));
    rc.set("model.domain_volume", fmt(model.domain_volume));
    rc.set("model.precision", model.precision == Precision::F64 ? "f64" : "f32");
    rc.set("model.seed", std::to_string(model.seed));

    rc.set("train.lr", fmt(train.lr));
    rc.set("train.batch_size", std::to_string(train.batch_size));
    rc.set("train.max_steps", std::to_string(train.max_steps));
    rc.set("train.train_fraction", fmt(train.train_fraction));
    rc.set("train.seed", std::to_string(train.seed));
    rc.set("train.log_every", std::to_string(train.log_every));
    rc.set("train.stop_rel", fmt(train.stop_rel));
    return rc;
}

}  // namespace qc
