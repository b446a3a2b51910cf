#include "chebmixer/config.hpp"

#include <cstdio>
#include <fstream>

namespace chebmixer {

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

int64_t to_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config: key '" + key + "' expects true or false, got '" + value + "'");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    ModelConfig& m = train.model;
    if (key == "k") {
        m.k_order = static_cast<int>(to_int(key, value));
    } else if (key == "d") {
        m.d = to_int(key, value);
    } else if (key == "layers") {
        m.layers = to_int(key, value);
    } else if (key == "d_s") {
        m.d_s = to_int(key, value);
    } else if (key == "d_c") {
        m.d_c = to_int(key, value);
    } else if (key == "aggregator") {
        try {
            m.aggregator = parse_aggregator_mode(value);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    } else if (key == "lambda_max") {
        if (value == "auto") {
            m.lambda_mode = LambdaMaxMode::Auto;
        } else {
            m.lambda_mode = LambdaMaxMode::Fixed;
            m.lambda_fixed = to_double(key, value);
            if (m.lambda_fixed <= 0.0) {
                throw ConfigError("config: lambda_max must be positive or 'auto'");
            }
        }
    } else if (key == "mixer_biases") {
        m.mixer_biases = to_bool(key, value);
    } else if (key == "agg_halved_c0") {
        m.agg_halved_c0 = to_bool(key, value);
    } else if (key == "lr") {
        train.lr = to_double(key, value);
    } else if (key == "weight_decay") {
        train.weight_decay = to_double(key, value);
    } else if (key == "beta1") {
        train.beta1 = to_double(key, value);
    } else if (key == "beta2") {
        train.beta2 = to_double(key, value);
    } else if (key == "eps") {
        train.eps = to_double(key, value);
    } else if (key == "max_epochs") {
        train.max_epochs = to_int(key, value);
    } else if (key == "patience") {
        train.patience = to_int(key, value);
    } else if (key == "train_frac") {
        train.train_frac = to_double(key, value);
    } else if (key == "val_frac") {
        train.val_frac = to_double(key, value);
    } else if (key == "test_frac") {
        train.test_frac = to_double(key, value);
    } else if (key == "timing") {
        if (value == "wall") {
            record_timing = true;
        } else if (value == "none") {
            record_timing = false;
        } else {
            throw ConfigError("config: key 'timing' expects wall or none, got '" + value + "'");
        }
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + path.filename().string() + " line " +
                              std::to_string(lineno) + ": expected key = value");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::map<std::string, std::string> RunConfig::echo() const {
    const ModelConfig& m = train.model;
    std::map<std::string, std::string> kv;
    kv["k"] = std::to_string(m.k_order);
    kv["d"] = std::to_string(m.d);
    kv["layers"] = std::to_string(m.layers);
    kv["d_s"] = std::to_string(m.d_s);
    kv["d_c"] = std::to_string(m.d_c);
    kv["aggregator"] = aggregator_mode_name(m.aggregator);
    kv["lambda_max"] =
        m.lambda_mode == LambdaMaxMode::Auto ? "auto" : fmt_double(m.lambda_fixed);
    kv["mixer_biases"] = m.mixer_biases ? "true" : "false";
    kv["agg_halved_c0"] = m.agg_halved_c0 ? "true" : "false";
    kv["lr"] = fmt_double(train.lr);
    kv["weight_decay"] = fmt_double(train.weight_decay);
    kv["beta1"] = fmt_double(train.beta1);
    kv["beta2"] = fmt_double(train.beta2);
    kv["eps"] = fmt_double(train.eps);
    kv["max_epochs"] = std::to_string(train.max_epochs);
    kv["patience"] = std::to_string(train.patience);
    kv["train_frac"] = fmt_double(train.train_frac);
    kv["val_frac"] = fmt_double(train.val_frac);
    kv["test_frac"] = fmt_double(train.test_frac);
    kv["timing"] = record_timing ? "wall" : "none";
    return kv;
}

}  // namespace chebmixer
