#include "chebmixer/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace chebmixer {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'X', '1'};
constexpr int kVersion = 1;

std::string config_header(const ModelConfig& cfg) {
    std::ostringstream os;
    os << "version = " << kVersion << "\n";
    os << "k = " << cfg.k_order << "\n";
    os << "d = " << cfg.d << "\n";
    os << "layers = " << cfg.layers << "\n";
    os << "d_s = " << cfg.d_s << "\n";
    os << "d_c = " << cfg.d_c << "\n";
    os << "classes = " << cfg.classes << "\n";
    os << "d_raw = " << cfg.d_raw << "\n";
    os << "aggregator = " << aggregator_mode_name(cfg.aggregator) << "\n";
    if (cfg.lambda_mode == LambdaMaxMode::Auto) {
        os << "lambda_max = auto\n";
    } else {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", cfg.lambda_fixed);
        os << "lambda_max = " << buf << "\n";
    }
    os << "mixer_biases = " << (cfg.mixer_biases ? "true" : "false") << "\n";
    os << "agg_halved_c0 = " << (cfg.agg_halved_c0 ? "true" : "false") << "\n";
    return os.str();
}

std::string shape_token(const std::vector<int64_t>& shape) {
    std::string s;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s;
}

std::vector<int64_t> parse_shape_token(const std::string& token) {
    std::vector<int64_t> shape;
    size_t start = 0;
    while (start <= token.size()) {
        const size_t pos = token.find('x', start);
        const std::string part =
            token.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        shape.push_back(std::stoll(part));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return shape;
}

[[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("checkpoint: " + what);
}

ModelConfig parse_config(const std::map<std::string, std::string>& kv) {
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) fail("header is missing key '" + std::string(key) + "'");
        return it->second;
    };
    if (std::stoi(get("version")) != kVersion) {
        fail("unsupported version " + get("version"));
    }
    ModelConfig cfg;
    cfg.k_order = std::stoi(get("k"));
    cfg.d = std::stoll(get("d"));
    cfg.layers = std::stoll(get("layers"));
    cfg.d_s = std::stoll(get("d_s"));
    cfg.d_c = std::stoll(get("d_c"));
    cfg.classes = std::stoll(get("classes"));
    cfg.d_raw = std::stoll(get("d_raw"));
    cfg.aggregator = parse_aggregator_mode(get("aggregator"));
    const std::string& lm = get("lambda_max");
    if (lm == "auto") {
        cfg.lambda_mode = LambdaMaxMode::Auto;
    } else {
        cfg.lambda_mode = LambdaMaxMode::Fixed;
        cfg.lambda_fixed = std::stod(lm);
    }
    cfg.mixer_biases = get("mixer_biases") == "true";
    cfg.agg_halved_c0 = get("agg_halved_c0") == "true";
    return cfg;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::filesystem::path& path) {
    std::ostringstream header;
    header << config_header(cfg);
    const auto refs = param_refs(params);
    for (const ParamRef& r : refs) {
        header << "tensor " << r.name << " " << shape_token(r.tensor->shape) << "\n";
    }
    const std::string head = header.str();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + path.string());
    out.write(kMagic, 4);
    const uint32_t len = static_cast<uint32_t>(head.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const ParamRef& r : refs) {
        out.write(reinterpret_cast<const char*>(r.tensor->ptr()),
                  static_cast<std::streamsize>(r.tensor->numel() * sizeof(double)));
    }
    if (!out) fail("write failure on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) fail("bad magic in " + path.string());
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in) fail("truncated header length");
    std::string head(len, '\0');
    in.read(head.data(), len);
    if (!in) fail("truncated header");

    std::map<std::string, std::string> kv;
    std::vector<std::pair<std::string, std::vector<int64_t>>> manifest;
    std::istringstream hs(head);
    std::string line;
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        if (line.rfind("tensor ", 0) == 0) {
            std::istringstream ls(line);
            std::string word, name, shape;
            ls >> word >> name >> shape;
            manifest.emplace_back(name, parse_shape_token(shape));
            continue;
        }
        const size_t eq = line.find(" = ");
        if (eq == std::string::npos) fail("malformed header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }

    Checkpoint ck;
    ck.cfg = parse_config(kv);

    // Shapes implied by the embedded config, in manifest order.
    ModelParams shaped = init_model(ck.cfg, 0);
    const auto refs = param_refs(shaped);
    if (refs.size() != manifest.size()) {
        fail("manifest lists " + std::to_string(manifest.size()) + " tensors, config implies " +
             std::to_string(refs.size()));
    }
    for (size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].name != manifest[i].first || refs[i].tensor->shape != manifest[i].second) {
            fail("shape mismatch for tensor " + manifest[i].first + ": stored " +
                 shape_str(manifest[i].second) + ", config implies " +
                 shape_str(refs[i].tensor->shape));
        }
    }
    if (expected) {
        ModelParams want = init_model(*expected, 0);
        const auto want_refs = param_refs(want);
        if (want_refs.size() != refs.size()) {
            fail("tensor set differs from the requested config (" + std::to_string(refs.size()) +
                 " stored vs " + std::to_string(want_refs.size()) + " requested)");
        }
        for (size_t i = 0; i < refs.size(); ++i) {
            if (want_refs[i].name != manifest[i].first ||
                want_refs[i].tensor->shape != manifest[i].second) {
                fail("shape mismatch for tensor " + want_refs[i].name + ": checkpoint has " +
                     shape_str(manifest[i].second) + ", requested config needs " +
                     shape_str(want_refs[i].tensor->shape));
            }
        }
    }

    for (const ParamRef& r : refs) {
        in.read(reinterpret_cast<char*>(r.tensor->ptr()),
                static_cast<std::streamsize>(r.tensor->numel() * sizeof(double)));
        if (!in) fail("truncated tensor data in " + r.name);
    }
    char extra;
    if (in.read(&extra, 1)) fail("trailing bytes after tensor data");
    ck.params = std::move(shaped);
    return ck;
}

}  // namespace chebmixer
