#include "chebmixer/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "chebmixer/rng.hpp"

namespace chebmixer {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::filesystem::path& file, size_t line,
                             const std::string& what) {
    throw std::runtime_error(file.filename().string() + " line " + std::to_string(line) + ": " +
                             what);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

int64_t parse_int(const std::string& s, const std::filesystem::path& file, size_t line) {
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(file, line, "expected an integer, got '" + s + "'");
    }
}

double parse_double(const std::string& s, const std::filesystem::path& file, size_t line) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(file, line, "expected a number, got '" + s + "'");
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& file, bool required) {
    std::ifstream in(file);
    if (!in) {
        if (required) throw std::runtime_error("missing file: " + file.string());
        return {};
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    // A trailing newline produces no extra record; an intentionally empty
    // file (empty graph) yields zero lines.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace

std::vector<int64_t> Dataset::split_indices(Split s) const {
    std::vector<int64_t> idx;
    for (size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] == s) idx.push_back(static_cast<int64_t>(i));
    }
    return idx;
}

void Dataset::validate() const {
    if (features.rank() != 2 || features.dim(0) != graph.n) {
        throw std::runtime_error("dataset '" + name + "': features " + shape_str(features.shape) +
                                 " do not match node count " + std::to_string(graph.n));
    }
    if (static_cast<int64_t>(labels.size()) != graph.n) {
        throw std::runtime_error("dataset '" + name + "': " + std::to_string(labels.size()) +
                                 " labels for " + std::to_string(graph.n) + " nodes");
    }
    if (class_count < 1) throw std::runtime_error("dataset '" + name + "': class count must be >= 1");
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= class_count) {
            throw std::runtime_error("dataset '" + name + "': label " + std::to_string(labels[i]) +
                                     " at node " + std::to_string(i) + " out of range [0, " +
                                     std::to_string(class_count) + ")");
        }
    }
    if (!splits.empty()) {
        if (static_cast<int64_t>(splits.size()) != graph.n) {
            throw std::runtime_error("dataset '" + name + "': split assignment length mismatch");
        }
        std::vector<bool> seen(static_cast<size_t>(class_count), false);
        for (size_t i = 0; i < splits.size(); ++i) {
            if (splits[i] == Split::Train) seen[static_cast<size_t>(labels[i])] = true;
        }
        for (int64_t c = 0; c < class_count; ++c) {
            if (!seen[static_cast<size_t>(c)]) {
                std::cerr << "warning: dataset '" << name << "': class " << c
                          << " absent from the train split\n";
            }
        }
    }
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset data;

    // meta.tsv
    const auto meta_path = dir / "meta.tsv";
    std::map<std::string, std::string> meta;
    {
        const auto lines = read_lines(meta_path, true);
        for (size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto fields = split_tabs(lines[i]);
            if (fields.size() != 2) parse_fail(meta_path, i + 1, "expected key<TAB>value");
            meta[fields[0]] = fields[1];
        }
        for (const char* key : {"n", "d_raw", "classes", "name"}) {
            if (!meta.count(key)) {
                throw std::runtime_error("meta.tsv: missing required key '" + std::string(key) + "'");
            }
        }
    }
    const int64_t n = parse_int(meta["n"], meta_path, 0);
    const int64_t d_raw = parse_int(meta["d_raw"], meta_path, 0);
    data.class_count = parse_int(meta["classes"], meta_path, 0);
    data.name = meta["name"];

    // graph.tsv
    const auto graph_path = dir / "graph.tsv";
    {
        std::ifstream probe(graph_path);
        if (!probe) throw std::runtime_error("missing file: " + graph_path.string());
    }
    std::vector<Edge> edges;
    {
        const auto lines = read_lines(graph_path, true);
        for (size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto fields = split_tabs(lines[i]);
            if (fields.size() != 2 && fields.size() != 3) {
                parse_fail(graph_path, i + 1, "expected u<TAB>v[<TAB>weight]");
            }
            const int64_t u = parse_int(fields[0], graph_path, i + 1);
            const int64_t v = parse_int(fields[1], graph_path, i + 1);
            if (u >= v) parse_fail(graph_path, i + 1, "edges must satisfy u < v");
            const double w =
                fields.size() == 3 ? parse_double(fields[2], graph_path, i + 1) : 1.0;
            if (w <= 0.0) parse_fail(graph_path, i + 1, "edge weight must be positive");
            edges.push_back({u, v, w});
        }
    }
    try {
        data.graph = build_csr(n, edges, /*symmetrize=*/true);
    } catch (const std::exception& e) {
        throw std::runtime_error("graph.tsv: " + std::string(e.what()));
    }

    // features.tsv
    const auto feat_path = dir / "features.tsv";
    {
        const auto lines = read_lines(feat_path, true);
        if (static_cast<int64_t>(lines.size()) != n) {
            throw std::runtime_error("features.tsv: expected " + std::to_string(n) +
                                     " rows, found " + std::to_string(lines.size()));
        }
        data.features = Tensor::zeros({n, d_raw});
        for (size_t i = 0; i < lines.size(); ++i) {
            const auto fields = split_tabs(lines[i]);
            if (static_cast<int64_t>(fields.size()) != d_raw) {
                parse_fail(feat_path, i + 1,
                           "expected " + std::to_string(d_raw) + " values, found " +
                               std::to_string(fields.size()));
            }
            for (int64_t c = 0; c < d_raw; ++c) {
                data.features.at(static_cast<int64_t>(i), c) =
                    parse_double(fields[static_cast<size_t>(c)], feat_path, i + 1);
            }
        }
    }

    // labels.tsv
    const auto label_path = dir / "labels.tsv";
    {
        const auto lines = read_lines(label_path, true);
        if (static_cast<int64_t>(lines.size()) != n) {
            throw std::runtime_error("labels.tsv: expected " + std::to_string(n) +
                                     " rows, found " + std::to_string(lines.size()));
        }
        data.labels.resize(static_cast<size_t>(n));
        for (size_t i = 0; i < lines.size(); ++i) {
            const int64_t label = parse_int(lines[i], label_path, i + 1);
            if (label < 0 || label >= data.class_count) {
                parse_fail(label_path, i + 1,
                           "class " + std::to_string(label) + " out of range [0, " +
                               std::to_string(data.class_count) + ")");
            }
            data.labels[i] = label;
        }
    }

    // splits.tsv (optional)
    const auto split_path = dir / "splits.tsv";
    if (std::filesystem::exists(split_path)) {
        const auto lines = read_lines(split_path, true);
        if (static_cast<int64_t>(lines.size()) != n) {
            throw std::runtime_error("splits.tsv: expected " + std::to_string(n) +
                                     " rows, found " + std::to_string(lines.size()));
        }
        data.splits.resize(static_cast<size_t>(n));
        for (size_t i = 0; i < lines.size(); ++i) {
            if (lines[i] == "train") {
                data.splits[i] = Split::Train;
            } else if (lines[i] == "val") {
                data.splits[i] = Split::Val;
            } else if (lines[i] == "test") {
                data.splits[i] = Split::Test;
            } else {
                parse_fail(split_path, i + 1, "expected train, val or test, got '" + lines[i] + "'");
            }
        }
    }

    data.validate();
    return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* file) {
        std::ofstream out(dir / file, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
        return out;
    };
    {
        auto out = open("meta.tsv");
        out << "n\t" << data.n() << "\n";
        out << "d_raw\t" << data.d_raw() << "\n";
        out << "classes\t" << data.class_count << "\n";
        out << "name\t" << data.name << "\n";
    }
    {
        auto out = open("graph.tsv");
        const CsrGraph& g = data.graph;
        for (int64_t i = 0; i < g.n; ++i) {
            for (int64_t e = g.row_ptr[static_cast<size_t>(i)]; e < g.row_ptr[static_cast<size_t>(i + 1)]; ++e) {
                const int64_t j = g.col_idx[static_cast<size_t>(e)];
                if (j <= i) continue;  // each undirected edge stored once
                out << i << "\t" << j << "\t" << fmt_double(g.weights[static_cast<size_t>(e)])
                    << "\n";
            }
        }
    }
    {
        auto out = open("features.tsv");
        for (int64_t i = 0; i < data.n(); ++i) {
            for (int64_t c = 0; c < data.d_raw(); ++c) {
                if (c) out << "\t";
                out << fmt_double(data.features.at(i, c));
            }
            out << "\n";
        }
    }
    {
        auto out = open("labels.tsv");
        for (int64_t label : data.labels) out << label << "\n";
    }
    if (data.has_splits()) {
        auto out = open("splits.tsv");
        for (Split s : data.splits) {
            out << (s == Split::Train ? "train" : s == Split::Val ? "val" : "test") << "\n";
        }
    }
}

Dataset gen_sbm(int64_t n, int64_t blocks, double p_in, double p_out, int64_t feat_dim,
                double feat_sep, uint64_t seed) {
    if (blocks < 2) throw std::invalid_argument("gen_sbm: need at least 2 blocks");
    if (n <= 0 || n % blocks != 0) {
        throw std::invalid_argument("gen_sbm: node count must be a positive multiple of the block count");
    }
    if (!(0.0 <= p_out && p_out < p_in && p_in <= 1.0)) {
        throw std::invalid_argument("gen_sbm: probabilities must satisfy 0 <= p_out < p_in <= 1");
    }
    if (feat_dim < blocks) {
        throw std::invalid_argument("gen_sbm: feature dim must be >= block count (orthogonal means)");
    }

    const int64_t block_size = n / blocks;
    Dataset data;
    data.class_count = blocks;
    data.name = "sbm-n" + std::to_string(n) + "-b" + std::to_string(blocks);
    data.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) data.labels[static_cast<size_t>(i)] = i / block_size;

    Rng graph_rng = Rng::stream(seed, rng_stream::kSbmGraph);
    std::vector<Edge> edges;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = i + 1; j < n; ++j) {
            const double p = (data.labels[static_cast<size_t>(i)] ==
                              data.labels[static_cast<size_t>(j)])
                                 ? p_in
                                 : p_out;
            if (graph_rng.uniform() < p) edges.push_back({i, j, 1.0});
        }
    }
    data.graph = build_csr(n, edges, /*symmetrize=*/true);

    Rng feat_rng = Rng::stream(seed, rng_stream::kSbmFeatures);
    data.features = Tensor::zeros({n, feat_dim});
    for (int64_t i = 0; i < n; ++i) {
        const int64_t b = data.labels[static_cast<size_t>(i)];
        for (int64_t c = 0; c < feat_dim; ++c) {
            data.features.at(i, c) = (c == b ? feat_sep : 0.0) + feat_rng.normal();
        }
    }
    return data;
}

}  // namespace chebmixer
