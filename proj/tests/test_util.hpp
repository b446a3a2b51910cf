#pragma once

#include <vector>

#include "chebmixer/graph.hpp"
#include "chebmixer/rng.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer::testutil {

inline Tensor rand_tensor(Rng& rng, std::vector<int64_t> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

/// Erdos-Renyi style random graph; guarantees at least one edge.
inline CsrGraph rand_graph(Rng& rng, int64_t n, double edge_prob) {
    std::vector<Edge> edges;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = i + 1; j < n; ++j) {
            if (rng.uniform() < edge_prob) edges.push_back({i, j, 0.5 + rng.uniform()});
        }
    }
    if (edges.empty()) edges.push_back({0, n - 1, 1.0});
    return build_csr(n, edges, true);
}

/// The 3-node path 0-1-2 with unit weights.
inline CsrGraph path3() {
    return build_csr(3, {{0, 1, 1.0}, {1, 2, 1.0}}, true);
}

inline std::vector<int64_t> rand_perm(Rng& rng, int64_t n) {
    std::vector<int64_t> p(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    for (int64_t i = n - 1; i > 0; --i) {
        const int64_t j = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(i + 1)));
        std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
    }
    return p;
}

}  // namespace chebmixer::testutil
