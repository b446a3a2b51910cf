#include "chebmixer/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "chebmixer/kernels.hpp"
#include "chebmixer/rng.hpp"

namespace chebmixer {

double CsrGraph::degree(int64_t i) const {
    double d = 0.0;
    for (int64_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) d += weights[e];
    return d;
}

std::vector<double> CsrGraph::degrees() const {
    std::vector<double> d(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) d[static_cast<size_t>(i)] = degree(i);
    return d;
}

CsrGraph build_csr(int64_t n, const std::vector<Edge>& edges, bool symmetrize,
                   bool allow_self_loops) {
    if (n <= 0) throw std::invalid_argument("build_csr: node count must be positive");
    std::vector<std::tuple<int64_t, int64_t, double>> directed;
    directed.reserve(edges.size() * (symmetrize ? 2 : 1));
    for (const Edge& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
            throw std::invalid_argument("build_csr: edge (" + std::to_string(e.u) + "," +
                                        std::to_string(e.v) + ") out of range for n=" +
                                        std::to_string(n));
        }
        if (e.weight <= 0.0) {
            throw std::invalid_argument("build_csr: non-positive weight on edge (" +
                                        std::to_string(e.u) + "," + std::to_string(e.v) + ")");
        }
        if (e.u == e.v && !allow_self_loops) {
            throw std::invalid_argument("build_csr: self-loop at node " + std::to_string(e.u));
        }
        directed.emplace_back(e.u, e.v, e.weight);
        if (symmetrize && e.u != e.v) directed.emplace_back(e.v, e.u, e.weight);
    }
    std::sort(directed.begin(), directed.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    for (size_t i = 1; i < directed.size(); ++i) {
        if (std::get<0>(directed[i]) == std::get<0>(directed[i - 1]) &&
            std::get<1>(directed[i]) == std::get<1>(directed[i - 1])) {
            throw std::invalid_argument("build_csr: duplicate edge (" +
                                        std::to_string(std::get<0>(directed[i])) + "," +
                                        std::to_string(std::get<1>(directed[i])) + ")");
        }
    }

    CsrGraph g;
    g.n = n;
    g.row_ptr.assign(static_cast<size_t>(n + 1), 0);
    g.col_idx.reserve(directed.size());
    g.weights.reserve(directed.size());
    for (const auto& [u, v, w] : directed) {
        g.row_ptr[static_cast<size_t>(u + 1)]++;
        g.col_idx.push_back(v);
        g.weights.push_back(w);
    }
    for (int64_t i = 0; i < n; ++i) g.row_ptr[static_cast<size_t>(i + 1)] += g.row_ptr[static_cast<size_t>(i)];
    return g;
}

SparseLaplacian sym_norm_laplacian(const CsrGraph& g) {
    const std::vector<double> deg = g.degrees();
    std::vector<double> dinv_sqrt(static_cast<size_t>(g.n), 0.0);
    for (int64_t i = 0; i < g.n; ++i) {
        // Isolated nodes use the D^{-1/2}_ii = 0 convention; their row stays
        // an identity row.
        if (deg[static_cast<size_t>(i)] > 0.0)
            dinv_sqrt[static_cast<size_t>(i)] = 1.0 / std::sqrt(deg[static_cast<size_t>(i)]);
    }

    SparseLaplacian lap;
    lap.kind = LaplacianKind::SymmetricNormalized;
    CsrMatrix& m = lap.mat;
    m.n = g.n;
    m.row_ptr.assign(static_cast<size_t>(g.n + 1), 0);
    m.col_idx.reserve(g.col_idx.size() + static_cast<size_t>(g.n));
    m.values.reserve(g.col_idx.size() + static_cast<size_t>(g.n));
    for (int64_t i = 0; i < g.n; ++i) {
        bool diag_done = false;
        for (int64_t e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const int64_t j = g.col_idx[static_cast<size_t>(e)];
            if (!diag_done && j > i) {
                m.col_idx.push_back(i);
                m.values.push_back(1.0);
                diag_done = true;
            }
            if (j == i) {
                // Self-loop contributes to the degree only; stays off the
                // normalized pattern except through the diagonal 1.
                continue;
            }
            m.col_idx.push_back(j);
            m.values.push_back(-g.weights[static_cast<size_t>(e)] * dinv_sqrt[static_cast<size_t>(i)] *
                               dinv_sqrt[static_cast<size_t>(j)]);
        }
        if (!diag_done) {
            m.col_idx.push_back(i);
            m.values.push_back(1.0);
        }
        m.row_ptr[static_cast<size_t>(i + 1)] = static_cast<int64_t>(m.col_idx.size());
    }
    return lap;
}

SparseLaplacian combinatorial_laplacian(const CsrGraph& g) {
    const std::vector<double> deg = g.degrees();
    SparseLaplacian lap;
    lap.kind = LaplacianKind::Combinatorial;
    CsrMatrix& m = lap.mat;
    m.n = g.n;
    m.row_ptr.assign(static_cast<size_t>(g.n + 1), 0);
    for (int64_t i = 0; i < g.n; ++i) {
        bool diag_done = false;
        for (int64_t e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const int64_t j = g.col_idx[static_cast<size_t>(e)];
            if (!diag_done && j > i) {
                m.col_idx.push_back(i);
                m.values.push_back(deg[static_cast<size_t>(i)]);
                diag_done = true;
            }
            if (j == i) continue;
            m.col_idx.push_back(j);
            m.values.push_back(-g.weights[static_cast<size_t>(e)]);
        }
        if (!diag_done) {
            m.col_idx.push_back(i);
            m.values.push_back(deg[static_cast<size_t>(i)]);
        }
        m.row_ptr[static_cast<size_t>(i + 1)] = static_cast<int64_t>(m.col_idx.size());
    }
    return lap;
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void matvec(const CsrMatrix& m, const std::vector<double>& x, std::vector<double>& y) {
    for (int64_t i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int64_t e = m.row_ptr[static_cast<size_t>(i)]; e < m.row_ptr[static_cast<size_t>(i + 1)]; ++e) {
            s += m.values[static_cast<size_t>(e)] * x[static_cast<size_t>(m.col_idx[static_cast<size_t>(e)])];
        }
        y[static_cast<size_t>(i)] = s;
    }
}

}  // namespace

double estimate_lambda_max(const SparseLaplacian& lap, double tol, int max_iter) {
    if (lap.kind == LaplacianKind::Scaled) {
        throw std::invalid_argument("estimate_lambda_max: expects an unscaled PSD Laplacian");
    }
    const CsrMatrix& m = lap.mat;
    const size_t n = static_cast<size_t>(m.n);
    constexpr double kMargin = 1e-6;

    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> y(n, 0.0);
    double lambda = 0.0;
    bool restarted = false;
    for (int it = 0; it < max_iter; ++it) {
        matvec(m, v, y);
        const double ny = norm2(y);
        if (ny < 1e-14) {
            // Start vector lies in the null space (the all-ones vector does for
            // the combinatorial Laplacian); restart from a seeded random one.
            if (restarted) break;
            restarted = true;
            Rng rng = Rng::stream(0, rng_stream::kPowerRestart);
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
            const double nv = norm2(v);
            for (double& x : v) x /= nv;
            lambda = 0.0;
            continue;
        }
        double rayleigh = 0.0;
        for (size_t i = 0; i < n; ++i) rayleigh += v[i] * y[i];
        for (size_t i = 0; i < n; ++i) v[i] = y[i] / ny;
        if (it > 0 && std::fabs(rayleigh - lambda) <= tol * std::max(1.0, std::fabs(rayleigh))) {
            return rayleigh * (1.0 + kMargin);
        }
        lambda = rayleigh;
    }
    if (lap.kind == LaplacianKind::SymmetricNormalized) {
        std::cerr << "warning: power iteration did not converge; using the upper bound 2.0 for the "
                     "symmetric-normalized Laplacian\n";
        return 2.0;
    }
    throw std::runtime_error("estimate_lambda_max: power iteration did not converge");
}

SparseLaplacian scale_laplacian(const SparseLaplacian& lap, double lambda_max) {
    if (lambda_max <= 0.0) {
        throw std::invalid_argument("scale_laplacian: lambda_max must be positive, got " +
                                    std::to_string(lambda_max));
    }
    const double a = 2.0 / lambda_max;
    SparseLaplacian out;
    out.kind = LaplacianKind::Scaled;
    out.lambda_max_used = lambda_max;
    CsrMatrix& s = out.mat;
    const CsrMatrix& m = lap.mat;
    s.n = m.n;
    s.row_ptr.assign(static_cast<size_t>(m.n + 1), 0);
    s.col_idx.reserve(m.col_idx.size() + static_cast<size_t>(m.n));
    s.values.reserve(m.col_idx.size() + static_cast<size_t>(m.n));
    for (int64_t i = 0; i < m.n; ++i) {
        bool diag_done = false;
        for (int64_t e = m.row_ptr[static_cast<size_t>(i)]; e < m.row_ptr[static_cast<size_t>(i + 1)]; ++e) {
            const int64_t j = m.col_idx[static_cast<size_t>(e)];
            if (!diag_done && j > i) {
                s.col_idx.push_back(i);
                s.values.push_back(-1.0);
                diag_done = true;
            }
            double v = a * m.values[static_cast<size_t>(e)];
            if (j == i) {
                v -= 1.0;
                diag_done = true;
            }
            s.col_idx.push_back(j);
            s.values.push_back(v);
        }
        if (!diag_done) {
            s.col_idx.push_back(i);
            s.values.push_back(-1.0);
        }
        s.row_ptr[static_cast<size_t>(i + 1)] = static_cast<int64_t>(s.col_idx.size());
    }
    return out;
}

Tensor spmm(const CsrMatrix& m, const Tensor& x) {
    require_shape(x.rank() == 2 && x.dim(0) == m.n,
                  "spmm: matrix is " + std::to_string(m.n) + "x" + std::to_string(m.n) +
                      " but dense operand is " + shape_str(x.shape));
    Tensor y = Tensor::zeros({m.n, x.dim(1)});
    kernels::spmm(m.n, m.row_ptr.data(), m.col_idx.data(), m.values.data(), x.ptr(), x.dim(1),
                  y.ptr());
    return y;
}

Tensor spmm(const SparseLaplacian& lap, const Tensor& x) { return spmm(lap.mat, x); }

CsrGraph knn_graph(const Tensor& features, int64_t k) {
    require_shape(features.rank() == 2, "knn_graph: features must be 2-D, got " +
                                            shape_str(features.shape));
    const int64_t n = features.dim(0);
    const int64_t d = features.dim(1);
    if (k < 1 || k >= n) {
        throw std::invalid_argument("knn_graph: k must satisfy 1 <= k < n, got k=" +
                                    std::to_string(k) + ", n=" + std::to_string(n));
    }
    std::vector<Edge> edges;
    edges.reserve(static_cast<size_t>(n * k));
    std::vector<std::pair<double, int64_t>> cand(static_cast<size_t>(n - 1));
    // Directed kNN edges, deduplicated into an undirected union below.
    std::vector<std::vector<int64_t>> nbrs(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        size_t c = 0;
        for (int64_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double dist = 0.0;
            for (int64_t t = 0; t < d; ++t) {
                const double diff = features.at(i, t) - features.at(j, t);
                dist += diff * diff;
            }
            cand[c++] = {dist, j};
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<ptrdiff_t>(k), cand.end());
        for (int64_t t = 0; t < k; ++t) nbrs[static_cast<size_t>(i)].push_back(cand[static_cast<size_t>(t)].second);
    }
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j : nbrs[static_cast<size_t>(i)]) {
            const int64_t a = std::min(i, j);
            const int64_t b = std::max(i, j);
            // Keep (a,b) once: accept from the lower endpoint, or from the
            // higher one only when the reverse edge is absent.
            if (i == a) {
                edges.push_back({a, b, 1.0});
            } else {
                const auto& back = nbrs[static_cast<size_t>(a)];
                if (std::find(back.begin(), back.end(), b) == back.end()) {
                    edges.push_back({a, b, 1.0});
                }
            }
        }
    }
    return build_csr(n, edges, /*symmetrize=*/true);
}

CsrGraph permute_graph(const CsrGraph& g, const std::vector<int64_t>& perm) {
    std::vector<Edge> edges;
    for (int64_t i = 0; i < g.n; ++i) {
        for (int64_t e = g.row_ptr[static_cast<size_t>(i)]; e < g.row_ptr[static_cast<size_t>(i + 1)]; ++e) {
            const int64_t j = g.col_idx[static_cast<size_t>(e)];
            if (j >= i) {
                edges.push_back({perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)],
                                 g.weights[static_cast<size_t>(e)]});
            }
        }
    }
    return build_csr(g.n, edges, /*symmetrize=*/true, /*allow_self_loops=*/true);
}

}  // namespace chebmixer
