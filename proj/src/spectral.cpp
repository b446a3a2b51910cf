#include "chebmixer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chebmixer/dense.hpp"
#include "chebmixer/kernels.hpp"

namespace chebmixer {

namespace {

void scatter_hop(Tensor& xg, int64_t k, const double* src) {
    const int64_t n = xg.dim(0);
    const int64_t hops = xg.dim(1);
    const int64_t d = xg.dim(2);
    for (int64_t i = 0; i < n; ++i) {
        std::copy(src + i * d, src + (i + 1) * d, xg.ptr() + (i * hops + k) * d);
    }
}

HopSequence power_stack(const CsrMatrix& op, const Tensor& x, int k_order, HopSource source,
                        bool chebyshev) {
    require_shape(x.rank() == 2 && x.dim(0) == op.n,
                  "hop extraction: features " + shape_str(x.shape) +
                      " do not match operator with n=" + std::to_string(op.n));
    if (k_order < 0) throw std::invalid_argument("hop extraction: order must be >= 0");
    const int64_t n = x.dim(0);
    const int64_t d = x.dim(1);
    HopSequence seq;
    seq.k_order = k_order;
    seq.source = source;
    seq.data = Tensor::zeros({n, k_order + 1, d});
    scatter_hop(seq.data, 0, x.ptr());
    if (k_order == 0) return seq;

    Tensor prev = x;
    Tensor cur = Tensor::zeros({n, d});
    kernels::spmm(n, op.row_ptr.data(), op.col_idx.data(), op.values.data(), x.ptr(), d, cur.ptr());
    scatter_hop(seq.data, 1, cur.ptr());
    Tensor next = Tensor::zeros({n, d});
    for (int k = 2; k <= k_order; ++k) {
        if (chebyshev) {
            kernels::cheb_step(n, op.row_ptr.data(), op.col_idx.data(), op.values.data(), cur.ptr(),
                               prev.ptr(), d, next.ptr());
        } else {
            kernels::spmm(n, op.row_ptr.data(), op.col_idx.data(), op.values.data(), cur.ptr(), d,
                          next.ptr());
        }
        scatter_hop(seq.data, k, next.ptr());
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return seq;
}

}  // namespace

HopSequence cheb_hop_extract(const SparseLaplacian& l_hat, const Tensor& x, int k_order) {
    if (l_hat.kind != LaplacianKind::Scaled) {
        throw std::invalid_argument("cheb_hop_extract: expects a scaled Laplacian");
    }
    return power_stack(l_hat.mat, x, k_order, HopSource::Chebyshev, /*chebyshev=*/true);
}

double cheb_polynomial_scalar(int k, double x) {
    if (k < 0) throw std::invalid_argument("cheb_polynomial_scalar: order must be >= 0");
    if (k == 0) return 1.0;
    if (k == 1) return x;
    double prev = 1.0;
    double cur = x;
    for (int i = 2; i <= k; ++i) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<double> cheb_nodes(int k_order) {
    if (k_order < 0) throw std::invalid_argument("cheb_nodes: order must be >= 0");
    std::vector<double> nodes(static_cast<size_t>(k_order + 1));
    for (int j = 0; j <= k_order; ++j) {
        nodes[static_cast<size_t>(j)] =
            std::cos((static_cast<double>(j) + 0.5) * M_PI / static_cast<double>(k_order + 1));
    }
    return nodes;
}

Tensor exact_spectral_filter(const Tensor& l_dense, const Tensor& x,
                             const std::vector<double>& theta, double lambda_max) {
    require_shape(l_dense.rank() == 2 && l_dense.dim(0) == l_dense.dim(1),
                  "exact_spectral_filter: operator must be square, got " + shape_str(l_dense.shape));
    const int64_t n = l_dense.dim(0);
    if (n > 64) {
        throw std::invalid_argument("exact_spectral_filter: n=" + std::to_string(n) +
                                    " exceeds the dense-oracle limit of 64");
    }
    require_shape(x.rank() == 2 && x.dim(0) == n,
                  "exact_spectral_filter: features " + shape_str(x.shape) + " do not match n=" +
                      std::to_string(n));
    if (theta.empty()) throw std::invalid_argument("exact_spectral_filter: theta is empty");
    if (lambda_max <= 0.0) {
        throw std::invalid_argument("exact_spectral_filter: lambda_max must be positive");
    }

    const dense::SymEig eig = dense::sym_eig(l_dense);
    // h applied to each eigenvalue on the rescaled spectrum.
    Tensor h = Tensor::zeros({n});
    for (int64_t i = 0; i < n; ++i) {
        const double lam = 2.0 * eig.eigenvalues.at(i) / lambda_max - 1.0;
        double acc = 0.0;
        for (size_t k = 0; k < theta.size(); ++k) {
            acc += theta[k] * cheb_polynomial_scalar(static_cast<int>(k), lam);
        }
        h.at(i) = acc;
    }
    // U h(Lambda) U^T X
    const Tensor& u = eig.eigenvectors;
    Tensor utx = Tensor::zeros({n, x.dim(1)});
    kernels::serial::matmul_tn(u.ptr(), x.ptr(), utx.ptr(), n, n, x.dim(1));
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t c = 0; c < x.dim(1); ++c) utx.at(i, c) *= h.at(i);
    }
    Tensor y = Tensor::zeros({n, x.dim(1)});
    kernels::serial::matmul(u.ptr(), utx.ptr(), y.ptr(), n, n, x.dim(1));
    return y;
}

CsrMatrix selfloop_norm_adjacency(const CsrGraph& g) {
    std::vector<double> deg = g.degrees();
    for (double& d : deg) d += 1.0;  // degree of A + I
    std::vector<double> dinv_sqrt(deg.size());
    for (size_t i = 0; i < deg.size(); ++i) dinv_sqrt[i] = 1.0 / std::sqrt(deg[i]);

    CsrMatrix m;
    m.n = g.n;
    m.row_ptr.assign(static_cast<size_t>(g.n + 1), 0);
    m.col_idx.reserve(g.col_idx.size() + static_cast<size_t>(g.n));
    m.values.reserve(g.col_idx.size() + static_cast<size_t>(g.n));
    for (int64_t i = 0; i < g.n; ++i) {
        bool diag_done = false;
        for (int64_t e = g.row_ptr[static_cast<size_t>(i)]; e < g.row_ptr[static_cast<size_t>(i + 1)]; ++e) {
            const int64_t j = g.col_idx[static_cast<size_t>(e)];
            if (!diag_done && j > i) {
                m.col_idx.push_back(i);
                m.values.push_back(dinv_sqrt[static_cast<size_t>(i)] * dinv_sqrt[static_cast<size_t>(i)]);
                diag_done = true;
            }
            double w = g.weights[static_cast<size_t>(e)];
            if (j == i) {
                w += 1.0;
                diag_done = true;
            }
            m.col_idx.push_back(j);
            m.values.push_back(w * dinv_sqrt[static_cast<size_t>(i)] * dinv_sqrt[static_cast<size_t>(j)]);
        }
        if (!diag_done) {
            m.col_idx.push_back(i);
            m.values.push_back(dinv_sqrt[static_cast<size_t>(i)] * dinv_sqrt[static_cast<size_t>(i)]);
        }
        m.row_ptr[static_cast<size_t>(i + 1)] = static_cast<int64_t>(m.col_idx.size());
    }
    return m;
}

HopSequence hop2token_extract(const CsrGraph& g, const Tensor& x, int k_order) {
    const CsrMatrix a_hat = selfloop_norm_adjacency(g);
    return power_stack(a_hat, x, k_order, HopSource::Hop2Token, /*chebyshev=*/false);
}

}  // namespace chebmixer
