#pragma once

#include <cstdint>
#include <vector>

#include "chebmixer/graph.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer {

enum class HopSource { Chebyshev, Hop2Token };

/// Per-node hop token sequence, N x (K+1) x d. Slice 0 always equals the
/// input features; for the Chebyshev source, slice i obeys the
/// 2*L_hat*slice(i-1) - slice(i-2) recurrence.
struct HopSequence {
    Tensor data;
    int k_order = 0;
    HopSource source = HopSource::Chebyshev;
};

/// Chebyshev hop extraction: T_k(L_hat) X stacked over k = 0..K. Pure
/// preprocessing; no trainable parameters.
HopSequence cheb_hop_extract(const SparseLaplacian& l_hat, const Tensor& x, int k_order);

/// T_k(x) by the three-term recurrence.
double cheb_polynomial_scalar(int k, double x);

/// Chebyshev nodes cos((j + 1/2) pi / (K+1)), j = 0..K: the roots of T_{K+1},
/// strictly decreasing in (-1, 1).
std::vector<double> cheb_nodes(int k_order);

/// Exact spectral filter Y = U h(Lambda) U^T X with
/// h(lambda) = sum_k theta_k T_k(2 lambda / lambda_max - 1). Dense
/// eigendecomposition; restricted to n <= 64, used to validate the
/// polynomial path.
Tensor exact_spectral_filter(const Tensor& l_dense, const Tensor& x,
                             const std::vector<double>& theta, double lambda_max);

/// Baseline extractor: slice k equals A_hat^k X with
/// A_hat = D~^{-1/2} (A + I) D~^{-1/2}, D~ the degree matrix of A + I.
HopSequence hop2token_extract(const CsrGraph& g, const Tensor& x, int k_order);

/// The normalized self-loop adjacency used by hop2token_extract.
CsrMatrix selfloop_norm_adjacency(const CsrGraph& g);

}  // namespace chebmixer
