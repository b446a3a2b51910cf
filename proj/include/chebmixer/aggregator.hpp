#pragma once

#include <cstdint>
#include <string>

#include "chebmixer/spectral.hpp"
#include "chebmixer/tape.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer {

enum class AggregatorMode { ChebInterp, ChebInterpShared, Sum, Mean, Max };

AggregatorMode parse_aggregator_mode(const std::string& name);
std::string aggregator_mode_name(AggregatorMode mode);

/// Learnable per-channel values at the Chebyshev nodes; column count is 1 for
/// the channel-shared variant.
struct AggregatorParams {
    Tensor gamma;  // (K+1) x d or (K+1) x 1
};

/// The constant interpolation map C with C[k][j] = (2/(K+1)) T_k(x_j), so
/// W = C * gamma. When halved_c0 is set the k = 0 row carries 1/(K+1)
/// instead, the classical first-coefficient convention.
Tensor cheb_interp_matrix(int k_order, bool halved_c0 = false);

/// W[k][c] = (2/(K+1)) sum_j gamma[j][c] T_k(x_j); linear in gamma.
Tensor cheb_interp_weights(const Tensor& gamma, bool halved_c0 = false);
Var cheb_interp_weights(Tape& tape, Var gamma, bool halved_c0 = false);

/// X_agg[i][c] = sum_k W[k][c] * X_G[i][k][c] (channel-wise broadcast over
/// nodes).
Tensor aggregate(const HopSequence& xg, const Tensor& w);

/// Elementwise reduction over the hop axis; max breaks ties toward the lower
/// hop index.
Tensor baseline_aggregate(const HopSequence& xg, HopReduceMode mode);

/// gamma = 1 everywhere: the initial interpolated profile is dominated by the
/// k = 0 coefficient. Deterministic; the seed is accepted for interface
/// stability.
AggregatorParams init_gamma(int k_order, int64_t d, uint64_t seed);

}  // namespace chebmixer
