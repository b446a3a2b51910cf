#include "chebmixer/aggregator.hpp"

#include <stdexcept>

namespace chebmixer {

AggregatorMode parse_aggregator_mode(const std::string& name) {
    if (name == "chebinterp") return AggregatorMode::ChebInterp;
    if (name == "chebinterp_shared") return AggregatorMode::ChebInterpShared;
    if (name == "sum") return AggregatorMode::Sum;
    if (name == "mean") return AggregatorMode::Mean;
    if (name == "max") return AggregatorMode::Max;
    throw std::invalid_argument("unknown aggregator mode '" + name +
                                "' (expected chebinterp, chebinterp_shared, sum, mean or max)");
}

std::string aggregator_mode_name(AggregatorMode mode) {
    switch (mode) {
        case AggregatorMode::ChebInterp: return "chebinterp";
        case AggregatorMode::ChebInterpShared: return "chebinterp_shared";
        case AggregatorMode::Sum: return "sum";
        case AggregatorMode::Mean: return "mean";
        case AggregatorMode::Max: return "max";
    }
    return "?";
}

Tensor cheb_interp_matrix(int k_order, bool halved_c0) {
    const std::vector<double> nodes = cheb_nodes(k_order);
    const int64_t hops = k_order + 1;
    const double scale = 2.0 / static_cast<double>(hops);
    Tensor c = Tensor::zeros({hops, hops});
    for (int64_t k = 0; k < hops; ++k) {
        const double row_scale = (k == 0 && halved_c0) ? 0.5 * scale : scale;
        for (int64_t j = 0; j < hops; ++j) {
            c.at(k, j) = row_scale * cheb_polynomial_scalar(static_cast<int>(k),
                                                            nodes[static_cast<size_t>(j)]);
        }
    }
    return c;
}

Tensor cheb_interp_weights(const Tensor& gamma, bool halved_c0) {
    Tape tape;
    const Var g = tape.leaf(gamma, false);
    return tape.value(cheb_interp_weights(tape, g, halved_c0));
}

Var cheb_interp_weights(Tape& tape, Var gamma, bool halved_c0) {
    const Tensor& g = tape.value(gamma);
    require_shape(g.rank() == 2, "cheb_interp_weights: gamma must be 2-D, got " +
                                     shape_str(g.shape));
    const Var c = tape.leaf(cheb_interp_matrix(static_cast<int>(g.dim(0)) - 1, halved_c0), false);
    return tape.matmul(c, gamma);
}

Tensor aggregate(const HopSequence& xg, const Tensor& w) {
    Tape tape;
    const Var x = tape.leaf(xg.data, false);
    const Var wv = tape.leaf(w, false);
    return tape.value(tape.aggregate(x, wv));
}

Tensor baseline_aggregate(const HopSequence& xg, HopReduceMode mode) {
    Tape tape;
    const Var x = tape.leaf(xg.data, false);
    return tape.value(tape.hop_reduce(x, mode));
}

AggregatorParams init_gamma(int k_order, int64_t d, uint64_t seed) {
    if (k_order < 0 || d < 1) throw std::invalid_argument("init_gamma: extents must be positive");
    (void)seed;
    return {Tensor::ones({k_order + 1, d})};
}

}  // namespace chebmixer
