#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chebmixer/tape.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer {

struct GradCheckResult {
    bool pass = false;
    double max_rel_err = 0.0;
    size_t worst_param = 0;
    int64_t worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::string summary() const;
};

/// Builds the objective on a fresh tape from the given parameter tensors and
/// returns the scalar to differentiate.
using ScalarObjective = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients against central differences
/// (f(p+h) - f(p-h)) / 2h coordinate-wise. Relative error is measured against
/// max(|analytic|, |numeric|); coordinates where both magnitudes fall below
/// 1e-8 are compared absolutely. The objective must be deterministic.
GradCheckResult grad_check(const ScalarObjective& f, const std::vector<Tensor>& params, double h,
                           double tol);

}  // namespace chebmixer
