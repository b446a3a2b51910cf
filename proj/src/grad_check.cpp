#include "chebmixer/grad_check.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace chebmixer {

std::string GradCheckResult::summary() const {
    std::ostringstream os;
    os << (pass ? "pass" : "FAIL") << " max_rel_err=" << max_rel_err << " at param " << worst_param
       << "[" << worst_coord << "] analytic=" << worst_analytic << " numeric=" << worst_numeric;
    return os.str();
}

namespace {

double evaluate(const ScalarObjective& f, const std::vector<Tensor>& params) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Tensor& p : params) vars.push_back(tape.leaf(p, false));
    const Var out = f(tape, vars);
    const double v = tape.value(out).at(0);
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: objective is not finite");
    return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& f, const std::vector<Tensor>& params, double h,
                           double tol) {
    if (h < 1e-7 || h > 1e-3) {
        throw std::invalid_argument("grad_check: step must lie in [1e-7, 1e-3]");
    }

    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Tensor& p : params) vars.push_back(tape.leaf(p, true));
    const Var out = f(tape, vars);
    if (!std::isfinite(tape.value(out).at(0))) {
        throw std::runtime_error("grad_check: objective is not finite");
    }
    tape.backward(out);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const Var v : vars) analytic.push_back(tape.grad(v));

    GradCheckResult res;
    res.pass = true;
    std::vector<Tensor> work = params;
    for (size_t p = 0; p < params.size(); ++p) {
        for (int64_t i = 0; i < params[p].numel(); ++i) {
            const double orig = work[p].at(i);
            work[p].at(i) = orig + h;
            const double fp = evaluate(f, work);
            work[p].at(i) = orig - h;
            const double fm = evaluate(f, work);
            work[p].at(i) = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[p].at(i);
            const double scale = std::max(std::fabs(a), std::fabs(numeric));
            const double err = (scale < 1e-8) ? std::fabs(a - numeric)
                                              : std::fabs(a - numeric) / scale;
            if (err > res.max_rel_err) {
                res.max_rel_err = err;
                res.worst_param = p;
                res.worst_coord = i;
                res.worst_analytic = a;
                res.worst_numeric = numeric;
            }
        }
    }
    res.pass = res.max_rel_err < tol;
    return res;
}

}  // namespace chebmixer
