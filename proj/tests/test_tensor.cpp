#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chebmixer/grad_check.hpp"
#include "chebmixer/tape.hpp"
#include "chebmixer/tensor.hpp"
#include "test_util.hpp"

using namespace chebmixer;
using testutil::rand_tensor;

TEST_CASE("matmul identity and hand-computed product") {
    Tape tape;
    const Var eye = tape.leaf(Tensor({2, 2}, {1, 0, 0, 1}));
    const Var a = tape.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
    const Tensor& id_out = tape.value(tape.matmul(eye, a));
    CHECK(id_out.at(0, 0) == 1.0);
    CHECK(id_out.at(0, 1) == 2.0);
    CHECK(id_out.at(1, 0) == 3.0);
    CHECK(id_out.at(1, 1) == 4.0);

    const Var ones = tape.leaf(Tensor({2, 1}, {1, 1}));
    const Tensor& prod = tape.value(tape.matmul(a, ones));
    CHECK(prod.at(0, 0) == 3.0);
    CHECK(prod.at(1, 0) == 7.0);
}

TEST_CASE("matmul rejects mismatched inner extents naming both shapes") {
    Tape tape;
    const Var a = tape.leaf(Tensor::zeros({2, 3}));
    const Var b = tape.leaf(Tensor::zeros({2, 2}));
    CHECK_THROWS_WITH_AS(tape.matmul(a, b),
                         doctest::Contains("(2x3)"), ShapeError);
}

TEST_CASE("matmul associativity on random 4x4 matrices") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        Tape tape;
        const Var a = tape.leaf(rand_tensor(rng, {4, 4}));
        const Var b = tape.leaf(rand_tensor(rng, {4, 4}));
        const Var c = tape.leaf(rand_tensor(rng, {4, 4}));
        const Tensor left = tape.value(tape.matmul(tape.matmul(a, b), c));
        const Tensor right = tape.value(tape.matmul(a, tape.matmul(b, c)));
        CHECK(max_abs_diff(left, right) < 1e-10);
    }
}

TEST_CASE("layer_norm collapses constant slices to the bias") {
    Tape tape;
    const Var x = tape.leaf(Tensor({1, 3}, {5, 5, 5}));
    const Var gain = tape.leaf(Tensor::ones({3}));
    const Var zero_bias = tape.leaf(Tensor::zeros({3}));
    const Tensor out = tape.value(tape.layer_norm(x, gain, zero_bias));
    CHECK(max_abs_diff(out, Tensor::zeros({1, 3})) < 1e-12);

    const Var bias2 = tape.leaf(Tensor({3}, {2, 2, 2}));
    const Tensor shifted = tape.value(tape.layer_norm(x, gain, bias2));
    CHECK(max_abs_diff(shifted, Tensor({1, 3}, {2, 2, 2})) < 1e-12);
}

TEST_CASE("layer_norm of [1,-1] is identity as eps -> 0") {
    Tape tape;
    const Var x = tape.leaf(Tensor({1, 2}, {1, -1}));
    const Var gain = tape.leaf(Tensor::ones({2}));
    const Var bias = tape.leaf(Tensor::zeros({2}));
    const Tensor out = tape.value(tape.layer_norm(x, gain, bias, 1e-14));
    CHECK(out.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(out.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("layer_norm output statistics per slice") {
    Rng rng(7);
    Tape tape;
    const Var x = tape.leaf(rand_tensor(rng, {5, 3, 8}, -4.0, 4.0));
    const Var gain = tape.leaf(Tensor::ones({8}));
    const Var bias = tape.leaf(Tensor::zeros({8}));
    const Tensor out = tape.value(tape.layer_norm(x, gain, bias));
    for (int64_t i = 0; i < 5; ++i) {
        for (int64_t j = 0; j < 3; ++j) {
            double mean = 0.0;
            for (int64_t c = 0; c < 8; ++c) mean += out.at(i, j, c);
            mean /= 8.0;
            double var = 0.0;
            for (int64_t c = 0; c < 8; ++c) {
                var += (out.at(i, j, c) - mean) * (out.at(i, j, c) - mean);
            }
            var /= 8.0;
            CHECK(std::fabs(mean) < 1e-10);
            CHECK(std::fabs(var - 1.0) < 1e-4);
        }
    }
}

TEST_CASE("gelu pointwise values") {
    Tape tape;
    const Var x = tape.leaf(Tensor({3}, {0.0, 1.0, -20.0}));
    const Tensor out = tape.value(tape.gelu(x));
    CHECK(out.at(0) == 0.0);
    CHECK(out.at(1) == doctest::Approx(0.841345).epsilon(1e-6));
    CHECK(std::fabs(out.at(2)) < 1e-12);
}

TEST_CASE("grad_check on a quadratic is exact to central-difference accuracy") {
    const auto square = [](Tape& tape, const std::vector<Var>& vars) {
        return tape.sum_all(tape.matmul(vars[0], vars[0]));
    };
    const std::vector<Tensor> params = {Tensor({1, 1}, {3.0})};
    const GradCheckResult res = grad_check(square, params, 1e-5, 1e-6);
    CHECK(res.pass);
    CHECK(res.worst_analytic == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(res.worst_numeric == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("grad_check flags the |theta| kink at zero") {
    // |theta| = max(theta, -theta): reverse mode picks the lower-hop branch at
    // the tie (derivative 1), central differences report 0.
    const auto absf = [](Tape& tape, const std::vector<Var>& vars) {
        const Var lift = tape.leaf(Tensor({2, 1}, {1.0, -1.0}));
        const Var stack = tape.batched_lmul(lift, vars[0]);  // [theta, -theta]
        return tape.sum_all(tape.hop_reduce(stack, HopReduceMode::Max));
    };
    const std::vector<Tensor> params = {Tensor({1, 1, 1}, {0.0})};
    const GradCheckResult res = grad_check(absf, params, 1e-5, 1e-4);
    CHECK_FALSE(res.pass);
}

TEST_CASE("tape replay produces bitwise-identical gradients") {
    Rng rng(11);
    Tape tape;
    const Var w = tape.leaf(rand_tensor(rng, {4, 3}), true);
    const Var x = tape.leaf(rand_tensor(rng, {5, 3}), true);
    const Var gain = tape.leaf(Tensor::ones({4}), true);
    const Var bias = tape.leaf(Tensor::zeros({4}), true);
    const Var y = tape.layer_norm(tape.gelu(tape.linear(x, w)), gain, bias);
    const Var loss = tape.sum_all(y);

    tape.backward(loss);
    const Tensor gw1 = tape.grad(w);
    const Tensor gx1 = tape.grad(x);
    tape.backward(loss);
    CHECK(bitwise_equal(gw1, tape.grad(w)));
    CHECK(bitwise_equal(gx1, tape.grad(x)));
}

TEST_CASE("gradient accumulation when a value feeds multiple consumers") {
    // y = sum(x) + sum(x): gradient must be exactly 2 everywhere.
    Tape tape;
    const Var x = tape.leaf(Tensor({2, 2}, {1, 2, 3, 4}), true);
    const Var a = tape.gelu(x);
    const Var loss = tape.sum_all(tape.add(a, a));
    tape.backward(loss);
    const Tensor g = tape.grad(x);
    Tape ref_tape;
    const Var xr = ref_tape.leaf(Tensor({2, 2}, {1, 2, 3, 4}), true);
    const Var lr = ref_tape.sum_all(ref_tape.gelu(xr));
    ref_tape.backward(lr);
    const Tensor gr = ref_tape.grad(xr);
    for (int64_t i = 0; i < 4; ++i) CHECK(g.at(i) == 2.0 * gr.at(i));
}

TEST_CASE("every differentiable kernel matches central differences on random instances") {
    Rng rng(1234);
    const double h = 1e-5;
    const double tol = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
        // matmul + add + gelu chain
        {
            const std::vector<Tensor> params = {rand_tensor(rng, {3, 4}), rand_tensor(rng, {4, 2}),
                                                rand_tensor(rng, {3, 2})};
            const auto f = [](Tape& t, const std::vector<Var>& v) {
                return t.sum_all(t.gelu(t.add(t.matmul(v[0], v[1]), v[2])));
            };
            CHECK(grad_check(f, params, h, tol).pass);
        }
        // linear with bias
        {
            const std::vector<Tensor> params = {rand_tensor(rng, {4, 3}), rand_tensor(rng, {2, 3}),
                                                rand_tensor(rng, {2})};
            const auto f = [](Tape& t, const std::vector<Var>& v) {
                return t.sum_all(t.gelu(t.linear(v[0], v[1], v[2])));
            };
            CHECK(grad_check(f, params, h, tol).pass);
        }
        // layer_norm over the last axis of a 3-D operand
        {
            const std::vector<Tensor> params = {rand_tensor(rng, {2, 3, 4}, -2.0, 2.0),
                                                rand_tensor(rng, {4}, 0.5, 1.5),
                                                rand_tensor(rng, {4})};
            const auto f = [](Tape& t, const std::vector<Var>& v) {
                return t.sum_all(t.gelu(t.layer_norm(v[0], v[1], v[2])));
            };
            CHECK(grad_check(f, params, h, tol).pass);
        }
        // batched_lmul and batched_rmul_t with biases
        {
            const std::vector<Tensor> params = {rand_tensor(rng, {3, 4}), rand_tensor(rng, {2, 4, 5}),
                                                rand_tensor(rng, {3}),    rand_tensor(rng, {6, 5}),
                                                rand_tensor(rng, {6})};
            const auto f = [](Tape& t, const std::vector<Var>& v) {
                const Var a = t.batched_lmul(v[0], v[1], v[2]);
                const Var b = t.batched_rmul_t(t.gelu(a), v[3], v[4]);
                return t.sum_all(b);
            };
            CHECK(grad_check(f, params, h, tol).pass);
        }
        // aggregate (bilinear) and hop reductions
        {
            const std::vector<Tensor> params = {rand_tensor(rng, {3, 4, 2}), rand_tensor(rng, {4, 2})};
            const auto f = [](Tape& t, const std::vector<Var>& v) {
                return t.sum_all(t.aggregate(v[0], v[1]));
            };
            CHECK(grad_check(f, params, h, tol).pass);
            const std::vector<Tensor> stack = {rand_tensor(rng, {3, 4, 2})};
            for (const HopReduceMode mode : {HopReduceMode::Sum, HopReduceMode::Mean}) {
                const auto g = [mode](Tape& t, const std::vector<Var>& v) {
                    return t.sum_all(t.hop_reduce(v[0], mode));
                };
                CHECK(grad_check(g, stack, h, tol).pass);
            }
        }
        // cross_entropy
        {
            const std::vector<Tensor> params = {rand_tensor(rng, {5, 3}, -2.0, 2.0)};
            const std::vector<int64_t> labels = {0, 2, 1, 2, 0};
            const std::vector<int64_t> mask = {0, 1, 3, 4};
            const auto f = [&](Tape& t, const std::vector<Var>& v) {
                return t.cross_entropy(v[0], labels, mask);
            };
            CHECK(grad_check(f, params, h, tol).pass);
        }
    }
}
