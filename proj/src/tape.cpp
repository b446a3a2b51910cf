#include "chebmixer/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chebmixer/kernels.hpp"

namespace chebmixer {

namespace {

void gather_hop(const Tensor& xg, int64_t k, double* out) {
    const int64_t n = xg.dim(0);
    const int64_t hops = xg.dim(1);
    const int64_t d = xg.dim(2);
    for (int64_t i = 0; i < n; ++i) {
        const double* src = xg.ptr() + (i * hops + k) * d;
        std::copy(src, src + d, out + i * d);
    }
}

void scatter_hop(Tensor& xg, int64_t k, const double* src) {
    const int64_t n = xg.dim(0);
    const int64_t hops = xg.dim(1);
    const int64_t d = xg.dim(2);
    for (int64_t i = 0; i < n; ++i) {
        std::copy(src + i * d, src + (i + 1) * d, xg.ptr() + (i * hops + k) * d);
    }
}

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        throw std::logic_error("tape: invalid variable handle");
    }
    return nodes_[static_cast<size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.is_leaf = true;
    return {push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_shape(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
                  "matmul: inner extents must match, got " + shape_str(av.shape) + " x " +
                      shape_str(bv.shape));
    Node n;
    n.op = Op::MatMul;
    n.in = {a.id, b.id, -1};
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = Tensor::zeros({av.dim(0), bv.dim(1)});
    kernels::matmul(av.ptr(), bv.ptr(), n.value.ptr(), av.dim(0), av.dim(1), bv.dim(1));
    return {push(std::move(n))};
}

Var Tape::linear(Var x, Var w, Var bias) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    require_shape(xv.rank() == 2 && wv.rank() == 2 && xv.dim(1) == wv.dim(1),
                  "linear: operand " + shape_str(xv.shape) + " incompatible with weight " +
                      shape_str(wv.shape));
    if (bias.valid()) {
        require_shape(value(bias).rank() == 1 && value(bias).dim(0) == wv.dim(0),
                      "linear: bias " + shape_str(value(bias).shape) + " incompatible with weight " +
                          shape_str(wv.shape));
    }
    Node n;
    n.op = Op::Linear;
    n.in = {x.id, w.id, bias.id};
    n.requires_grad = node(x).requires_grad || node(w).requires_grad ||
                      (bias.valid() && node(bias).requires_grad);
    n.value = Tensor::zeros({xv.dim(0), wv.dim(0)});
    kernels::matmul_nt(xv.ptr(), wv.ptr(), n.value.ptr(), xv.dim(0), xv.dim(1), wv.dim(0));
    if (bias.valid()) {
        kernels::add_row_bias(n.value.ptr(), value(bias).ptr(), xv.dim(0), wv.dim(0));
    }
    return {push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_shape(av.same_shape(bv), "add: shapes differ: " + shape_str(av.shape) + " vs " +
                                         shape_str(bv.shape));
    Node n;
    n.op = Op::Add;
    n.in = {a.id, b.id, -1};
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = Tensor::zeros(av.shape);
    kernels::add(av.ptr(), bv.ptr(), n.value.ptr(), av.numel());
    return {push(std::move(n))};
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor& xv = value(x);
    const Tensor& gv = value(gain);
    const Tensor& bv = value(bias);
    require_shape(xv.rank() >= 2, "layer_norm: operand must be 2-D or 3-D, got " +
                                      shape_str(xv.shape));
    const int64_t dim = xv.dim(xv.rank() - 1);
    require_shape(gv.rank() == 1 && gv.dim(0) == dim && bv.rank() == 1 && bv.dim(0) == dim,
                  "layer_norm: gain/bias " + shape_str(gv.shape) + "/" + shape_str(bv.shape) +
                      " must match last extent of " + shape_str(xv.shape));
    if (eps <= 0.0) throw std::invalid_argument("layer_norm: eps must be positive");
    const int64_t slices = xv.numel() / dim;
    Node n;
    n.op = Op::LayerNorm;
    n.in = {x.id, gain.id, bias.id};
    n.requires_grad = node(x).requires_grad || node(gain).requires_grad || node(bias).requires_grad;
    n.eps = eps;
    n.value = Tensor::zeros(xv.shape);
    n.aux_a = Tensor::zeros({slices});
    n.aux_b = Tensor::zeros({slices});
    kernels::layer_norm_forward(xv.ptr(), gv.ptr(), bv.ptr(), eps, n.value.ptr(), n.aux_a.ptr(),
                                n.aux_b.ptr(), slices, dim);
    return {push(std::move(n))};
}

Var Tape::gelu(Var x) {
    const Tensor& xv = value(x);
    Node n;
    n.op = Op::Gelu;
    n.in = {x.id, -1, -1};
    n.requires_grad = node(x).requires_grad;
    n.value = Tensor::zeros(xv.shape);
    kernels::gelu_forward(xv.ptr(), n.value.ptr(), xv.numel());
    return {push(std::move(n))};
}

Var Tape::batched_lmul(Var w, Var x, Var bias) {
    const Tensor& wv = value(w);
    const Tensor& xv = value(x);
    require_shape(wv.rank() == 2 && xv.rank() == 3 && wv.dim(1) == xv.dim(1),
                  "batched_lmul: weight " + shape_str(wv.shape) + " incompatible with operand " +
                      shape_str(xv.shape));
    if (bias.valid()) {
        require_shape(value(bias).rank() == 1 && value(bias).dim(0) == wv.dim(0),
                      "batched_lmul: bias " + shape_str(value(bias).shape) +
                          " incompatible with weight " + shape_str(wv.shape));
    }
    Node n;
    n.op = Op::BatchedLmul;
    n.in = {w.id, x.id, bias.id};
    n.requires_grad = node(w).requires_grad || node(x).requires_grad ||
                      (bias.valid() && node(bias).requires_grad);
    n.value = Tensor::zeros({xv.dim(0), wv.dim(0), xv.dim(2)});
    kernels::blmul_forward(wv.ptr(), xv.ptr(), bias.valid() ? value(bias).ptr() : nullptr,
                           n.value.ptr(), xv.dim(0), wv.dim(0), wv.dim(1), xv.dim(2));
    return {push(std::move(n))};
}

Var Tape::batched_rmul_t(Var x, Var w, Var bias) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    require_shape(xv.rank() == 3 && wv.rank() == 2 && wv.dim(1) == xv.dim(2),
                  "batched_rmul_t: operand " + shape_str(xv.shape) + " incompatible with weight " +
                      shape_str(wv.shape));
    if (bias.valid()) {
        require_shape(value(bias).rank() == 1 && value(bias).dim(0) == wv.dim(0),
                      "batched_rmul_t: bias " + shape_str(value(bias).shape) +
                          " incompatible with weight " + shape_str(wv.shape));
    }
    Node n;
    n.op = Op::BatchedRmulT;
    n.in = {x.id, w.id, bias.id};
    n.requires_grad = node(x).requires_grad || node(w).requires_grad ||
                      (bias.valid() && node(bias).requires_grad);
    n.value = Tensor::zeros({xv.dim(0), xv.dim(1), wv.dim(0)});
    kernels::brmul_forward(xv.ptr(), wv.ptr(), bias.valid() ? value(bias).ptr() : nullptr,
                           n.value.ptr(), xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0));
    return {push(std::move(n))};
}

Var Tape::cheb_hops(std::shared_ptr<const SparseLaplacian> lap, Var x, int k_order) {
    if (k_order < 0) throw std::invalid_argument("cheb_hops: order must be >= 0");
    if (!lap || lap->kind != LaplacianKind::Scaled) {
        throw std::invalid_argument("cheb_hops: expects a scaled Laplacian");
    }
    const Tensor& xv = value(x);
    require_shape(xv.rank() == 2 && xv.dim(0) == lap->mat.n,
                  "cheb_hops: operand " + shape_str(xv.shape) + " does not match operator with n=" +
                      std::to_string(lap->mat.n));
    const int64_t n = xv.dim(0);
    const int64_t d = xv.dim(1);
    const int64_t hops = k_order + 1;
    Node node;
    node.op = Op::ChebHops;
    node.in = {x.id, -1, -1};
    node.requires_grad = this->node(x).requires_grad;
    node.lap = lap;
    node.k_order = k_order;
    node.value = Tensor::zeros({n, hops, d});
    scatter_hop(node.value, 0, xv.ptr());
    if (k_order >= 1) {
        Tensor prev = xv;
        Tensor cur = spmm(*lap, xv);
        scatter_hop(node.value, 1, cur.ptr());
        Tensor next = Tensor::zeros({n, d});
        for (int64_t k = 2; k <= k_order; ++k) {
            kernels::cheb_step(n, lap->mat.row_ptr.data(), lap->mat.col_idx.data(),
                               lap->mat.values.data(), cur.ptr(), prev.ptr(), d, next.ptr());
            scatter_hop(node.value, k, next.ptr());
            std::swap(prev, cur);
            std::swap(cur, next);
        }
    }
    return {push(std::move(node))};
}

Var Tape::aggregate(Var xg, Var w) {
    const Tensor& xv = value(xg);
    const Tensor& wv = value(w);
    require_shape(xv.rank() == 3 && wv.rank() == 2 && wv.dim(0) == xv.dim(1) &&
                      (wv.dim(1) == xv.dim(2) || wv.dim(1) == 1),
                  "aggregate: weights " + shape_str(wv.shape) + " incompatible with sequence " +
                      shape_str(xv.shape));
    Node n;
    n.op = Op::Aggregate;
    n.in = {xg.id, w.id, -1};
    n.requires_grad = node(xg).requires_grad || node(w).requires_grad;
    n.value = Tensor::zeros({xv.dim(0), xv.dim(2)});
    kernels::aggregate_forward(xv.ptr(), wv.ptr(), n.value.ptr(), xv.dim(0), xv.dim(1), xv.dim(2),
                               wv.dim(1));
    return {push(std::move(n))};
}

Var Tape::hop_reduce(Var xg, HopReduceMode mode) {
    const Tensor& xv = value(xg);
    require_shape(xv.rank() == 3, "hop_reduce: expects a 3-D hop sequence, got " +
                                      shape_str(xv.shape));
    const int64_t n = xv.dim(0);
    const int64_t hops = xv.dim(1);
    const int64_t d = xv.dim(2);
    Node node;
    node.op = Op::HopReduce;
    node.in = {xg.id, -1, -1};
    node.requires_grad = this->node(xg).requires_grad;
    node.mode = mode;
    node.value = Tensor::zeros({n, d});
    if (mode == HopReduceMode::Max) {
        node.idx.assign(static_cast<size_t>(n * d), 0);
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t c = 0; c < d; ++c) {
                double best = xv.at(i, 0, c);
                int64_t arg = 0;
                for (int64_t k = 1; k < hops; ++k) {
                    if (xv.at(i, k, c) > best) {
                        best = xv.at(i, k, c);
                        arg = k;
                    }
                }
                node.value.at(i, c) = best;
                node.idx[static_cast<size_t>(i * d + c)] = arg;
            }
        }
    } else {
        const double scale = (mode == HopReduceMode::Mean) ? 1.0 / static_cast<double>(hops) : 1.0;
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t c = 0; c < d; ++c) {
                double s = 0.0;
                for (int64_t k = 0; k < hops; ++k) s += xv.at(i, k, c);
                node.value.at(i, c) = s * scale;
            }
        }
    }
    return {push(std::move(node))};
}

Var Tape::cross_entropy(Var logits, std::vector<int64_t> labels, std::vector<int64_t> mask) {
    const Tensor& lv = value(logits);
    require_shape(lv.rank() == 2, "cross_entropy: logits must be 2-D, got " + shape_str(lv.shape));
    const int64_t n = lv.dim(0);
    const int64_t c = lv.dim(1);
    if (static_cast<int64_t>(labels.size()) != n) {
        throw std::invalid_argument("cross_entropy: expected " + std::to_string(n) + " labels, got " +
                                    std::to_string(labels.size()));
    }
    if (mask.empty()) throw std::invalid_argument("cross_entropy: mask is empty");
    for (int64_t i : mask) {
        if (i < 0 || i >= n) throw std::invalid_argument("cross_entropy: mask index out of range");
        if (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] >= c) {
            throw std::invalid_argument("cross_entropy: label " +
                                        std::to_string(labels[static_cast<size_t>(i)]) +
                                        " out of range for " + std::to_string(c) + " classes");
        }
    }
    Node node;
    node.op = Op::CrossEntropy;
    node.in = {logits.id, -1, -1};
    node.requires_grad = this->node(logits).requires_grad;
    node.aux_a = Tensor::zeros({n, c});
    double loss = 0.0;
    for (int64_t i : mask) {
        const double* row = lv.ptr() + i * c;
        double m = row[0];
        for (int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double z = 0.0;
        for (int64_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
        const double logz = std::log(z) + m;
        for (int64_t j = 0; j < c; ++j) node.aux_a.at(i, j) = std::exp(row[j] - logz);
        loss += logz - row[labels[static_cast<size_t>(i)]];
    }
    loss /= static_cast<double>(mask.size());
    node.labels = std::move(labels);
    node.mask = std::move(mask);
    node.value = Tensor::scalar(loss);
    return {push(std::move(node))};
}

Var Tape::sum_all(Var x) {
    const Tensor& xv = value(x);
    double s = 0.0;
    for (double v : xv.data) s += v;
    Node n;
    n.op = Op::SumAll;
    n.in = {x.id, -1, -1};
    n.requires_grad = node(x).requires_grad;
    n.value = Tensor::scalar(s);
    return {push(std::move(n))};
}

Tensor& Tape::grad_buf(int id, const Tensor& like) {
    Tensor& g = grads_[static_cast<size_t>(id)];
    if (g.empty()) g = Tensor::zeros(like.shape);
    return g;
}

void Tape::backward(Var seed) {
    const Node& s = node(seed);
    if (s.value.numel() != 1) {
        throw std::invalid_argument("backward: seed must be a scalar");
    }
    grads_.assign(nodes_.size(), Tensor{});
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_leaf && nodes_[i].requires_grad) {
            grads_[i] = Tensor::zeros(nodes_[i].value.shape);
        }
    }
    if (!s.requires_grad) return;
    grads_[static_cast<size_t>(seed.id)] = Tensor::ones({1});
    for (int id = seed.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.requires_grad || grads_[static_cast<size_t>(id)].empty()) continue;
        if (!n.is_leaf) {
            backward_node(id);
            grads_[static_cast<size_t>(id)] = Tensor{};
        }
    }
}

void Tape::backward_node(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    const Tensor& g = grads_[static_cast<size_t>(id)];
    auto wants = [&](int input) {
        return input >= 0 && nodes_[static_cast<size_t>(input)].requires_grad;
    };
    auto in_value = [&](int input) -> const Tensor& {
        return nodes_[static_cast<size_t>(input)].value;
    };

    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            const Tensor& a = in_value(n.in[0]);
            const Tensor& b = in_value(n.in[1]);
            if (wants(n.in[0])) {
                Tensor& da = grad_buf(n.in[0], a);
                kernels::matmul_nt(g.ptr(), b.ptr(), da.ptr(), g.dim(0), g.dim(1), b.dim(0), true);
            }
            if (wants(n.in[1])) {
                Tensor& db = grad_buf(n.in[1], b);
                kernels::matmul_tn(a.ptr(), g.ptr(), db.ptr(), a.dim(0), a.dim(1), g.dim(1), true);
            }
            break;
        }
        case Op::Linear: {
            const Tensor& x = in_value(n.in[0]);
            const Tensor& w = in_value(n.in[1]);
            if (wants(n.in[0])) {
                Tensor& dx = grad_buf(n.in[0], x);
                kernels::matmul(g.ptr(), w.ptr(), dx.ptr(), g.dim(0), g.dim(1), w.dim(1), true);
            }
            if (wants(n.in[1])) {
                Tensor& dw = grad_buf(n.in[1], w);
                kernels::matmul_tn(g.ptr(), x.ptr(), dw.ptr(), g.dim(0), g.dim(1), x.dim(1), true);
            }
            if (n.in[2] >= 0 && wants(n.in[2])) {
                Tensor& db = grad_buf(n.in[2], in_value(n.in[2]));
                kernels::col_sum_acc(g.ptr(), db.ptr(), g.dim(0), g.dim(1));
            }
            break;
        }
        case Op::Add: {
            for (int s = 0; s < 2; ++s) {
                if (wants(n.in[s])) {
                    Tensor& d = grad_buf(n.in[s], in_value(n.in[s]));
                    kernels::axpy(1.0, g.ptr(), d.ptr(), g.numel());
                }
            }
            break;
        }
        case Op::LayerNorm: {
            const Tensor& x = in_value(n.in[0]);
            const Tensor& gain = in_value(n.in[1]);
            const int64_t dim = x.dim(x.rank() - 1);
            const int64_t slices = x.numel() / dim;
            // The three gradients share one kernel; route unused ones into
            // scratch so a partially frozen call still works.
            Tensor scratch_x;
            Tensor scratch_g;
            Tensor scratch_b;
            Tensor* dx = nullptr;
            if (wants(n.in[0])) {
                dx = &grad_buf(n.in[0], x);
            } else {
                scratch_x = Tensor::zeros(x.shape);
                dx = &scratch_x;
            }
            Tensor* dgain = nullptr;
            if (wants(n.in[1])) {
                dgain = &grad_buf(n.in[1], gain);
            } else {
                scratch_g = Tensor::zeros(gain.shape);
                dgain = &scratch_g;
            }
            Tensor* dbias = nullptr;
            if (wants(n.in[2])) {
                dbias = &grad_buf(n.in[2], in_value(n.in[2]));
            } else {
                scratch_b = Tensor::zeros(gain.shape);
                dbias = &scratch_b;
            }
            kernels::layer_norm_backward(x.ptr(), gain.ptr(), n.aux_a.ptr(), n.aux_b.ptr(), g.ptr(),
                                         dx->ptr(), dgain->ptr(), dbias->ptr(), slices, dim);
            break;
        }
        case Op::Gelu: {
            if (wants(n.in[0])) {
                const Tensor& x = in_value(n.in[0]);
                Tensor& dx = grad_buf(n.in[0], x);
                kernels::gelu_backward(x.ptr(), g.ptr(), dx.ptr(), x.numel());
            }
            break;
        }
        case Op::BatchedLmul: {
            const Tensor& w = in_value(n.in[0]);
            const Tensor& x = in_value(n.in[1]);
            const int64_t batch = x.dim(0);
            const int64_t p = w.dim(0);
            const int64_t q = w.dim(1);
            const int64_t r = x.dim(2);
            if (wants(n.in[0])) {
                Tensor& dw = grad_buf(n.in[0], w);
                kernels::blmul_backward_w(x.ptr(), g.ptr(), dw.ptr(), batch, p, q, r);
            }
            if (wants(n.in[1])) {
                Tensor& dx = grad_buf(n.in[1], x);
                kernels::blmul_backward_x(w.ptr(), g.ptr(), dx.ptr(), batch, p, q, r);
            }
            if (n.in[2] >= 0 && wants(n.in[2])) {
                Tensor& db = grad_buf(n.in[2], in_value(n.in[2]));
                kernels::blmul_backward_bias(g.ptr(), db.ptr(), batch, p, r);
            }
            break;
        }
        case Op::BatchedRmulT: {
            const Tensor& x = in_value(n.in[0]);
            const Tensor& w = in_value(n.in[1]);
            const int64_t batch = x.dim(0);
            const int64_t q = x.dim(1);
            const int64_t r = x.dim(2);
            const int64_t p = w.dim(0);
            if (wants(n.in[0])) {
                Tensor& dx = grad_buf(n.in[0], x);
                kernels::brmul_backward_x(w.ptr(), g.ptr(), dx.ptr(), batch, q, r, p);
            }
            if (wants(n.in[1])) {
                Tensor& dw = grad_buf(n.in[1], w);
                kernels::brmul_backward_w(x.ptr(), g.ptr(), dw.ptr(), batch, q, r, p);
            }
            if (n.in[2] >= 0 && wants(n.in[2])) {
                Tensor& db = grad_buf(n.in[2], in_value(n.in[2]));
                kernels::brmul_backward_bias(g.ptr(), db.ptr(), batch, q, p);
            }
            break;
        }
        case Op::ChebHops: {
            if (!wants(n.in[0])) break;
            const Tensor& x = in_value(n.in[0]);
            const int64_t nn = x.dim(0);
            const int64_t d = x.dim(1);
            const CsrMatrix& m = n.lap->mat;
            // Reverse the recurrence on contiguous per-hop grad buffers.
            std::vector<Tensor> gs(static_cast<size_t>(n.k_order + 1));
            for (int k = 0; k <= n.k_order; ++k) {
                gs[static_cast<size_t>(k)] = Tensor::zeros({nn, d});
                gather_hop(g, k, gs[static_cast<size_t>(k)].ptr());
            }
            Tensor tmp = Tensor::zeros({nn, d});
            for (int k = n.k_order; k >= 2; --k) {
                const Tensor& gk = gs[static_cast<size_t>(k)];
                kernels::spmm(nn, m.row_ptr.data(), m.col_idx.data(), m.values.data(), gk.ptr(), d,
                              tmp.ptr());
                kernels::axpy(2.0, tmp.ptr(), gs[static_cast<size_t>(k - 1)].ptr(), nn * d);
                kernels::axpy(-1.0, gk.ptr(), gs[static_cast<size_t>(k - 2)].ptr(), nn * d);
            }
            Tensor& dx = grad_buf(n.in[0], x);
            kernels::axpy(1.0, gs[0].ptr(), dx.ptr(), nn * d);
            if (n.k_order >= 1) {
                kernels::spmm(nn, m.row_ptr.data(), m.col_idx.data(), m.values.data(), gs[1].ptr(),
                              d, tmp.ptr());
                kernels::axpy(1.0, tmp.ptr(), dx.ptr(), nn * d);
            }
            break;
        }
        case Op::Aggregate: {
            const Tensor& xg = in_value(n.in[0]);
            const Tensor& w = in_value(n.in[1]);
            if (wants(n.in[0])) {
                Tensor& dxg = grad_buf(n.in[0], xg);
                kernels::aggregate_backward_xg(w.ptr(), g.ptr(), dxg.ptr(), xg.dim(0), xg.dim(1),
                                               xg.dim(2), w.dim(1));
            }
            if (wants(n.in[1])) {
                Tensor& dw = grad_buf(n.in[1], w);
                kernels::aggregate_backward_w(xg.ptr(), g.ptr(), dw.ptr(), xg.dim(0), xg.dim(1),
                                              xg.dim(2), w.dim(1));
            }
            break;
        }
        case Op::HopReduce: {
            if (!wants(n.in[0])) break;
            const Tensor& xg = in_value(n.in[0]);
            Tensor& dxg = grad_buf(n.in[0], xg);
            const int64_t nn = xg.dim(0);
            const int64_t hops = xg.dim(1);
            const int64_t d = xg.dim(2);
            if (n.mode == HopReduceMode::Max) {
                for (int64_t i = 0; i < nn; ++i) {
                    for (int64_t c = 0; c < d; ++c) {
                        dxg.at(i, n.idx[static_cast<size_t>(i * d + c)], c) += g.at(i, c);
                    }
                }
            } else {
                const double scale =
                    (n.mode == HopReduceMode::Mean) ? 1.0 / static_cast<double>(hops) : 1.0;
                for (int64_t i = 0; i < nn; ++i) {
                    for (int64_t k = 0; k < hops; ++k) {
                        for (int64_t c = 0; c < d; ++c) dxg.at(i, k, c) += scale * g.at(i, c);
                    }
                }
            }
            break;
        }
        case Op::CrossEntropy: {
            if (!wants(n.in[0])) break;
            const Tensor& logits = in_value(n.in[0]);
            Tensor& dl = grad_buf(n.in[0], logits);
            const int64_t c = logits.dim(1);
            const double gscale = g.at(0) / static_cast<double>(n.mask.size());
            for (int64_t i : n.mask) {
                const int64_t label = n.labels[static_cast<size_t>(i)];
                for (int64_t j = 0; j < c; ++j) {
                    const double p = n.aux_a.at(i, j);
                    dl.at(i, j) += gscale * (p - (j == label ? 1.0 : 0.0));
                }
            }
            break;
        }
        case Op::SumAll: {
            if (wants(n.in[0])) {
                const Tensor& x = in_value(n.in[0]);
                Tensor& dx = grad_buf(n.in[0], x);
                const double gv = g.at(0);
                for (double& v : dx.data) v += gv;
            }
            break;
        }
    }
}

const Tensor& Tape::grad(Var v) const {
    const Tensor& g = grads_[static_cast<size_t>(v.id)];
    if (g.empty()) {
        static const Tensor kEmpty;
        return kEmpty;
    }
    return g;
}

}  // namespace chebmixer
