#include "chebmixer/dense.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "chebmixer/kernels.hpp"

namespace chebmixer::dense {

Tensor from_csr(const CsrMatrix& m) {
    Tensor a = Tensor::zeros({m.n, m.n});
    for (int64_t i = 0; i < m.n; ++i) {
        for (int64_t e = m.row_ptr[static_cast<size_t>(i)]; e < m.row_ptr[static_cast<size_t>(i + 1)]; ++e) {
            a.at(i, m.col_idx[static_cast<size_t>(e)]) = m.values[static_cast<size_t>(e)];
        }
    }
    return a;
}

SymEig sym_eig(const Tensor& a) {
    require_shape(a.rank() == 2 && a.dim(0) == a.dim(1),
                  "sym_eig: matrix must be square, got " + shape_str(a.shape));
    const int64_t n = a.dim(0);
    Eigen::MatrixXd m(n, n);
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < n; ++j) m(i, j) = a.at(i, j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("sym_eig: eigendecomposition failed");
    }
    SymEig out;
    out.eigenvalues = Tensor::zeros({n});
    out.eigenvectors = Tensor::zeros({n, n});
    for (int64_t i = 0; i < n; ++i) out.eigenvalues.at(i) = solver.eigenvalues()(i);
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < n; ++j) out.eigenvectors.at(i, j) = solver.eigenvectors()(i, j);
    }
    return out;
}

double sym_operator_norm(const Tensor& a) {
    const SymEig eig = sym_eig(a);
    double m = 0.0;
    for (double v : eig.eigenvalues.data) m = std::max(m, std::fabs(v));
    return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_shape(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
                  "dense::matmul: " + shape_str(a.shape) + " x " + shape_str(b.shape));
    Tensor c = Tensor::zeros({a.dim(0), b.dim(1)});
    kernels::serial::matmul(a.ptr(), b.ptr(), c.ptr(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

Tensor identity(int64_t n) {
    Tensor a = Tensor::zeros({n, n});
    for (int64_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
    return a;
}

}  // namespace chebmixer::dense
