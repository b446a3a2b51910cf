#pragma once

#include "chebmixer/graph.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer::dense {

/// Dense n x n tensor from a CSR matrix. Test/oracle scale only.
Tensor from_csr(const CsrMatrix& m);

struct SymEig {
    Tensor eigenvalues;   // n, ascending
    Tensor eigenvectors;  // n x n, column j pairs with eigenvalue j
};

/// Eigendecomposition of a dense symmetric matrix.
SymEig sym_eig(const Tensor& a);

/// Largest |eigenvalue| of a dense symmetric matrix.
double sym_operator_norm(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor identity(int64_t n);

}  // namespace chebmixer::dense
