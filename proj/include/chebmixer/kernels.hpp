#pragma once

#include <cstdint>

namespace chebmixer::kernels {

// Dense and sparse inner loops used by every layer. Each kernel exists in a
// serial reference form (namespace serial) and an OpenMP form (default
// namespace). Both call the same per-row routines, and no floating-point
// reduction crosses the parallel dimension, so the OpenMP results are bitwise
// identical to the serial ones for any thread count.
//
// Backward kernels accumulate (+=) into their gradient outputs; callers zero
// the buffers once and rely on tape order for deterministic accumulation.

// C[m x n] = A[m x k] * B[k x n]; accumulates into C when acc is set.
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool acc = false);
// C[m x n] = A[m x k] * B[n x k]^T.
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc = false);
// C[k x n] = A[m x k]^T * B[m x n].
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc = false);

void add(const double* a, const double* b, double* out, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);  // y += alpha*x
void add_row_bias(double* x, const double* bias, int64_t rows, int64_t cols);
void col_sum_acc(const double* x, double* out, int64_t rows, int64_t cols);

void gelu_forward(const double* x, double* y, int64_t n);
void gelu_backward(const double* x, const double* dy, double* dx, int64_t n);

// Normalizes each of `slices` rows of length `dim` over its last axis.
void layer_norm_forward(const double* x, const double* gain, const double* bias, double eps,
                        double* y, double* mean, double* invstd, int64_t slices, int64_t dim);
void layer_norm_backward(const double* x, const double* gain, const double* mean,
                         const double* invstd, const double* dy, double* dx, double* dgain,
                         double* dbias, int64_t slices, int64_t dim);

// Sparse (CSR) times dense: Y[n x d] = M * X[n x d]. Row-major ascending-column
// accumulation order per output element.
void spmm(int64_t n, const int64_t* row_ptr, const int64_t* col_idx, const double* values,
          const double* x, int64_t d, double* y);
// Y[n x d] = 2*M*P - Q (one Chebyshev recurrence step).
void cheb_step(int64_t n, const int64_t* row_ptr, const int64_t* col_idx, const double* values,
               const double* p, const double* q, int64_t d, double* y);

// Batched left-multiply: OUT[b] = W[p x q] * X[b][q x r] (+ bias[p] per row).
void blmul_forward(const double* w, const double* x, const double* bias, double* out, int64_t batch,
                   int64_t p, int64_t q, int64_t r);
void blmul_backward_x(const double* w, const double* dout, double* dx, int64_t batch, int64_t p,
                      int64_t q, int64_t r);
void blmul_backward_w(const double* x, const double* dout, double* dw, int64_t batch, int64_t p,
                      int64_t q, int64_t r);
void blmul_backward_bias(const double* dout, double* dbias, int64_t batch, int64_t p, int64_t r);

// Batched right-multiply by a transpose: OUT[b] = X[b][q x r] * W[p x r]^T
// (+ bias[p] per column of the result).
void brmul_forward(const double* x, const double* w, const double* bias, double* out, int64_t batch,
                   int64_t q, int64_t r, int64_t p);
void brmul_backward_x(const double* w, const double* dout, double* dx, int64_t batch, int64_t q,
                      int64_t r, int64_t p);
void brmul_backward_w(const double* x, const double* dout, double* dw, int64_t batch, int64_t q,
                      int64_t r, int64_t p);
void brmul_backward_bias(const double* dout, double* dbias, int64_t batch, int64_t q, int64_t p);

// Hop-weighted reduction: OUT[n][c] = sum_k W[k][wc] * XG[n][k][c], where
// wc = 0 when w_cols == 1 (channel-shared weights) and wc = c otherwise.
void aggregate_forward(const double* xg, const double* w, double* out, int64_t n, int64_t hops,
                       int64_t d, int64_t w_cols);
void aggregate_backward_xg(const double* w, const double* dout, double* dxg, int64_t n,
                           int64_t hops, int64_t d, int64_t w_cols);
void aggregate_backward_w(const double* xg, const double* dout, double* dw, int64_t n, int64_t hops,
                          int64_t d, int64_t w_cols);

int thread_count();

namespace serial {
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool acc = false);
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc = false);
void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc = false);
void gelu_forward(const double* x, double* y, int64_t n);
void layer_norm_forward(const double* x, const double* gain, const double* bias, double eps,
                        double* y, double* mean, double* invstd, int64_t slices, int64_t dim);
void spmm(int64_t n, const int64_t* row_ptr, const int64_t* col_idx, const double* values,
          const double* x, int64_t d, double* y);
void blmul_forward(const double* w, const double* x, const double* bias, double* out, int64_t batch,
                   int64_t p, int64_t q, int64_t r);
void brmul_forward(const double* x, const double* w, const double* bias, double* out, int64_t batch,
                   int64_t q, int64_t r, int64_t p);
void aggregate_forward(const double* xg, const double* w, double* out, int64_t n, int64_t hops,
                       int64_t d, int64_t w_cols);
}  // namespace serial

}  // namespace chebmixer::kernels
