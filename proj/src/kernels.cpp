#include "chebmixer/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace chebmixer::kernels {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline void matmul_row(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t n,
                       bool acc) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    if (!acc) {
        for (int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    }
    for (int64_t t = 0; t < k; ++t) {
        const double av = ai[t];
        const double* bt = b + t * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, int64_t i, int64_t k,
                          int64_t n, bool acc) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double s = 0.0;
        for (int64_t t = 0; t < k; ++t) s += ai[t] * bj[t];
        ci[j] = acc ? ci[j] + s : s;
    }
}

// Row `r` of C = A^T * B, i.e. C[r][j] = sum_i A[i][r] * B[i][j].
inline void matmul_tn_row(const double* a, const double* b, double* c, int64_t r, int64_t m,
                          int64_t k, int64_t n, bool acc) {
    double* cr = c + r * n;
    if (!acc) {
        for (int64_t j = 0; j < n; ++j) cr[j] = 0.0;
    }
    for (int64_t i = 0; i < m; ++i) {
        const double av = a[i * k + r];
        const double* bi = b + i * n;
        for (int64_t j = 0; j < n; ++j) cr[j] += av * bi[j];
    }
}

inline double gelu_one(double x) {
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

inline double gelu_grad_one(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

inline void layer_norm_slice(const double* x, const double* gain, const double* bias, double eps,
                             double* y, double* mean, double* invstd, int64_t s, int64_t dim) {
    const double* xs = x + s * dim;
    double* ys = y + s * dim;
    double mu = 0.0;
    for (int64_t c = 0; c < dim; ++c) mu += xs[c];
    mu /= static_cast<double>(dim);
    double var = 0.0;
    for (int64_t c = 0; c < dim; ++c) {
        const double d = xs[c] - mu;
        var += d * d;
    }
    var /= static_cast<double>(dim);
    const double inv = 1.0 / std::sqrt(var + eps);
    mean[s] = mu;
    invstd[s] = inv;
    for (int64_t c = 0; c < dim; ++c) ys[c] = (xs[c] - mu) * inv * gain[c] + bias[c];
}

inline void spmm_row(int64_t i, const int64_t* row_ptr, const int64_t* col_idx,
                     const double* values, const double* x, int64_t d, double* y) {
    double* yi = y + i * d;
    for (int64_t c = 0; c < d; ++c) yi[c] = 0.0;
    for (int64_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
        const double v = values[e];
        const double* xj = x + col_idx[e] * d;
        for (int64_t c = 0; c < d; ++c) yi[c] += v * xj[c];
    }
}

inline void cheb_step_row(int64_t i, const int64_t* row_ptr, const int64_t* col_idx,
                          const double* values, const double* p, const double* q, int64_t d,
                          double* y) {
    double* yi = y + i * d;
    for (int64_t c = 0; c < d; ++c) yi[c] = 0.0;
    for (int64_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
        const double v = 2.0 * values[e];
        const double* pj = p + col_idx[e] * d;
        for (int64_t c = 0; c < d; ++c) yi[c] += v * pj[c];
    }
    const double* qi = q + i * d;
    for (int64_t c = 0; c < d; ++c) yi[c] -= qi[c];
}

inline void blmul_batch(const double* w, const double* x, const double* bias, double* out,
                        int64_t b, int64_t p, int64_t q, int64_t r) {
    const double* xb = x + b * q * r;
    double* ob = out + b * p * r;
    for (int64_t i = 0; i < p; ++i) {
        double* oi = ob + i * r;
        const double bv = bias ? bias[i] : 0.0;
        for (int64_t j = 0; j < r; ++j) oi[j] = bv;
        const double* wi = w + i * q;
        for (int64_t t = 0; t < q; ++t) {
            const double wv = wi[t];
            const double* xt = xb + t * r;
            for (int64_t j = 0; j < r; ++j) oi[j] += wv * xt[j];
        }
    }
}

inline void brmul_batch(const double* x, const double* w, const double* bias, double* out,
                        int64_t b, int64_t q, int64_t r, int64_t p) {
    const double* xb = x + b * q * r;
    double* ob = out + b * q * p;
    for (int64_t i = 0; i < q; ++i) {
        const double* xi = xb + i * r;
        double* oi = ob + i * p;
        for (int64_t j = 0; j < p; ++j) {
            const double* wj = w + j * r;
            double s = bias ? bias[j] : 0.0;
            for (int64_t t = 0; t < r; ++t) s += xi[t] * wj[t];
            oi[j] = s;
        }
    }
}

inline void aggregate_node(const double* xg, const double* w, double* out, int64_t i, int64_t hops,
                           int64_t d, int64_t w_cols) {
    const double* xi = xg + i * hops * d;
    double* oi = out + i * d;
    for (int64_t c = 0; c < d; ++c) {
        const int64_t wc = (w_cols == 1) ? 0 : c;
        double s = 0.0;
        for (int64_t k = 0; k < hops; ++k) s += w[k * w_cols + wc] * xi[k * d + c];
        oi[c] = s;
    }
}

}  // namespace

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool acc) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n, acc);
}

void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) matmul_nt_row(a, b, c, i, k, n, acc);
}

void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc) {
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < k; ++r) matmul_tn_row(a, b, c, r, m, k, n, acc);
}

void add(const double* a, const double* b, double* out, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_row_bias(double* x, const double* bias, int64_t rows, int64_t cols) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < rows; ++i) {
        double* xi = x + i * cols;
        for (int64_t j = 0; j < cols; ++j) xi[j] += bias[j];
    }
}

void col_sum_acc(const double* x, double* out, int64_t rows, int64_t cols) {
#pragma omp parallel for schedule(static)
    for (int64_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int64_t i = 0; i < rows; ++i) s += x[i * cols + j];
        out[j] += s;
    }
}

void gelu_forward(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * gelu_grad_one(x[i]);
}

void layer_norm_forward(const double* x, const double* gain, const double* bias, double eps,
                        double* y, double* mean, double* invstd, int64_t slices, int64_t dim) {
#pragma omp parallel for schedule(static)
    for (int64_t s = 0; s < slices; ++s) layer_norm_slice(x, gain, bias, eps, y, mean, invstd, s, dim);
}

void layer_norm_backward(const double* x, const double* gain, const double* mean,
                         const double* invstd, const double* dy, double* dx, double* dgain,
                         double* dbias, int64_t slices, int64_t dim) {
#pragma omp parallel for schedule(static)
    for (int64_t s = 0; s < slices; ++s) {
        const double* xs = x + s * dim;
        const double* dys = dy + s * dim;
        double* dxs = dx + s * dim;
        const double mu = mean[s];
        const double inv = invstd[s];
        // dL/dxhat = dy*gain; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat)).
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int64_t c = 0; c < dim; ++c) {
            const double xhat = (xs[c] - mu) * inv;
            const double dxhat = dys[c] * gain[c];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
        }
        const double invd = 1.0 / static_cast<double>(dim);
        for (int64_t c = 0; c < dim; ++c) {
            const double xhat = (xs[c] - mu) * inv;
            const double dxhat = dys[c] * gain[c];
            dxs[c] += inv * (dxhat - sum_dxhat * invd - xhat * sum_dxhat_xhat * invd);
        }
    }
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < dim; ++c) {
        double dg = 0.0;
        double db = 0.0;
        for (int64_t s = 0; s < slices; ++s) {
            const double xhat = (x[s * dim + c] - mean[s]) * invstd[s];
            dg += dy[s * dim + c] * xhat;
            db += dy[s * dim + c];
        }
        dgain[c] += dg;
        dbias[c] += db;
    }
}

void spmm(int64_t n, const int64_t* row_ptr, const int64_t* col_idx, const double* values,
          const double* x, int64_t d, double* y) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) spmm_row(i, row_ptr, col_idx, values, x, d, y);
}

void cheb_step(int64_t n, const int64_t* row_ptr, const int64_t* col_idx, const double* values,
               const double* p, const double* q, int64_t d, double* y) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) cheb_step_row(i, row_ptr, col_idx, values, p, q, d, y);
}

void blmul_forward(const double* w, const double* x, const double* bias, double* out, int64_t batch,
                   int64_t p, int64_t q, int64_t r) {
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < batch; ++b) blmul_batch(w, x, bias, out, b, p, q, r);
}

void blmul_backward_x(const double* w, const double* dout, double* dx, int64_t batch, int64_t p,
                      int64_t q, int64_t r) {
    // dX[b] += W^T * dOUT[b]
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < batch; ++b) {
        const double* db_ = dout + b * p * r;
        double* dxb = dx + b * q * r;
        for (int64_t i = 0; i < p; ++i) {
            const double* wi = w + i * q;
            const double* di = db_ + i * r;
            for (int64_t t = 0; t < q; ++t) {
                const double wv = wi[t];
                double* dxt = dxb + t * r;
                for (int64_t j = 0; j < r; ++j) dxt[j] += wv * di[j];
            }
        }
    }
}

void blmul_backward_w(const double* x, const double* dout, double* dw, int64_t batch, int64_t p,
                      int64_t q, int64_t r) {
    // dW[i][t] += sum_b sum_j dOUT[b][i][j] * X[b][t][j]
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < p; ++i) {
        double* dwi = dw + i * q;
        for (int64_t b = 0; b < batch; ++b) {
            const double* di = dout + (b * p + i) * r;
            const double* xb = x + b * q * r;
            for (int64_t t = 0; t < q; ++t) {
                const double* xt = xb + t * r;
                double s = 0.0;
                for (int64_t j = 0; j < r; ++j) s += di[j] * xt[j];
                dwi[t] += s;
            }
        }
    }
}

void blmul_backward_bias(const double* dout, double* dbias, int64_t batch, int64_t p, int64_t r) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < p; ++i) {
        double s = 0.0;
        for (int64_t b = 0; b < batch; ++b) {
            const double* di = dout + (b * p + i) * r;
            for (int64_t j = 0; j < r; ++j) s += di[j];
        }
        dbias[i] += s;
    }
}

void brmul_forward(const double* x, const double* w, const double* bias, double* out, int64_t batch,
                   int64_t q, int64_t r, int64_t p) {
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < batch; ++b) brmul_batch(x, w, bias, out, b, q, r, p);
}

void brmul_backward_x(const double* w, const double* dout, double* dx, int64_t batch, int64_t q,
                      int64_t r, int64_t p) {
    // dX[b] += dOUT[b] * W
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < batch; ++b) {
        const double* db_ = dout + b * q * p;
        double* dxb = dx + b * q * r;
        for (int64_t i = 0; i < q; ++i) {
            const double* di = db_ + i * p;
            double* dxi = dxb + i * r;
            for (int64_t j = 0; j < p; ++j) {
                const double dv = di[j];
                const double* wj = w + j * r;
                for (int64_t t = 0; t < r; ++t) dxi[t] += dv * wj[t];
            }
        }
    }
}

void brmul_backward_w(const double* x, const double* dout, double* dw, int64_t batch, int64_t q,
                      int64_t r, int64_t p) {
    // dW[j][t] += sum_b sum_i dOUT[b][i][j] * X[b][i][t]
#pragma omp parallel for schedule(static)
    for (int64_t j = 0; j < p; ++j) {
        double* dwj = dw + j * r;
        for (int64_t b = 0; b < batch; ++b) {
            const double* xb = x + b * q * r;
            const double* db_ = dout + b * q * p;
            for (int64_t i = 0; i < q; ++i) {
                const double dv = db_[i * p + j];
                const double* xi = xb + i * r;
                for (int64_t t = 0; t < r; ++t) dwj[t] += dv * xi[t];
            }
        }
    }
}

void brmul_backward_bias(const double* dout, double* dbias, int64_t batch, int64_t q, int64_t p) {
#pragma omp parallel for schedule(static)
    for (int64_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (int64_t b = 0; b < batch; ++b) {
            for (int64_t i = 0; i < q; ++i) s += dout[(b * q + i) * p + j];
        }
        dbias[j] += s;
    }
}

void aggregate_forward(const double* xg, const double* w, double* out, int64_t n, int64_t hops,
                       int64_t d, int64_t w_cols) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) aggregate_node(xg, w, out, i, hops, d, w_cols);
}

void aggregate_backward_xg(const double* w, const double* dout, double* dxg, int64_t n,
                           int64_t hops, int64_t d, int64_t w_cols) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const double* di = dout + i * d;
        double* dxi = dxg + i * hops * d;
        for (int64_t k = 0; k < hops; ++k) {
            for (int64_t c = 0; c < d; ++c) {
                const int64_t wc = (w_cols == 1) ? 0 : c;
                dxi[k * d + c] += w[k * w_cols + wc] * di[c];
            }
        }
    }
}

void aggregate_backward_w(const double* xg, const double* dout, double* dw, int64_t n, int64_t hops,
                          int64_t d, int64_t w_cols) {
#pragma omp parallel for schedule(static)
    for (int64_t k = 0; k < hops; ++k) {
        if (w_cols == 1) {
            double s = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                const double* xi = xg + (i * hops + k) * d;
                const double* di = dout + i * d;
                for (int64_t c = 0; c < d; ++c) s += xi[c] * di[c];
            }
            dw[k] += s;
        } else {
            double* dwk = dw + k * d;
            for (int64_t i = 0; i < n; ++i) {
                const double* xi = xg + (i * hops + k) * d;
                const double* di = dout + i * d;
                for (int64_t c = 0; c < d; ++c) dwk[c] += xi[c] * di[c];
            }
        }
    }
}

namespace serial {

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
            bool acc) {
    for (int64_t i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n, acc);
}

void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc) {
    for (int64_t i = 0; i < m; ++i) matmul_nt_row(a, b, c, i, k, n, acc);
}

void matmul_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
               bool acc) {
    for (int64_t r = 0; r < k; ++r) matmul_tn_row(a, b, c, r, m, k, n, acc);
}

void gelu_forward(const double* x, double* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void layer_norm_forward(const double* x, const double* gain, const double* bias, double eps,
                        double* y, double* mean, double* invstd, int64_t slices, int64_t dim) {
    for (int64_t s = 0; s < slices; ++s) layer_norm_slice(x, gain, bias, eps, y, mean, invstd, s, dim);
}

void spmm(int64_t n, const int64_t* row_ptr, const int64_t* col_idx, const double* values,
          const double* x, int64_t d, double* y) {
    for (int64_t i = 0; i < n; ++i) spmm_row(i, row_ptr, col_idx, values, x, d, y);
}

void blmul_forward(const double* w, const double* x, const double* bias, double* out, int64_t batch,
                   int64_t p, int64_t q, int64_t r) {
    for (int64_t b = 0; b < batch; ++b) blmul_batch(w, x, bias, out, b, p, q, r);
}

void brmul_forward(const double* x, const double* w, const double* bias, double* out, int64_t batch,
                   int64_t q, int64_t r, int64_t p) {
    for (int64_t b = 0; b < batch; ++b) brmul_batch(x, w, bias, out, b, q, r, p);
}

void aggregate_forward(const double* xg, const double* w, double* out, int64_t n, int64_t hops,
                       int64_t d, int64_t w_cols) {
    for (int64_t i = 0; i < n; ++i) aggregate_node(xg, w, out, i, hops, d, w_cols);
}

}  // namespace serial

}  // namespace chebmixer::kernels
