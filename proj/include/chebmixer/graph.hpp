#pragma once

#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

#include "chebmixer/tensor.hpp"

namespace chebmixer {

/// Sparse weighted undirected graph in CSR form. Structurally symmetric,
/// strictly increasing column indices per row, no duplicate edges, and no
/// self-loops unless allowed at construction.
struct CsrGraph {
    int64_t n = 0;
    std::vector<int64_t> row_ptr;
    std::vector<int64_t> col_idx;
    std::vector<double> weights;

    int64_t edge_slots() const { return static_cast<int64_t>(col_idx.size()); }
    double degree(int64_t i) const;
    std::vector<double> degrees() const;
};

/// General sparse symmetric matrix in CSR form (Laplacians and normalized
/// adjacencies carry diagonal entries, unlike CsrGraph).
struct CsrMatrix {
    int64_t n = 0;
    std::vector<int64_t> row_ptr;
    std::vector<int64_t> col_idx;
    std::vector<double> values;
};

enum class LaplacianKind { Combinatorial, SymmetricNormalized, Scaled };

struct SparseLaplacian {
    CsrMatrix mat;
    LaplacianKind kind = LaplacianKind::Combinatorial;
    std::optional<double> lambda_max_used;
};

struct Edge {
    int64_t u;
    int64_t v;
    double weight;
};

/// Builds a validated CSR graph. Duplicate (u,v) pairs are an error, not
/// merged; weights must be positive; self-loops rejected unless allowed.
CsrGraph build_csr(int64_t n, const std::vector<Edge>& edges, bool symmetrize,
                   bool allow_self_loops = false);

/// L = I - D^{-1/2} A D^{-1/2}; isolated nodes get an identity row.
SparseLaplacian sym_norm_laplacian(const CsrGraph& g);

/// L = D - A.
SparseLaplacian combinatorial_laplacian(const CsrGraph& g);

/// Power-iteration estimate of the largest eigenvalue of a symmetric PSD
/// Laplacian, inflated by a (1 + 1e-6) margin so the scaled spectrum stays
/// inside [-1, 1]. Starts from the all-ones vector; restarts from a seeded
/// random vector when the start lies in the null space. On non-convergence
/// returns the universal bound 2.0 for symmetric-normalized Laplacians (with
/// a warning on stderr) and throws otherwise.
double estimate_lambda_max(const SparseLaplacian& lap, double tol = 1e-6, int max_iter = 1000);

/// L_hat = 2 L / lambda_max - I; the pattern gains a full diagonal.
SparseLaplacian scale_laplacian(const SparseLaplacian& lap, double lambda_max);

/// Y = M * X with fixed row-major, ascending-column accumulation order.
Tensor spmm(const CsrMatrix& m, const Tensor& x);
Tensor spmm(const SparseLaplacian& lap, const Tensor& x);

/// Exact k-nearest-neighbour graph under Euclidean distance, ties broken by
/// lower node index, symmetrized by union, unit weights.
CsrGraph knn_graph(const Tensor& features, int64_t k);

/// Relabels nodes: node i becomes perm[i]. Used by the permutation tests.
CsrGraph permute_graph(const CsrGraph& g, const std::vector<int64_t>& perm);

}  // namespace chebmixer
