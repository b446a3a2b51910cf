#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chebmixer/graph.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer {

enum class Split : uint8_t { Train, Val, Test };

/// Graph plus raw node features, integer labels and an optional split
/// assignment (empty vector until splits are generated or loaded).
struct Dataset {
    CsrGraph graph;
    Tensor features;  // N x d_raw
    std::vector<int64_t> labels;
    std::vector<Split> splits;
    int64_t class_count = 0;
    std::string name;

    int64_t n() const { return graph.n; }
    int64_t d_raw() const { return features.dim(1); }
    bool has_splits() const { return !splits.empty(); }
    std::vector<int64_t> split_indices(Split s) const;

    /// Checks all invariants; warns on stderr when a class is missing from
    /// the train split.
    void validate() const;
};

/// Loads the TSV directory layout (meta.tsv, graph.tsv, features.tsv,
/// labels.tsv, optional splits.tsv). Parse errors carry file and line.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the same layout; floats carry 17 significant digits so the
/// round-trip is exact. splits.tsv is written only when splits are assigned.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Stochastic-block-model synthetic dataset: B equally sized contiguous
/// blocks, within-block edge probability p_in, between-block p_out, features
/// drawn around orthogonal block means separated by feat_sep plus unit
/// Gaussian noise. Labels are block ids; splits are left unassigned.
Dataset gen_sbm(int64_t n, int64_t blocks, double p_in, double p_out, int64_t feat_dim,
                double feat_sep, uint64_t seed);

}  // namespace chebmixer
