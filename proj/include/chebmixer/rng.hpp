#pragma once

#include <cstdint>

namespace chebmixer {

/// SplitMix64 generator. Every stochastic choice in a run (parameter init,
/// splits, SBM sampling, power-iteration restarts) derives from the single
/// run seed through fixed stream tags, so results are reproducible across
/// platforms without depending on std:: distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    /// Independent stream for a fixed purpose tag.
    static Rng stream(uint64_t seed, uint64_t tag);

    uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n), unbiased (rejection sampling).
    uint64_t uniform_int(uint64_t n);

    /// Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal();

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Fixed stream tags (see Rng::stream).
namespace rng_stream {
inline constexpr uint64_t kParamInit = 1;
inline constexpr uint64_t kSplits = 2;
inline constexpr uint64_t kSbmGraph = 3;
inline constexpr uint64_t kSbmFeatures = 4;
inline constexpr uint64_t kPowerRestart = 5;
}  // namespace rng_stream

}  // namespace chebmixer
