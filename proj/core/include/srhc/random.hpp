#pragma once

#include "srhc/linalg.hpp"

#include <cstdint>
#include <random>

namespace srhc {

/// One SplitMix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic child seed for (seed, a, b). Distinct tuples give unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Standard-normal source backed by mt19937_64.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() { return dist_(engine_); }
    Vector standard(Eigen::Index n);
    /// factor * z with z standard normal, so the covariance is factor * factor^T.
    Vector correlated(const Matrix& factor);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace srhc
