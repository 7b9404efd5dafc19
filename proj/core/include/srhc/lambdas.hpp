#pragma once

#include "srhc/estimator.hpp"
#include "srhc/saturation.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

namespace srhc {

/// Expectations of saturated innovations over one horizon, taken at a fixed
/// estimation-error covariance. Row/column blocks are indexed by horizon step.
struct LambdaSet {
    int N = 0;
    int n = 0;
    int p = 0;
    Vector lambda_phi;       ///< Np, E[phi]
    Matrix lambda_phi_e;     ///< Np x n, E[phi e^T]
    Matrix lambda_phi_x;     ///< Np x n, assembled at xhat = 0 (equals lambda_phi_e)
    Matrix lambda_w_phi;     ///< Nn x Np, E[W phi^T]
    Matrix lambda_phi_phi;   ///< Np x Np, E[phi phi^T]
    Matrix P_used;
    std::int64_t sample_count = 0;
    std::uint64_t seed = 0;

    // Monte-Carlo standard errors, same shapes as the estimates.
    Vector se_phi;
    Matrix se_phi_e;
    Matrix se_w_phi;
    Matrix se_phi_phi;
};

/// Linear maps from (e, W, V) to the stacked residuals y_k - C xhat_{k|k}, k = 0..N.
struct InnovationMaps {
    Matrix Ge;  ///< Ca Fe
    Matrix Gw;  ///< Ca Fw
    Matrix Gv;  ///< I - Ca Fv
};

/// Column j of every member is one joint draw.
struct InnovationBatch {
    Matrix e;      ///< n x count
    Matrix W;      ///< Nn x count
    Matrix V;      ///< (N+1)p x count
    Matrix innov;  ///< (N+1)p x count
    Matrix phi;    ///< Np x count, saturated first N blocks of innov
};

inline constexpr int kLambdaShards = 16;
inline constexpr std::int64_t kDefaultLambdaSamples = 100000;

InnovationMaps innovation_maps(const ErrorLift& lift, const SystemModel& model, int N);

/// Samples are split into kLambdaShards shards, each with its own derived seed;
/// the concatenation order is fixed so results do not depend on scheduling.
InnovationBatch sample_innovation_batch(const Matrix& P, const ErrorLift& lift, const SystemModel& model, int N,
                                        std::int64_t count, std::uint64_t seed, const SaturationFunction& sat);

/// Monte-Carlo estimate of all lambda matrices at covariance P.
LambdaSet estimate_lambdas(const Matrix& P, const ErrorLift& lift, const SystemModel& model, int N,
                           const SaturationFunction& sat, std::int64_t count, std::uint64_t seed);

/// Same, with the error lift frozen at the steady-state gain of `riccati`.
LambdaSet estimate_lambdas(const Matrix& P, const SystemModel& model, const RiccatiSolution& riccati, int N,
                           const SaturationFunction& sat, std::int64_t count, std::uint64_t seed);

/// lambda_phi_e + lambda_phi xhat^T
Matrix assemble_lambda_phi_x(const LambdaSet& lset, const Vector& xhat);

struct LambdaCacheKey {
    std::uint64_t model_hash = 0;
    int N = 0;
    std::string saturation;
    std::uint64_t p_hash = 0;
    std::int64_t count = 0;
    std::uint64_t seed = 0;

    std::string hex() const;
};

LambdaCacheKey make_lambda_key(const SystemModel& model, int N, const SaturationFunction& sat, const Matrix& P,
                               std::int64_t count, std::uint64_t seed);

enum class CacheOutcome { Hit, Computed, Recomputed };

struct LambdaCacheResult {
    LambdaSet lambdas;
    CacheOutcome outcome = CacheOutcome::Computed;
    std::filesystem::path payload_path;
};

/// Looks up `<dir>/lambda/<hex-key>.bin` (+ `.json` sidecar). A missing entry is
/// computed and written; an entry whose payload hash or key fields disagree with
/// the sidecar is recomputed and overwritten. `force` always recomputes.
LambdaCacheResult lambda_cache_get_or_compute(const LambdaCacheKey& key, const std::filesystem::path& dir,
                                              const std::function<LambdaSet()>& compute, bool force = false);

/// Raw payload IO, exposed for tests.
void write_lambda_payload(const std::filesystem::path& path, const LambdaSet& lset);
LambdaSet read_lambda_payload(const std::filesystem::path& path);

}  // namespace srhc
