#pragma once

#include "srhc/estimator.hpp"
#include "srhc/optimizer.hpp"
#include "srhc/saturation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace srhc {

/// Everything the receding-horizon loop needs besides the noise.
struct ControlProblem {
    SystemModel model;
    CostWeights weights;
    SaturationFunction sat = SaturationFunction::clip(1.0);
    OptimizerContext ctx;
};

/// Riccati limit, stability parameters and the lifted system; the caller
/// supplies the lambda set (usually from the cache at the filtered fixed point).
ControlProblem make_control_problem(const ValidatedModel& model, const JordanSplit& split,
                                    const HorizonConfig& horizon, const CostWeights& weights,
                                    const SaturationFunction& sat, LambdaSet lambdas, double epsilon = 10.0);

/// Lambda set at the filtered Riccati fixed point.
LambdaSet steady_state_lambdas(const SystemModel& model, int N, const SaturationFunction& sat, std::int64_t count,
                               std::uint64_t seed);

struct SimulationConfig {
    int t_end = 200;  ///< steps t = 0..t_end are simulated
    int paths = 1;
    std::uint64_t master_seed = 1;
    bool use_soft = false;
    /// Fixed initial state; drawn from N(xhat0, sigma_x0) per path when empty.
    std::optional<Vector> x0;
    /// Run even when u_max < U*max (no stability guarantee).
    bool allow_low_authority = false;
    /// Worker threads for run_batch; 0 picks hardware concurrency.
    int threads = 0;
};

void validate_simulation(const SimulationConfig& sim, const HorizonConfig& horizon);

/// What the loop applies over one control block.
struct PolicyDecision {
    Policy policy;
    SolveStatus status = SolveStatus::Optimal;
    int bisection_steps = 0;
};

/// Called at the start of every control block with the filtered state.
using PolicyProvider = std::function<PolicyDecision(int t, const FilterState& state)>;

/// Solves the hard-constrained program, or runs the soft-constraint bisection when `use_soft`.
PolicyProvider optimizing_provider(const ControlProblem& problem, bool use_soft);

struct TrajectoryRecord {
    std::vector<Vector> x;           ///< true state x_t
    std::vector<Vector> y;
    std::vector<Vector> u;
    std::vector<Vector> xhat;        ///< x_{t|t}
    std::vector<double> trace_P;     ///< tr P_{t|t}
    std::vector<Vector> innovation;  ///< y_t - C x_{t|t-1}
    std::vector<Vector> residual;    ///< y_t - C x_{t|t}, the policy feedback signal
    std::vector<double> stage_cost;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;

    int solves = 0;
    int inaccurate_solves = 0;
    int bisection_steps = 0;
    /// Step of the failed solve when the run was aborted.
    std::optional<int> failed_at;
    std::string failure;

    int steps() const { return static_cast<int>(u.size()); }
};

/// Noise for one path: one stream per signal.
struct PathStreams {
    std::uint64_t x0_seed = 0;
    std::uint64_t w_seed = 0;
    std::uint64_t v_seed = 0;
};

PathStreams path_streams(std::uint64_t master_seed, int path);

/// Closed loop over t = 0..sim.t_end with seed-derived noise. A failed solve
/// stops the run; the partial record carries failed_at.
TrajectoryRecord run_receding_horizon(const ControlProblem& problem, const SimulationConfig& sim, int path,
                                      const PolicyProvider& provider);
TrajectoryRecord run_receding_horizon(const ControlProblem& problem, const SimulationConfig& sim, int path = 0);

struct DriftStats {
    std::int64_t samples = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct SlopeStats {
    int t_from = 0;
    int t_to = 0;
    double slope = 0.0;      ///< mean over paths of the per-path least-squares slope
    double std_error = 0.0;  ///< across-path standard error (0 for one path)
};

struct BatchStats {
    std::vector<double> mean_norm;
    std::vector<double> std_norm;
    std::vector<double> mean_sq_norm;
    std::vector<double> avg_cost;  ///< path mean of the running time-averaged stage cost
    int paths = 0;
    int failed_paths = 0;
    int solves = 0;
    int inaccurate_solves = 0;
    std::int64_t bound_violations = 0;
    double max_input_excess = 0.0;  ///< max_t ||u_t||_inf - u_max
    DriftStats drift;
    SlopeStats second_half_slope;
};

/// Per-path records plus aggregated statistics; path p uses path_streams(master_seed, p).
struct BatchResult {
    std::vector<TrajectoryRecord> runs;
    BatchStats stats;
};

BatchResult run_batch(const ControlProblem& problem, const SimulationConfig& sim);
BatchStats aggregate(const std::vector<TrajectoryRecord>& runs, const ControlProblem& problem);

/// Increments ||xhat2_{kappa(k+1)}|| - ||xhat2_{kappa k}|| over blocks starting above `threshold`.
DriftStats drift_statistics(const std::vector<TrajectoryRecord>& runs, int n2, int kappa, double threshold);

/// Least-squares slope of ||x_t||^2 over [t_from, t_to], averaged across paths.
SlopeStats mean_square_slope(const std::vector<TrajectoryRecord>& runs, int t_from, int t_to);

void write_run_csv(std::ostream& out, const TrajectoryRecord& run, const ControlProblem& problem);
void write_batch_csv(std::ostream& out, const BatchStats& stats);
nlohmann::json summary_json(const BatchStats& stats, const ControlProblem& problem, const SimulationConfig& sim);

}  // namespace srhc
