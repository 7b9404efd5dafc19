#pragma once

#include "srhc/controller.hpp"
#include "srhc/model_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace srhc::cli {

inline constexpr int kConfigVersion = 1;

struct LambdaOptions {
    std::int64_t samples = 100000;
    std::uint64_t seed = 1;
    std::filesystem::path cache_dir = ".srhc-cache";
    bool force = false;
};

struct ExperimentConfig {
    std::filesystem::path model_path;
    nlohmann::json saturation = {{"kind", "clip"}};
    LambdaOptions lambda;
    double epsilon = 10.0;
    ConeSolverOptions solver;
    std::optional<double> rate_limit;
    SimulationConfig sim;
    double delta = 1e-3;
    int nu_bar = 30;
    nlohmann::json soft;  ///< S, L, S_tilde (matrices, or numbers meaning multiples of I / constant vectors)
    std::filesystem::path output_dir = "out";
};

/// Reads a config document. Relative paths are resolved against the file's directory.
ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// SRHC_LAMBDA_CACHE, when set, replaces the configured cache directory.
void apply_environment(ExperimentConfig& cfg);

SaturationFunction make_saturation(const nlohmann::json& j, double phi_max);
SoftConstraintSpec make_soft_spec(const nlohmann::json& j, int N, int n, int m, double delta, int nu_bar);

struct Prepared {
    ProblemDefinition def;
    ValidatedModel model;
    JordanSplit split;
    SaturationFunction sat;
};

Prepared prepare(const ExperimentConfig& cfg);

struct LambdaReport {
    LambdaSet lambdas;
    std::string key;
    CacheOutcome outcome = CacheOutcome::Computed;
    std::filesystem::path path;
};

/// Lambda set at the filtered Riccati limit, through the on-disk cache.
LambdaReport cached_lambdas(const Prepared& p, const ExperimentConfig& cfg);

ControlProblem make_problem(const Prepared& p, const ExperimentConfig& cfg, LambdaSet lambdas);

}  // namespace srhc::cli
