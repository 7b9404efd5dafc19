#include "experiment.hpp"

#include "srhc/errors.hpp"

#include <cstdlib>

namespace srhc::cli {
namespace {

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::Parse, where + "." + key + " has the wrong type");
    }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key)
{
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(key)) {
        return empty;
    }
    if (!j.at(key).is_object()) {
        throw Error(ErrorKind::Parse, std::string(key) + " must be an object");
    }
    return j.at(key);
}

Matrix square_or_scaled(const nlohmann::json& j, const char* name, int dim)
{
    if (j.is_number()) {
        return j.get<double>() * Matrix::Identity(dim, dim);
    }
    Matrix m = matrix_from_json(j, name);
    if (m.rows() != dim || m.cols() != dim) {
        throw Error(ErrorKind::DimensionMismatch, std::string(name) + " must be " + std::to_string(dim) + "x" +
                                                      std::to_string(dim));
    }
    return m;
}

}  // namespace

ExperimentConfig parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    if (!j.is_object()) {
        throw Error(ErrorKind::Parse, "config must be a JSON object");
    }
    int version = 0;
    read(j, "version", version, "config");
    if (version != kConfigVersion) {
        throw Error(ErrorKind::Parse, "unsupported config version " + std::to_string(version) + " (expected " +
                                          std::to_string(kConfigVersion) + ")");
    }
    ExperimentConfig cfg;
    std::string model;
    read(j, "model", model, "config");
    if (model.empty()) {
        throw Error(ErrorKind::Parse, "config.model is required");
    }
    cfg.model_path = (base_dir / model).lexically_normal();
    if (j.contains("saturation")) {
        cfg.saturation = j.at("saturation");
    }

    const auto& lam = section(j, "lambda");
    read(lam, "samples", cfg.lambda.samples, "lambda");
    read(lam, "seed", cfg.lambda.seed, "lambda");
    std::string cache;
    read(lam, "cache_dir", cache, "lambda");
    if (!cache.empty()) {
        cfg.lambda.cache_dir = (base_dir / cache).lexically_normal();
    }

    read(section(j, "stability"), "epsilon", cfg.epsilon, "stability");

    const auto& sol = section(j, "solver");
    read(sol, "tol", cfg.solver.feastol, "solver");
    cfg.solver.abstol = cfg.solver.reltol = cfg.solver.feastol;
    read(sol, "max_iter", cfg.solver.max_iter, "solver");
    if (sol.contains("rate_limit") && !sol.at("rate_limit").is_null()) {
        double r = 0.0;
        read(sol, "rate_limit", r, "solver");
        cfg.rate_limit = r;
    }

    const auto& sim = section(j, "simulation");
    read(sim, "t_end", cfg.sim.t_end, "simulation");
    read(sim, "paths", cfg.sim.paths, "simulation");
    read(sim, "master_seed", cfg.sim.master_seed, "simulation");
    read(sim, "threads", cfg.sim.threads, "simulation");
    read(sim, "use_soft", cfg.sim.use_soft, "simulation");
    read(sim, "allow_low_authority", cfg.sim.allow_low_authority, "simulation");
    read(sim, "delta", cfg.delta, "simulation");
    read(sim, "nu_bar", cfg.nu_bar, "simulation");
    if (sim.contains("x0") && !sim.at("x0").is_null()) {
        cfg.sim.x0 = vector_from_json(sim.at("x0"), "simulation.x0");
    }
    if (j.contains("soft")) {
        cfg.soft = j.at("soft");
    }
    std::string out;
    read(j, "output", out, "config");
    if (!out.empty()) {
        cfg.output_dir = (base_dir / out).lexically_normal();
    }
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    return parse_experiment(load_json_file(path), path.parent_path());
}

void apply_environment(ExperimentConfig& cfg)
{
    if (const char* dir = std::getenv("SRHC_LAMBDA_CACHE"); dir != nullptr && *dir != '\0') {
        cfg.lambda.cache_dir = dir;
    }
}

SaturationFunction make_saturation(const nlohmann::json& j, double phi_max)
{
    std::string kind = "clip";
    read(j, "kind", kind, "saturation");
    if (kind == "clip") {
        return SaturationFunction::clip(phi_max);
    }
    if (kind == "sigmoid") {
        double scale = 1.0;
        read(j, "scale", scale, "saturation");
        return SaturationFunction::sigmoid(phi_max, scale);
    }
    if (kind == "pwl") {
        std::vector<std::pair<double, double>> knots;
        read(j, "knots", knots, "saturation");
        return SaturationFunction::piecewise_linear(std::move(knots), phi_max);
    }
    throw Error(ErrorKind::Parse, "unknown saturation kind '" + kind + "'");
}

SoftConstraintSpec make_soft_spec(const nlohmann::json& j, int N, int n, int m, double delta, int nu_bar)
{
    if (!j.is_object() || !j.contains("S") || !j.contains("S_tilde")) {
        throw Error(ErrorKind::DegenerateSpec, "soft constraints need 'soft.S' and 'soft.S_tilde'");
    }
    const int dim = (N + 1) * n;
    SoftConstraintSpec spec;
    spec.S = square_or_scaled(j.at("S"), "soft.S", dim);
    spec.S_tilde = square_or_scaled(j.at("S_tilde"), "soft.S_tilde", N * m);
    if (!j.contains("L") || j.at("L").is_number()) {
        spec.L = Vector::Constant(dim, j.contains("L") ? j.at("L").get<double>() : 0.0);
    } else {
        spec.L = vector_from_json(j.at("L"), "soft.L");
        if (spec.L.size() != dim) {
            throw Error(ErrorKind::DimensionMismatch, "soft.L must have length " + std::to_string(dim));
        }
    }
    spec.delta = delta;
    spec.nu_bar = nu_bar;
    return spec;
}

Prepared prepare(const ExperimentConfig& cfg)
{
    ProblemDefinition def = load_problem(cfg.model_path);
    ValidatedModel vm = validate_model(def.model);
    JordanSplit split = validate_split(vm, def.n1, def.n2, def.kappa);
    SaturationFunction sat = make_saturation(cfg.saturation, def.horizon.phi_max);
    return {std::move(def), std::move(vm), std::move(split), std::move(sat)};
}

LambdaReport cached_lambdas(const Prepared& p, const ExperimentConfig& cfg)
{
    const SystemModel& m = p.model.model();
    const RiccatiSolution ric = riccati_limit(m);
    const int N = p.def.horizon.N;
    const auto key = make_lambda_key(m, N, p.sat, ric.P_circ, cfg.lambda.samples, cfg.lambda.seed);
    auto compute = [&] { return estimate_lambdas(ric.P_circ, m, ric, N, p.sat, cfg.lambda.samples, cfg.lambda.seed); };
    auto res = lambda_cache_get_or_compute(key, cfg.lambda.cache_dir, compute, cfg.lambda.force);
    return {std::move(res.lambdas), key.hex(), res.outcome, res.payload_path};
}

ControlProblem make_problem(const Prepared& p, const ExperimentConfig& cfg, LambdaSet lambdas)
{
    ControlProblem cp = make_control_problem(p.model, p.split, p.def.horizon, p.def.weights, p.sat,
                                             std::move(lambdas), cfg.epsilon);
    cp.ctx.solve_options.cone = cfg.solver;
    cp.ctx.rate_limit = cfg.rate_limit;
    if (cfg.sim.use_soft || !cfg.soft.is_null()) {
        if (!cfg.soft.is_null()) {
            cp.ctx.soft = make_soft_spec(cfg.soft, p.def.horizon.N, p.model->n(), p.model->m(), cfg.delta,
                                         cfg.nu_bar);
        } else {
            throw Error(ErrorKind::DegenerateSpec, "use_soft is set but the config has no 'soft' section");
        }
    }
    return cp;
}

}  // namespace srhc::cli
