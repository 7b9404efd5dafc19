#include "experiment.hpp"

#include "srhc/errors.hpp"
#include "srhc/linalg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace srhc;
using namespace srhc::cli;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasiblePaths = 3;
constexpr int kExitBoundViolation = 4;
constexpr int kExitErrorBase = 10;  // + ErrorKind

struct Common {
    std::string config;
    std::string model;
    std::string output;
    std::optional<double> epsilon;
    std::optional<std::int64_t> samples;
    std::optional<std::uint64_t> lambda_seed;
    std::string cache_dir;
    bool force = false;
};

ExperimentConfig resolve(const Common& c)
{
    ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = load_experiment(c.config);
    } else if (c.model.empty()) {
        throw Error(ErrorKind::Parse, "either --config or --model is required");
    }
    apply_environment(cfg);
    if (!c.model.empty()) {
        cfg.model_path = c.model;
    }
    if (!c.output.empty()) {
        cfg.output_dir = c.output;
    }
    if (c.epsilon) {
        cfg.epsilon = *c.epsilon;
    }
    if (c.samples) {
        cfg.lambda.samples = *c.samples;
    }
    if (c.lambda_seed) {
        cfg.lambda.seed = *c.lambda_seed;
    }
    if (!c.cache_dir.empty()) {
        cfg.lambda.cache_dir = c.cache_dir;
    }
    cfg.lambda.force = c.force;
    return cfg;
}

void add_common(CLI::App* app, Common& c)
{
    app->add_option("-c,--config", c.config, "Experiment config (JSON)");
    app->add_option("-m,--model", c.model, "Model file, overrides the config");
    app->add_option("--epsilon", c.epsilon, "Drift margin")->check(CLI::PositiveNumber);
}

void add_lambda_flags(CLI::App* app, Common& c)
{
    app->add_option("--lambda-samples", c.samples, "Monte-Carlo samples for the expectation matrices")
        ->check(CLI::PositiveNumber);
    app->add_option("--lambda-seed", c.lambda_seed, "Seed for the expectation matrices");
    app->add_option("--lambda-cache-dir", c.cache_dir, "Cache directory (env SRHC_LAMBDA_CACHE)");
}

const char* outcome_name(CacheOutcome o)
{
    switch (o) {
    case CacheOutcome::Hit:
        return "hit";
    case CacheOutcome::Computed:
        return "computed";
    case CacheOutcome::Recomputed:
        return "recomputed";
    }
    return "?";
}

int cmd_validate(const Common& c)
{
    const ExperimentConfig cfg = resolve(c);
    const ProblemDefinition def = load_problem(cfg.model_path);
    std::printf("model file          %s\n", cfg.model_path.string().c_str());
    const ValidatedModel vm = validate_model(def.model);
    std::printf("dimensions          ok (n=%d m=%d p=%d)\n", vm->n(), vm->m(), vm->p());
    std::printf("covariances         ok\n");
    std::printf("Lyapunov stable A   ok (spectral radius %.6g)\n", linalg::spectral_radius(vm->A));
    std::printf("stabilizable (A,B)  ok\n");
    const JordanSplit split = validate_split(vm, def.n1, def.n2, def.kappa);
    std::printf("split               ok (n1=%d n2=%d, block diagonal, Schur and orthogonal parts)\n", split.n1,
                split.n2);
    validate_horizon(def.horizon, split.kappa);
    validate_weights(def.weights, vm->n(), vm->m(), def.horizon.N);
    std::printf("horizon, weights    ok (N=%d Nc=%d u_max=%.6g phi_max=%.6g)\n", def.horizon.N, def.horizon.Nc,
                def.horizon.u_max, def.horizon.phi_max);
    if (split.n2 > 0) {
        const StabilityParams sp = compute_stability_params(vm, split, cfg.epsilon);
        std::printf("kappa               %d\n", sp.kappa);
        std::printf("sigma_min(R_kappa)  %.12g\n", sp.sigma_min_R);
        std::printf("input authority     u_max %.6g vs U*max %.6g: %s\n", def.horizon.u_max, sp.u_max_star,
                    def.horizon.u_max >= sp.u_max_star ? "ok" : "BELOW (no stability guarantee)");
        if (def.horizon.u_max < sp.u_max_star) {
            return kExitErrorBase + static_cast<int>(ErrorKind::InvalidHorizon);
        }
    } else {
        std::printf("kappa               - (no orthogonal part)\n");
    }
    return 0;
}

int cmd_lambda(const Common& c)
{
    const ExperimentConfig cfg = resolve(c);
    const Prepared p = prepare(cfg);
    const LambdaReport rep = cached_lambdas(p, cfg);
    const LambdaSet& l = rep.lambdas;
    std::printf("key       %s\n", rep.key.c_str());
    std::printf("cache     %s (%s)\n", outcome_name(rep.outcome), rep.path.string().c_str());
    std::printf("samples   %lld, seed %llu, saturation %s\n", static_cast<long long>(l.sample_count),
                static_cast<unsigned long long>(l.seed), p.sat.describe().c_str());
    std::printf("max s.e.  first moment %.3e, second moment %.3e, noise cross %.3e\n", l.se_phi.maxCoeff(),
                l.se_phi_phi.maxCoeff(), l.se_w_phi.maxCoeff());
    return 0;
}

int cmd_stability(const Common& c, bool as_json)
{
    const ExperimentConfig cfg = resolve(c);
    const Prepared p = prepare(cfg);
    const StabilityParams sp = compute_stability_params(p.model, p.split, cfg.epsilon);
    const double u_max = p.def.horizon.u_max;
    if (as_json) {
        nlohmann::json j = {{"zeta", sp.zeta},           {"epsilon", sp.epsilon},
                            {"r", sp.r},                 {"u_max_star", sp.u_max_star},
                            {"u_max", u_max},            {"kappa", sp.kappa},
                            {"sigma_min_R", sp.sigma_min_R}, {"T", sp.T},
                            {"T_prime", sp.bounds.T_prime}, {"rho", sp.bounds.rho},
                            {"rho_m", sp.bounds.rho_m}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("kappa          %d\n", sp.kappa);
        std::printf("sigma_min(R)   %.12g\n", sp.sigma_min_R);
        std::printf("trace bound    %.6g (gain bound %.6g, settles by T'=%d, T=%d)\n", sp.bounds.rho,
                    sp.bounds.rho_m, sp.bounds.T_prime, sp.T);
        std::printf("zeta           %.6g\n", sp.zeta);
        std::printf("epsilon        %.6g\n", sp.epsilon);
        std::printf("drift above    %.6g\n", sp.threshold());
        std::printf("U*max          %.6g\n", sp.u_max_star);
        std::printf("u_max          %.6g (%s)\n", u_max, u_max >= sp.u_max_star ? "sufficient" : "insufficient");
    }
    return 0;
}

int cmd_solve_once(const Common& c, const std::vector<double>& xhat_in, bool soft, const std::string& dump)
{
    ExperimentConfig cfg = resolve(c);
    cfg.sim.use_soft = cfg.sim.use_soft || soft;
    const Prepared p = prepare(cfg);
    if (static_cast<int>(xhat_in.size()) != p.model->n()) {
        throw Error(ErrorKind::DimensionMismatch, "--xhat needs " + std::to_string(p.model->n()) + " entries");
    }
    const Vector xhat = Eigen::Map<const Vector>(xhat_in.data(), static_cast<Eigen::Index>(xhat_in.size()));
    const ControlProblem cp = make_problem(p, cfg, cached_lambdas(p, cfg).lambdas);
    SolveResult res;
    const Matrix& P = cp.ctx.lambdas.P_used;
    if (cfg.sim.use_soft) {
        const LevelBisectionResult bis = level_bisection(cp.ctx, xhat, P);
        std::printf("levels     alpha %.6g, beta %.6g after %d halvings\n", bis.alpha_upper, bis.beta_upper,
                    bis.iterations);
        res = bis.solution;
        if (!dump.empty()) {
            std::ofstream(dump) << program_to_json(build_program(cp.ctx, xhat, P, bis.alpha_upper, bis.beta_upper))
                                       .dump(1)
                                << "\n";
        }
    } else {
        const ConvexProgram prog = build_program(cp.ctx, xhat);
        res = solve(prog, cp.ctx.solve_options);
        if (!dump.empty()) {
            std::ofstream(dump) << program_to_json(prog).dump(1) << "\n";
        }
    }
    std::printf("status     %s (%d iterations)\n", std::string(to_string(res.status)).c_str(), res.iterations);
    if (!res.usable()) {
        return kExitErrorBase + static_cast<int>(ErrorKind::SolveFailed);
    }
    std::printf("objective  %.10g\n", res.objective);
    std::printf("violation  %.3e\n", res.max_violation);
    const Eigen::IOFormat row(Eigen::FullPrecision, Eigen::DontAlignCols, ", ", "\n", "  [", "]");
    std::cout << "eta\n" << res.policy.eta.transpose().format(row) << "\ntheta\n"
              << res.policy.theta.format(row) << "\n";
    return 0;
}

struct SimFlags {
    std::optional<int> paths;
    std::optional<int> t_end;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool soft = false;
    bool allow_low_authority = false;
    bool run_csv = true;
};

int cmd_simulate(const Common& c, const SimFlags& f)
{
    ExperimentConfig cfg = resolve(c);
    if (f.paths) {
        cfg.sim.paths = *f.paths;
    }
    if (f.t_end) {
        cfg.sim.t_end = *f.t_end;
    }
    if (f.seed) {
        cfg.sim.master_seed = *f.seed;
    }
    if (f.threads) {
        cfg.sim.threads = *f.threads;
    }
    cfg.sim.use_soft = cfg.sim.use_soft || f.soft;
    cfg.sim.allow_low_authority = cfg.sim.allow_low_authority || f.allow_low_authority;
    const Prepared p = prepare(cfg);
    const LambdaReport lam = cached_lambdas(p, cfg);
    std::fprintf(stderr, "lambda cache %s (%s)\n", outcome_name(lam.outcome), lam.key.c_str());
    const ControlProblem cp = make_problem(p, cfg, lam.lambdas);
    validate_simulation(cfg.sim, cp.ctx.horizon);

    const BatchResult batch = run_batch(cp, cfg.sim);
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream out(cfg.output_dir / "batch.csv");
        write_batch_csv(out, batch.stats);
    }
    if (f.run_csv) {
        fs::create_directories(cfg.output_dir / "runs");
        for (std::size_t i = 0; i < batch.runs.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "path_%04zu.csv", i);
            std::ofstream out(cfg.output_dir / "runs" / name);
            write_run_csv(out, batch.runs[i], cp);
        }
    }
    const nlohmann::json summary = summary_json(batch.stats, cp, cfg.sim);
    std::ofstream(cfg.output_dir / "summary.json") << summary.dump(2) << "\n";

    const auto& s = batch.stats;
    std::printf("paths %d, steps 0..%d, solves %d (%d inaccurate), failed paths %d\n", s.paths, cfg.sim.t_end,
                s.solves, s.inaccurate_solves, s.failed_paths);
    std::printf("zeta %.6g, U*max %.6g, u_max %.6g, max input excess %.3e\n", cp.ctx.stability.zeta,
                cp.ctx.stability.u_max_star, cp.ctx.horizon.u_max, s.max_input_excess);
    std::printf("final mean |x| %.4g (std %.4g), mean |x|^2 %.4g, average cost %.4g\n", s.mean_norm.back(),
                s.std_norm.back(), s.mean_sq_norm.back(), s.avg_cost.back());
    std::printf("artifacts in %s\n", cfg.output_dir.string().c_str());
    if (s.bound_violations > 0) {
        return kExitBoundViolation;
    }
    return s.failed_paths > 0 ? kExitInfeasiblePaths : 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic receding-horizon control with bounded inputs"};
    app.require_subcommand(1);

    Common common;
    bool as_json = false;
    std::vector<double> xhat;
    bool soft_once = false;
    std::string dump;
    SimFlags sim;

    auto* validate = app.add_subcommand("validate", "Check model assumptions and report kappa and sigma_min");
    add_common(validate, common);

    auto* lambda = app.add_subcommand("lambda", "Estimate and cache the expectation matrices");
    add_common(lambda, common);
    add_lambda_flags(lambda, common);
    lambda->add_flag("--force", common.force, "Recompute and overwrite an existing cache entry");

    auto* stability = app.add_subcommand("stability", "Report zeta and the required input authority");
    add_common(stability, common);
    stability->add_flag("--json", as_json, "Print JSON");

    auto* once = app.add_subcommand("solve-once", "Solve one finite-horizon program");
    add_common(once, common);
    add_lambda_flags(once, common);
    once->add_option("--xhat", xhat, "Filtered state estimate")->required()->delimiter(',');
    once->add_flag("--soft", soft_once, "Run the soft-constraint bisection");
    once->add_option("--dump", dump, "Write the assembled program as JSON");

    auto* simulate = app.add_subcommand("simulate", "Run the closed-loop batch and write CSV/JSON artifacts");
    add_common(simulate, common);
    add_lambda_flags(simulate, common);
    simulate->add_option("-o,--output", common.output, "Output directory");
    simulate->add_option("--paths", sim.paths, "Sample paths")->check(CLI::PositiveNumber);
    simulate->add_option("--t-end", sim.t_end, "Last simulated step")->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
    simulate->add_flag("--soft", sim.soft, "Use the soft-constraint bisection at every solve");
    simulate->add_flag("--allow-low-authority", sim.allow_low_authority, "Run even when u_max < U*max");
    simulate->add_flag("!--no-run-csv", sim.run_csv, "Skip the per-path CSV files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*validate) {
            return cmd_validate(common);
        }
        if (*lambda) {
            return cmd_lambda(common);
        }
        if (*stability) {
            return cmd_stability(common, as_json);
        }
        if (*once) {
            return cmd_solve_once(common, xhat, soft_once, dump);
        }
        return cmd_simulate(common, sim);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitErrorBase + static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
}
