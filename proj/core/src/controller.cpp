#include "srhc/controller.hpp"
#include "srhc/errors.hpp"
#include "srhc/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace srhc {

ControlProblem make_control_problem(const ValidatedModel& model, const JordanSplit& split,
                                    const HorizonConfig& horizon, const CostWeights& weights,
                                    const SaturationFunction& sat, LambdaSet lambdas, double epsilon)
{
    validate_horizon(horizon, split.kappa);
    validate_weights(weights, model->n(), model->m(), horizon.N);
    if (lambdas.N != horizon.N || lambdas.n != model->n() || lambdas.p != model->p()) {
        throw Error(ErrorKind::DimensionMismatch, "lambda set does not match the model and horizon");
    }
    if (std::abs(sat.phi_max() - horizon.phi_max) > 1e-12 * std::max(1.0, horizon.phi_max)) {
        throw Error(ErrorKind::DimensionMismatch, "saturation bound differs from the horizon phi_max");
    }
    ControlProblem cp;
    cp.model = model.model();
    cp.weights = weights;
    cp.sat = sat;
    const RiccatiSolution ric = riccati_limit(cp.model);
    cp.ctx.lifted = build_lifted(model, weights, horizon.N);
    cp.ctx.split = split;
    cp.ctx.horizon = horizon;
    cp.ctx.stability = compute_stability_params(model, split, epsilon, ric);
    cp.ctx.lambdas = std::move(lambdas);
    return cp;
}

LambdaSet steady_state_lambdas(const SystemModel& model, int N, const SaturationFunction& sat, std::int64_t count,
                               std::uint64_t seed)
{
    const RiccatiSolution ric = riccati_limit(model);
    return estimate_lambdas(ric.P_circ, model, ric, N, sat, count, seed);
}

void validate_simulation(const SimulationConfig& sim, const HorizonConfig& horizon)
{
    if (sim.paths < 1) {
        throw Error(ErrorKind::InvalidHorizon, "paths must be at least 1");
    }
    if (sim.t_end < horizon.Nc) {
        throw Error(ErrorKind::InvalidHorizon, "t_end must be at least the control horizon");
    }
}

PolicyProvider optimizing_provider(const ControlProblem& problem, bool use_soft)
{
    return [&problem, use_soft](int /*t*/, const FilterState& state) {
        PolicyDecision d;
        if (use_soft) {
            LevelBisectionResult r = level_bisection(problem.ctx, state.xhat_filt, state.P_filt);
            d.policy = std::move(r.solution.policy);
            d.status = r.solution.status;
            d.bisection_steps = r.iterations;
        } else {
            SolveResult r = solve(build_program(problem.ctx, state.xhat_filt), problem.ctx.solve_options);
            d.policy = std::move(r.policy);
            d.status = r.status;
        }
        return d;
    };
}

PathStreams path_streams(std::uint64_t master_seed, int path)
{
    const std::uint64_t base = derive_seed(master_seed, static_cast<std::uint64_t>(path), 0x9a7b);
    return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3)};
}

namespace {

std::uint64_t config_hash(const ControlProblem& problem, const SimulationConfig& sim)
{
    std::uint64_t h = linalg::hash_matrix(problem.model.A);
    h = linalg::hash_matrix(problem.model.B, h);
    h = linalg::hash_matrix(problem.model.C, h);
    h = linalg::hash_matrix(problem.model.sigma_w, h);
    h = linalg::hash_matrix(problem.model.sigma_v, h);
    const HorizonConfig& hz = problem.ctx.horizon;
    char buf[256];
    const int len = std::snprintf(buf, sizeof buf, "%d|%d|%.17g|%.17g|%d|%d|%llu|%s", hz.N, hz.Nc, hz.u_max,
                                  hz.phi_max, sim.t_end, sim.use_soft ? 1 : 0,
                                  static_cast<unsigned long long>(sim.master_seed), problem.sat.describe().c_str());
    const auto n = static_cast<std::size_t>(std::clamp(len, 0, static_cast<int>(sizeof buf) - 1));
    return linalg::hash_bytes({reinterpret_cast<const unsigned char*>(buf), n}, h);
}

}  // namespace

TrajectoryRecord run_receding_horizon(const ControlProblem& problem, const SimulationConfig& sim, int path,
                                      const PolicyProvider& provider)
{
    const SystemModel& model = problem.model;
    const HorizonConfig& hz = problem.ctx.horizon;
    validate_simulation(sim, hz);
    const auto& stab = problem.ctx.stability;
    if (stab.n2 > 0 && hz.u_max < stab.u_max_star && !sim.allow_low_authority) {
        throw Error(ErrorKind::InvalidHorizon, "u_max is below the minimum control authority U*max");
    }

    const PathStreams streams = path_streams(sim.master_seed, path);
    GaussianStream x0_stream(streams.x0_seed);
    GaussianStream w_stream(streams.w_seed);
    GaussianStream v_stream(streams.v_seed);
    const Matrix w_factor = linalg::psd_factor(model.sigma_w);
    const Matrix v_factor = linalg::psd_factor(model.sigma_v);

    TrajectoryRecord rec;
    rec.seed = sim.master_seed;
    rec.config_hash = config_hash(problem, sim);

    Vector x = sim.x0 ? *sim.x0 : Vector(model.xhat0 + x0_stream.correlated(linalg::psd_factor(model.sigma_x0)));
    if (x.size() != model.n()) {
        throw Error(ErrorKind::DimensionMismatch, "initial state has wrong length");
    }
    FilterState fs = initial_filter_state(model);
    const Matrix& Wx = problem.weights.Wx.front();
    const Matrix& Wu = problem.weights.Wu.front();

    Policy policy;
    std::vector<Vector> block_residuals;
    for (int t = 0; t <= sim.t_end; ++t) {
        const Vector v = v_stream.correlated(v_factor);
        const Vector w = w_stream.correlated(w_factor);
        const Vector y = model.C * x + v;
        const Vector prior_mean = fs.xhat_pred;
        fs = measurement_update(fs, y, model);

        const int i = t % hz.Nc;
        if (i == 0) {
            PolicyDecision d = provider(t, fs);
            ++rec.solves;
            rec.bisection_steps += d.bisection_steps;
            if (d.status == SolveStatus::Inaccurate) {
                ++rec.inaccurate_solves;
            }
            if (d.status != SolveStatus::Optimal && d.status != SolveStatus::Inaccurate) {
                rec.failed_at = t;
                rec.failure = std::string("solve failed: ") + std::string(to_string(d.status));
                return rec;
            }
            policy = std::move(d.policy);
            block_residuals.clear();
        }
        const Vector residual = y - model.C * fs.xhat_filt;
        block_residuals.push_back(residual);
        const Vector u = apply_policy(policy, block_residuals, i, problem.sat);

        rec.x.push_back(x);
        rec.y.push_back(y);
        rec.u.push_back(u);
        rec.xhat.push_back(fs.xhat_filt);
        rec.trace_P.push_back(fs.P_filt.trace());
        rec.innovation.push_back(y - model.C * prior_mean);
        rec.residual.push_back(residual);
        rec.stage_cost.push_back(x.dot(Wx * x) + u.dot(Wu * u));

        x = model.A * x + model.B * u + w;
        fs = time_update(fs, u, model);
    }
    return rec;
}

TrajectoryRecord run_receding_horizon(const ControlProblem& problem, const SimulationConfig& sim, int path)
{
    return run_receding_horizon(problem, sim, path, optimizing_provider(problem, sim.use_soft));
}

DriftStats drift_statistics(const std::vector<TrajectoryRecord>& runs, int n2, int kappa, double threshold)
{
    DriftStats ds;
    if (n2 == 0 || kappa < 1) {
        return ds;
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& run : runs) {
        const int len = static_cast<int>(run.xhat.size());
        for (int t = 0; t + kappa < len; t += kappa) {
            const double now = run.xhat[t].tail(n2).norm();
            if (now <= threshold) {
                continue;
            }
            const double d = run.xhat[t + kappa].tail(n2).norm() - now;
            sum += d;
            sum_sq += d * d;
            ++ds.samples;
        }
    }
    if (ds.samples > 0) {
        const auto n = static_cast<double>(ds.samples);
        ds.mean = sum / n;
        if (ds.samples > 1) {
            const double var = std::max(0.0, (sum_sq - n * ds.mean * ds.mean) / (n - 1.0));
            ds.std_error = std::sqrt(var / n);
        }
    }
    return ds;
}

SlopeStats mean_square_slope(const std::vector<TrajectoryRecord>& runs, int t_from, int t_to)
{
    SlopeStats ss;
    ss.t_from = t_from;
    ss.t_to = t_to;
    std::vector<double> slopes;
    for (const auto& run : runs) {
        const int hi = std::min(t_to, static_cast<int>(run.x.size()) - 1);
        if (hi - t_from < 1) {
            continue;
        }
        const double t_bar = 0.5 * (t_from + hi);
        double sxx = 0.0;
        double sxy = 0.0;
        for (int t = t_from; t <= hi; ++t) {
            const double dt = t - t_bar;
            sxx += dt * dt;
            sxy += dt * run.x[t].squaredNorm();
        }
        slopes.push_back(sxy / sxx);
    }
    if (slopes.empty()) {
        return ss;
    }
    const double n = static_cast<double>(slopes.size());
    double mean = 0.0;
    for (double s : slopes) {
        mean += s;
    }
    mean /= n;
    ss.slope = mean;
    if (slopes.size() > 1) {
        double var = 0.0;
        for (double s : slopes) {
            var += (s - mean) * (s - mean);
        }
        var /= n - 1.0;
        ss.std_error = std::sqrt(var / n);
    }
    return ss;
}

BatchStats aggregate(const std::vector<TrajectoryRecord>& runs, const ControlProblem& problem)
{
    BatchStats st;
    st.paths = static_cast<int>(runs.size());
    std::size_t len = 0;
    for (const auto& run : runs) {
        len = std::max(len, run.x.size());
        st.solves += run.solves;
        st.inaccurate_solves += run.inaccurate_solves;
        if (run.failed_at) {
            ++st.failed_paths;
        }
    }
    st.mean_norm.assign(len, 0.0);
    st.std_norm.assign(len, 0.0);
    st.mean_sq_norm.assign(len, 0.0);
    st.avg_cost.assign(len, 0.0);
    const double u_max = problem.ctx.horizon.u_max;
    st.max_input_excess = -u_max;
    for (std::size_t t = 0; t < len; ++t) {
        double s = 0.0;
        double s2 = 0.0;
        int k = 0;
        for (const auto& run : runs) {
            if (t >= run.x.size()) {
                continue;
            }
            const double nx = run.x[t].norm();
            s += nx;
            s2 += nx * nx;
            ++k;
        }
        if (k == 0) {
            continue;
        }
        const double mean = s / k;
        st.mean_norm[t] = mean;
        st.mean_sq_norm[t] = s2 / k;
        st.std_norm[t] = k > 1 ? std::sqrt(std::max(0.0, (s2 - k * mean * mean) / (k - 1))) : 0.0;
    }
    for (const auto& run : runs) {
        double running = 0.0;
        for (std::size_t t = 0; t < run.stage_cost.size(); ++t) {
            running += run.stage_cost[t];
            st.avg_cost[t] += running / static_cast<double>(t + 1);
        }
        for (const auto& u : run.u) {
            const double excess = u.lpNorm<Eigen::Infinity>() - u_max;
            st.max_input_excess = std::max(st.max_input_excess, excess);
            if (excess > 1e-8) {
                ++st.bound_violations;
            }
        }
    }
    for (std::size_t t = 0; t < len; ++t) {
        int k = 0;
        for (const auto& run : runs) {
            k += t < run.stage_cost.size() ? 1 : 0;
        }
        st.avg_cost[t] = k > 0 ? st.avg_cost[t] / k : 0.0;
    }
    const auto& stab = problem.ctx.stability;
    st.drift = drift_statistics(runs, stab.n2, stab.kappa, stab.threshold());
    const int t_end = static_cast<int>(len) - 1;
    st.second_half_slope = mean_square_slope(runs, t_end / 2, t_end);
    return st;
}

BatchResult run_batch(const ControlProblem& problem, const SimulationConfig& sim)
{
    validate_simulation(sim, problem.ctx.horizon);
    BatchResult out;
    out.runs.resize(static_cast<std::size_t>(sim.paths));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(sim.paths));

    int workers = sim.threads > 0 ? sim.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, sim.paths);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int p = next++; p < sim.paths; p = next++) {
            try {
                out.runs[static_cast<std::size_t>(p)] = run_receding_horizon(problem, sim, p);
            } catch (...) {
                errors[static_cast<std::size_t>(p)] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < workers; ++k) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (int p = 0; p < sim.paths; ++p) {
        if (!errors[static_cast<std::size_t>(p)]) {
            continue;
        }
        try {
            std::rethrow_exception(errors[static_cast<std::size_t>(p)]);
        } catch (const Error& e) {
            throw Error(e.kind(), "path " + std::to_string(p) + ": " + e.what());
        }
    }
    out.stats = aggregate(out.runs, problem);
    return out;
}

namespace {

void put(std::ostream& out, double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << buf;
}

}  // namespace

void write_run_csv(std::ostream& out, const TrajectoryRecord& run, const ControlProblem& problem)
{
    const int m = problem.model.m();
    const int n2 = problem.ctx.split.n2;
    out << "t,norm_x,norm_xhat2";
    for (int j = 1; j <= m; ++j) {
        out << ",u_" << j;
    }
    out << ",stage_cost,innov_norm\n";
    for (int t = 0; t < run.steps(); ++t) {
        out << t << ',';
        put(out, run.x[t].norm());
        out << ',';
        put(out, n2 > 0 ? run.xhat[t].tail(n2).norm() : 0.0);
        for (int j = 0; j < m; ++j) {
            out << ',';
            put(out, run.u[t](j));
        }
        out << ',';
        put(out, run.stage_cost[t]);
        out << ',';
        put(out, run.innovation[t].norm());
        out << '\n';
    }
}

void write_batch_csv(std::ostream& out, const BatchStats& stats)
{
    out << "t,mean_norm,std_norm,mean_sq_norm,avg_cost\n";
    for (std::size_t t = 0; t < stats.mean_norm.size(); ++t) {
        out << t << ',';
        put(out, stats.mean_norm[t]);
        out << ',';
        put(out, stats.std_norm[t]);
        out << ',';
        put(out, stats.mean_sq_norm[t]);
        out << ',';
        put(out, stats.avg_cost[t]);
        out << '\n';
    }
}

nlohmann::json summary_json(const BatchStats& stats, const ControlProblem& problem, const SimulationConfig& sim)
{
    const auto& stab = problem.ctx.stability;
    const auto& hz = problem.ctx.horizon;
    nlohmann::json j;
    j["zeta"] = stab.zeta;
    j["epsilon"] = stab.epsilon;
    j["u_max_star"] = stab.u_max_star;
    j["u_max"] = hz.u_max;
    j["kappa"] = stab.kappa;
    j["sigma_min_R"] = stab.sigma_min_R;
    j["horizon"] = {{"N", hz.N}, {"Nc", hz.Nc}, {"phi_max", hz.phi_max}};
    j["saturation"] = problem.sat.describe();
    j["simulation"] = {{"t_end", sim.t_end},
                       {"paths", sim.paths},
                       {"master_seed", sim.master_seed},
                       {"use_soft", sim.use_soft}};
    j["solves"] = stats.solves;
    j["inaccurate_solves"] = stats.inaccurate_solves;
    j["infeasible_paths"] = stats.failed_paths;
    j["bound_violations"] = stats.bound_violations;
    j["max_input_excess"] = stats.max_input_excess;
    j["drift"] = {{"samples", stats.drift.samples},
                  {"mean", stats.drift.mean},
                  {"std_error", stats.drift.std_error},
                  {"threshold", stab.threshold()}};
    j["mean_square_slope"] = {{"t_from", stats.second_half_slope.t_from},
                              {"t_to", stats.second_half_slope.t_to},
                              {"slope", stats.second_half_slope.slope},
                              {"std_error", stats.second_half_slope.std_error}};
    return j;
}

}  // namespace srhc
