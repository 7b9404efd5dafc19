#include "srhc/optimizer.hpp"
#include "srhc/errors.hpp"
#include "srhc/model_io.hpp"

#include <algorithm>
#include <cmath>

namespace srhc {

VariableMap::VariableMap(int N, int m, int p) : N_(N), m_(m), p_(p)
{
    if (N < 1 || m < 1 || p < 1) {
        throw Error(ErrorKind::DimensionMismatch, "policy dimensions must be positive");
    }
    theta_index_ = Eigen::MatrixXi::Constant(N * m, N * p, -1);
    int next = N * m;
    for (int row = 0; row < N * m; ++row) {
        const int l = row / m;
        for (int col = 0; col < (l + 1) * p; ++col) {
            theta_index_(row, col) = next++;
            theta_entries_.emplace_back(row, col);
        }
    }
}

int VariableMap::add_aux(std::string label)
{
    aux_labels_.push_back(std::move(label));
    return size() - 1;
}

Vector VariableMap::pack(const Policy& policy) const
{
    if (policy.eta.size() != N_ * m_ || policy.theta.rows() != N_ * m_ || policy.theta.cols() != N_ * p_) {
        throw Error(ErrorKind::DimensionMismatch, "policy does not match the variable map");
    }
    Vector z = Vector::Zero(core_size());
    z.head(N_ * m_) = policy.eta;
    for (int k = 0; k < theta_count(); ++k) {
        z(N_ * m_ + k) = policy.theta(theta_entries_[k].first, theta_entries_[k].second);
    }
    return z;
}

Policy VariableMap::unpack(const Vector& z) const
{
    if (z.size() < core_size()) {
        throw Error(ErrorKind::DimensionMismatch, "decision vector is too short");
    }
    Policy pol = Policy::zero(N_, m_, p_);
    pol.eta = z.head(N_ * m_);
    for (int k = 0; k < theta_count(); ++k) {
        pol.theta(theta_entries_[k].first, theta_entries_[k].second) = z(N_ * m_ + k);
    }
    return pol;
}

double QuadraticForm::value(const Vector& z) const
{
    const auto n = H.rows();
    return z.head(n).dot(H * z.head(n)) + f.dot(z.head(n)) + constant;
}

namespace {

double dot_sparse(const std::vector<std::pair<int, double>>& coeffs, const Vector& z)
{
    double v = 0.0;
    for (const auto& [i, a] : coeffs) {
        v += a * z(i);
    }
    return v;
}

std::string entry_label(const char* prefix, int a, int b)
{
    return std::string(prefix) + "[" + std::to_string(a) + "," + std::to_string(b) + "]";
}

}  // namespace

double ConvexProgram::objective_value(const Vector& z) const
{
    return objective.value(z);
}

double ConvexProgram::max_violation(const Vector& z) const
{
    double worst = 0.0;
    for (const auto& c : linear) {
        worst = std::max(worst, dot_sparse(c.coeffs, z) - c.bound);
    }
    const auto core = vars.core_size();
    for (const auto& c : soc) {
        const double lhs = (c.A * z.head(core) + c.b).norm();
        worst = std::max(worst, lhs - dot_sparse(c.c, z) - c.d);
    }
    for (const auto& c : quad) {
        worst = std::max(worst, c.form.value(z) - c.level);
    }
    return worst;
}

QuadraticForm policy_quadratic(const VariableMap& vars, const LambdaSet& lset, const Matrix& M, const Vector& g,
                               const Matrix& R, double constant)
{
    const int Nm = vars.N() * vars.m();
    const int Np = vars.N() * vars.p();
    const int nt = vars.theta_count();
    if (M.rows() != Nm || M.cols() != Nm || g.size() != Nm || R.rows() != Nm || R.cols() != Np ||
        lset.lambda_phi.size() != Np) {
        throw Error(ErrorKind::DimensionMismatch, "quadratic policy form: inconsistent sizes");
    }
    const auto& entries = vars.theta_entries();
    QuadraticForm q;
    q.H = Matrix::Zero(Nm + nt, Nm + nt);
    q.f = Vector::Zero(Nm + nt);
    q.constant = constant;
    q.H.topLeftCorner(Nm, Nm) = M;
    q.f.head(Nm) = g;
    for (int k = 0; k < nt; ++k) {
        const auto [rk, ck] = entries[k];
        const Vector cross = M.col(rk) * lset.lambda_phi(ck);
        q.H.block(0, Nm + k, Nm, 1) = cross;
        q.H.block(Nm + k, 0, 1, Nm) = cross.transpose();
        for (int l = 0; l < nt; ++l) {
            const auto [rl, cl] = entries[l];
            q.H(Nm + k, Nm + l) = M(rk, rl) * lset.lambda_phi_phi(ck, cl);
        }
        q.f(Nm + k) = 2.0 * R(rk, ck);
    }
    return q;
}

QuadraticForm assemble_objective(const VariableMap& vars, const Vector& xhat, const LambdaSet& lset,
                                 const LiftedSystem& L)
{
    const Matrix BtW = L.Ba.transpose() * L.Wxa;
    const Matrix Q1 = BtW * L.Aa;
    const Matrix Q2 = BtW * L.Da;
    const Matrix phi_x = assemble_lambda_phi_x(lset, xhat);
    const Matrix R = Q1 * phi_x.transpose() + Q2 * lset.lambda_w_phi;
    const Matrix second = xhat * xhat.transpose() + lset.P_used;
    const double constant = (L.Aa.transpose() * L.Wxa * L.Aa * second).trace() +
                            (L.Da.transpose() * L.Wxa * L.Da * L.sigma_W).trace();
    return policy_quadratic(vars, lset, L.M1, 2.0 * Q1 * xhat, R, constant);
}

std::vector<LinearConstraint> assemble_input_constraints(VariableMap& vars, double u_max, double phi_max)
{
    std::vector<LinearConstraint> out;
    const int Nm = vars.N() * vars.m();
    const int Np = vars.N() * vars.p();
    for (int row = 0; row < Nm; ++row) {
        std::vector<int> aux;
        for (int col = 0; col < Np; ++col) {
            const int k = vars.theta(row, col);
            if (k < 0) {
                continue;
            }
            const int a = vars.add_aux(entry_label("abs_theta", row, col));
            out.push_back({{{k, 1.0}, {a, -1.0}}, 0.0, "abs_theta"});
            out.push_back({{{k, -1.0}, {a, -1.0}}, 0.0, "abs_theta"});
            aux.push_back(a);
        }
        for (const double sign : {1.0, -1.0}) {
            LinearConstraint c;
            c.coeffs.emplace_back(vars.eta(row), sign);
            for (const int a : aux) {
                c.coeffs.emplace_back(a, phi_max);
            }
            c.bound = u_max;
            c.tag = "input_bound";
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::vector<LinearConstraint> assemble_rate_constraints(VariableMap& vars, double delta_u_max, double phi_max)
{
    std::vector<LinearConstraint> out;
    const int m = vars.m();
    const int Np = vars.N() * vars.p();
    for (int l = 0; l + 1 < vars.N(); ++l) {
        for (int j = 0; j < m; ++j) {
            const int r0 = l * m + j;
            const int r1 = (l + 1) * m + j;
            std::vector<int> aux;
            for (int col = 0; col < Np; ++col) {
                std::vector<std::pair<int, double>> diff;
                if (vars.theta(r0, col) >= 0) {
                    diff.emplace_back(vars.theta(r0, col), 1.0);
                }
                if (vars.theta(r1, col) >= 0) {
                    diff.emplace_back(vars.theta(r1, col), -1.0);
                }
                if (diff.empty()) {
                    continue;
                }
                const int b = vars.add_aux(entry_label("abs_dtheta", r0, col));
                for (const double sign : {1.0, -1.0}) {
                    LinearConstraint c;
                    for (const auto& [i, a] : diff) {
                        c.coeffs.emplace_back(i, sign * a);
                    }
                    c.coeffs.emplace_back(b, -1.0);
                    c.tag = "abs_dtheta";
                    out.push_back(std::move(c));
                }
                aux.push_back(b);
            }
            for (const double sign : {1.0, -1.0}) {
                LinearConstraint c;
                c.coeffs = {{vars.eta(r0), sign}, {vars.eta(r1), -sign}};
                for (const int b : aux) {
                    c.coeffs.emplace_back(b, phi_max);
                }
                c.bound = delta_u_max;
                c.tag = "rate_bound";
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

void assemble_drift_constraint(VariableMap& vars, const DriftConstraintData& data, double phi_max,
                               std::vector<LinearConstraint>& linear, std::vector<SocConstraint>& soc)
{
    const auto n2 = data.R.rows();
    const auto rows = data.R.cols();
    const int Np = vars.N() * vars.p();
    if (rows > vars.N() * vars.m()) {
        throw Error(ErrorKind::DimensionMismatch, "drift constraint spans more rows than the policy");
    }
    const int smax = vars.add_aux("drift_inf_norm");
    for (Eigen::Index a = 0; a < n2; ++a) {
        LinearConstraint row_sum;
        row_sum.tag = "drift_row_sum";
        for (int col = 0; col < Np; ++col) {
            std::vector<std::pair<int, double>> expr;
            for (Eigen::Index i = 0; i < rows; ++i) {
                const int k = vars.theta(static_cast<int>(i), col);
                if (k >= 0 && data.R(a, i) != 0.0) {
                    expr.emplace_back(k, data.R(a, i));
                }
            }
            if (expr.empty()) {
                continue;
            }
            const int d = vars.add_aux(entry_label("abs_rtheta", static_cast<int>(a), col));
            for (const double sign : {1.0, -1.0}) {
                LinearConstraint c;
                for (const auto& [i, v] : expr) {
                    c.coeffs.emplace_back(i, sign * v);
                }
                c.coeffs.emplace_back(d, -1.0);
                c.tag = "abs_rtheta";
                linear.push_back(std::move(c));
            }
            row_sum.coeffs.emplace_back(d, 1.0);
        }
        row_sum.coeffs.emplace_back(smax, -1.0);
        linear.push_back(std::move(row_sum));
    }

    SocConstraint c;
    c.A = Matrix::Zero(n2, vars.core_size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        c.A.col(vars.eta(static_cast<int>(i))) = data.R.col(i);
    }
    c.b = data.offset;
    c.c = {{smax, -data.theta_coeff * phi_max}};
    c.d = data.rhs;
    c.tag = "drift";
    soc.push_back(std::move(c));
}

std::vector<QuadConstraint> assemble_soft_constraints(const VariableMap& vars, const Vector& xhat, const Matrix& P,
                                                      const LambdaSet& lset, const LiftedSystem& L,
                                                      const SoftConstraintSpec& spec, double alpha, double beta)
{
    const auto nx = L.Aa.rows();
    if (spec.S.rows() != nx || spec.S.cols() != nx || spec.L.size() != nx || spec.S_tilde.rows() != L.Ba.cols() ||
        spec.S_tilde.cols() != L.Ba.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "soft constraint weights do not match the lifted system");
    }
    const Matrix BtS = L.Ba.transpose() * spec.S;
    const Matrix M = linalg::symmetrize(BtS * L.Ba);
    const Vector BtL = L.Ba.transpose() * spec.L;
    const Vector g = 2.0 * BtS * L.Aa * xhat + BtL;
    const Matrix phi_x = assemble_lambda_phi_x(lset, xhat);
    const Matrix R = BtS * L.Aa * phi_x.transpose() + BtS * L.Da * lset.lambda_w_phi +
                     0.5 * BtL * lset.lambda_phi.transpose();
    const Matrix second = xhat * xhat.transpose() + P;
    const double constant = (L.Aa.transpose() * spec.S * L.Aa * second).trace() +
                            (L.Da.transpose() * spec.S * L.Da * L.sigma_W).trace() + spec.L.dot(L.Aa * xhat);

    std::vector<QuadConstraint> out;
    out.push_back({policy_quadratic(vars, lset, M, g, R, constant), alpha, "state_soft"});
    const int Nm = vars.N() * vars.m();
    const int Np = vars.N() * vars.p();
    out.push_back({policy_quadratic(vars, lset, linalg::symmetrize(spec.S_tilde), Vector::Zero(Nm),
                                    Matrix::Zero(Nm, Np), 0.0),
                   beta, "input_soft"});
    return out;
}

AlphaBeta compute_alpha_beta_star(const Vector& xhat, const Matrix& P, const LiftedSystem& L,
                                  const SoftConstraintSpec& spec, double u_max)
{
    const double Nm = static_cast<double>(L.Ba.cols());
    const Matrix second = xhat * xhat.transpose() + P;
    const double trace_term = (L.Aa.transpose() * spec.S * L.Aa * second).trace() +
                              (L.Da.transpose() * spec.S * L.Da * L.sigma_W).trace();
    const Matrix BtSB = L.Ba.transpose() * spec.S * L.Ba;
    AlphaBeta ab;
    ab.alpha_star = 3.0 * trace_term + 3.0 * Nm * linalg::spectral_norm(BtSB) * u_max * u_max +
                    spec.L.dot(L.Aa * xhat) + (L.Ba.transpose() * spec.L).cwiseAbs().sum() * u_max;
    ab.beta_star = Nm * linalg::spectral_norm(spec.S_tilde) * u_max * u_max;
    if (!(ab.alpha_star > 0.0) || !(ab.beta_star > 0.0)) {
        throw Error(ErrorKind::DegenerateSpec, "soft constraint levels alpha* and beta* must be positive");
    }
    return ab;
}

std::string_view to_string(SolveStatus status) noexcept
{
    switch (status) {
    case SolveStatus::Optimal:
        return "optimal";
    case SolveStatus::Inaccurate:
        return "inaccurate";
    case SolveStatus::Infeasible:
        return "infeasible";
    case SolveStatus::NumericalFailure:
        return "numerical_failure";
    }
    return "unknown";
}

ConeProblem to_cone_problem(const ConvexProgram& prog, double regularization)
{
    const int nz = prog.vars.size();
    const int core = prog.vars.core_size();

    ConeProblem cp;
    cp.P = Matrix::Zero(nz, nz);
    cp.P.topLeftCorner(core, core) = 2.0 * prog.objective.H;
    cp.P.diagonal().array() += 2.0 * regularization;
    cp.q = Vector::Zero(nz);
    cp.q.head(core) = prog.objective.f;

    // Quadratic constraints become cones; factor them first to know the row count.
    struct QuadCone {
        Matrix F;
        const QuadConstraint* c;
    };
    std::vector<QuadCone> qcones;
    for (const auto& c : prog.quad) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(c.form.H));
        const Vector ev = es.eigenvalues();
        const double cutoff = linalg::kRankTol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev(i) > cutoff) {
                keep.push_back(i);
            }
        }
        Matrix F(static_cast<Eigen::Index>(keep.size()), core);
        for (std::size_t r = 0; r < keep.size(); ++r) {
            F.row(static_cast<Eigen::Index>(r)) = std::sqrt(ev(keep[r])) * es.eigenvectors().col(keep[r]).transpose();
        }
        qcones.push_back({std::move(F), &c});
    }

    cp.dims.linear = static_cast<int>(prog.linear.size());
    for (const auto& c : prog.soc) {
        cp.dims.soc.push_back(static_cast<int>(c.A.rows()) + 1);
    }
    for (const auto& q : qcones) {
        cp.dims.soc.push_back(static_cast<int>(q.F.rows()) + 2);
    }
    const int rows = cp.dims.rows();
    cp.h = Vector::Zero(rows);
    std::vector<Eigen::Triplet<double>> trip;

    int r = 0;
    for (const auto& c : prog.linear) {
        for (const auto& [i, a] : c.coeffs) {
            trip.emplace_back(r, i, a);
        }
        cp.h(r) = c.bound;
        ++r;
    }
    auto dense_row = [&](int row, const Eigen::Ref<const Vector>& coeffs, double scale) {
        for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
            if (coeffs(j) != 0.0) {
                trip.emplace_back(row, static_cast<int>(j), scale * coeffs(j));
            }
        }
    };
    for (const auto& c : prog.soc) {
        for (const auto& [i, a] : c.c) {
            trip.emplace_back(r, i, -a);
        }
        cp.h(r) = c.d;
        ++r;
        for (Eigen::Index k = 0; k < c.A.rows(); ++k) {
            dense_row(r, c.A.row(k).transpose(), -1.0);
            cp.h(r) = c.b(k);
            ++r;
        }
    }
    for (const auto& q : qcones) {
        const QuadraticForm& form = q.c->form;
        const double slack = q.c->level - form.constant;
        const double k = std::max(1.0, std::abs(slack));
        dense_row(r, form.f, 1.0);
        cp.h(r) = k + slack;
        ++r;
        for (Eigen::Index i = 0; i < q.F.rows(); ++i) {
            dense_row(r, q.F.row(i).transpose(), -2.0 * std::sqrt(k));
            ++r;
        }
        dense_row(r, form.f, -1.0);
        cp.h(r) = k - slack;
        ++r;
    }
    cp.G.resize(rows, nz);
    cp.G.setFromTriplets(trip.begin(), trip.end());
    return cp;
}

SolveResult solve(const ConvexProgram& program, const SolveOptions& options)
{
    const ConeProblem cp = to_cone_problem(program, options.regularization);
    const ConeSolution cs = solve_cone_program(cp, options.cone);

    SolveResult res;
    res.iterations = cs.iterations;
    switch (cs.status) {
    case ConeStatus::Optimal:
        res.status = SolveStatus::Optimal;
        break;
    case ConeStatus::Inaccurate:
        res.status = SolveStatus::Inaccurate;
        break;
    case ConeStatus::Infeasible:
        res.status = SolveStatus::Infeasible;
        break;
    case ConeStatus::NumericalFailure:
        res.status = SolveStatus::NumericalFailure;
        break;
    }
    if (cs.x.size() != program.vars.size() || !cs.x.allFinite()) {
        res.status = res.usable() ? SolveStatus::NumericalFailure : res.status;
        res.policy = Policy::zero(program.vars.N(), program.vars.m(), program.vars.p());
        return res;
    }
    res.z = cs.x;
    res.policy = program.vars.unpack(res.z);
    if (program.hard_bound) {
        res.policy.clamp_to_bound(program.hard_bound->first, program.hard_bound->second);
    }
    res.objective = program.objective_value(res.z);
    res.max_violation = program.max_violation(res.z);
    return res;
}

namespace {

nlohmann::json upper_triangle(const Matrix& H)
{
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        for (Eigen::Index j = i; j < H.cols(); ++j) {
            out.push_back(H(i, j));
        }
    }
    return out;
}

nlohmann::json sparse_to_json(const std::vector<std::pair<int, double>>& coeffs)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [i, a] : coeffs) {
        out.push_back({i, a});
    }
    return out;
}

}  // namespace

nlohmann::json program_to_json(const ConvexProgram& prog)
{
    nlohmann::json j;
    const VariableMap& v = prog.vars;
    nlohmann::json theta = nlohmann::json::array();
    for (const auto& [r, c] : v.theta_entries()) {
        theta.push_back({r, c});
    }
    j["variables"] = {{"N", v.N()},
                      {"m", v.m()},
                      {"p", v.p()},
                      {"size", v.size()},
                      {"eta_count", v.N() * v.m()},
                      {"theta_entries", theta},
                      {"aux", v.aux_labels()}};
    j["objective"] = {{"dimension", prog.objective.H.rows()},
                      {"H_upper", upper_triangle(prog.objective.H)},
                      {"f", vector_to_json(prog.objective.f)},
                      {"constant", prog.objective.constant}};
    nlohmann::json lin = nlohmann::json::array();
    for (const auto& c : prog.linear) {
        lin.push_back({{"coeffs", sparse_to_json(c.coeffs)}, {"bound", c.bound}, {"tag", c.tag}});
    }
    j["linear"] = lin;
    nlohmann::json soc = nlohmann::json::array();
    for (const auto& c : prog.soc) {
        soc.push_back({{"A", matrix_to_json(c.A)},
                       {"b", vector_to_json(c.b)},
                       {"c", sparse_to_json(c.c)},
                       {"d", c.d},
                       {"tag", c.tag}});
    }
    j["soc"] = soc;
    nlohmann::json quad = nlohmann::json::array();
    for (const auto& c : prog.quad) {
        quad.push_back({{"H_upper", upper_triangle(c.form.H)},
                        {"f", vector_to_json(c.form.f)},
                        {"constant", c.form.constant},
                        {"level", c.level},
                        {"tag", c.tag}});
    }
    j["quad"] = quad;
    if (prog.hard_bound) {
        j["hard_bound"] = {{"u_max", prog.hard_bound->first}, {"phi_max", prog.hard_bound->second}};
    }
    return j;
}

ConvexProgram build_program(const OptimizerContext& ctx, const Vector& xhat)
{
    const HorizonConfig& h = ctx.horizon;
    const LiftedSystem& L = ctx.lifted;
    if (xhat.size() != L.n) {
        throw Error(ErrorKind::DimensionMismatch, "xhat has wrong length");
    }
    ConvexProgram prog;
    VariableMap vars(L.N, L.m, L.p);
    prog.objective = assemble_objective(vars, xhat, ctx.lambdas, L);
    prog.linear = assemble_input_constraints(vars, h.u_max, h.phi_max);
    prog.hard_bound = std::make_pair(h.u_max, h.phi_max);
    if (ctx.rate_limit) {
        auto rate = assemble_rate_constraints(vars, *ctx.rate_limit, h.phi_max);
        prog.linear.insert(prog.linear.end(), rate.begin(), rate.end());
    }
    if (ctx.split.n2 > 0) {
        const Vector xhat2 = xhat.tail(ctx.split.n2);
        if (const auto drift = drift_constraint_data(xhat2, ctx.stability, ctx.split, L.N, L.m)) {
            assemble_drift_constraint(vars, *drift, h.phi_max, prog.linear, prog.soc);
        }
    }
    prog.vars = std::move(vars);
    return prog;
}

ConvexProgram build_program(const OptimizerContext& ctx, const Vector& xhat, const Matrix& P, double alpha,
                            double beta)
{
    if (!ctx.soft) {
        throw Error(ErrorKind::DegenerateSpec, "soft constraints requested without a specification");
    }
    ConvexProgram prog = build_program(ctx, xhat);
    prog.quad = assemble_soft_constraints(prog.vars, xhat, P, ctx.lambdas, ctx.lifted, *ctx.soft, alpha, beta);
    return prog;
}

LevelBisectionResult run_level_bisection(const std::function<SolveResult(double, double)>& solve_at,
                                         double alpha_star, double beta_star, const SoftConstraintSpec& spec)
{
    LevelBisectionResult res;
    res.alpha_upper = alpha_star;
    res.beta_upper = beta_star;
    res.alpha_lower = spec.alpha_floor.value_or(0.0);
    res.beta_lower = spec.beta_floor.value_or(0.0);

    res.solution = solve_at(res.alpha_upper, res.beta_upper);
    res.trace.push_back({res.alpha_upper, res.beta_upper, res.solution.usable()});
    if (!res.solution.usable()) {
        throw Error(ErrorKind::InitialInfeasible, "soft-constrained program is infeasible at the upper levels");
    }
    int nu = 1;
    do {
        const double alpha = 0.5 * (res.alpha_upper + res.alpha_lower);
        const double beta = 0.5 * (res.beta_upper + res.beta_lower);
        SolveResult trial = solve_at(alpha, beta);
        const bool ok = trial.usable();
        res.trace.push_back({alpha, beta, ok});
        if (ok) {
            res.alpha_upper = alpha;
            res.beta_upper = beta;
            res.solution = std::move(trial);
        } else {
            res.alpha_lower = alpha;
            res.beta_lower = beta;
        }
        ++nu;
        ++res.iterations;
    } while (!((std::abs(res.alpha_upper - res.alpha_lower) <= spec.delta &&
                std::abs(res.beta_upper - res.beta_lower) <= spec.delta) ||
               nu > spec.nu_bar));
    return res;
}

LevelBisectionResult level_bisection(const OptimizerContext& ctx, const Vector& xhat, const Matrix& P)
{
    if (!ctx.soft) {
        throw Error(ErrorKind::DegenerateSpec, "soft constraints requested without a specification");
    }
    const AlphaBeta star = compute_alpha_beta_star(xhat, P, ctx.lifted, *ctx.soft, ctx.horizon.u_max);
    return run_level_bisection(
        [&](double alpha, double beta) { return solve(build_program(ctx, xhat, P, alpha, beta), ctx.solve_options); },
        star.alpha_star, star.beta_star, *ctx.soft);
}

}  // namespace srhc
