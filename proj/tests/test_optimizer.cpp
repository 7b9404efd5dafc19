#include "srhc/controller.hpp"
#include "srhc/errors.hpp"
#include "srhc/optimizer.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace srhc;
using srhc::testing::random_matrix;
using srhc::testing::random_spd;
using srhc::testing::random_vector;
using srhc::testing::rotation_plant;

namespace {

Policy random_causal_policy(int N, int m, int p, std::mt19937_64& rng, double scale = 1.0)
{
    Policy pol = Policy::zero(N, m, p);
    pol.eta = scale * random_vector(N * m, rng);
    pol.theta = scale * random_matrix(N * m, N * p, rng);
    for (int l = 0; l < N; ++l) {
        pol.theta.block(l * m, (l + 1) * p, m, (N - l - 1) * p).setZero();
    }
    return pol;
}

LambdaSet random_lambdas(int N, int n, int p, std::mt19937_64& rng)
{
    LambdaSet l;
    l.N = N;
    l.n = n;
    l.p = p;
    l.lambda_phi = random_vector(N * p, rng);
    l.lambda_phi_e = random_matrix(N * p, n, rng);
    l.lambda_phi_x = l.lambda_phi_e;
    l.lambda_w_phi = random_matrix(N * n, N * p, rng);
    l.lambda_phi_phi = random_spd(N * p, rng);
    l.P_used = random_spd(n, rng);
    return l;
}

/// z with every auxiliary at the smallest value its defining rows allow.
Vector tight_point(const ConvexProgram& prog, const Policy& pol)
{
    Vector z = Vector::Zero(prog.vars.size());
    z.head(prog.vars.core_size()) = prog.vars.pack(pol);
    // Auxiliaries appear in "expr - aux <= 0" rows; raising each to the max over
    // its rows is enough because aggregate rows come after the rows they bound.
    for (int pass = 0; pass < 3; ++pass) {
        for (const auto& c : prog.linear) {
            int aux = -1;
            double rest = 0.0;
            for (const auto& [i, a] : c.coeffs) {
                if (i >= prog.vars.core_size() && a == -1.0 && c.bound == 0.0 && aux < 0) {
                    aux = i;
                } else {
                    rest += a * z(i);
                }
            }
            if (aux >= 0) {
                z(aux) = std::max(z(aux), rest);
            }
        }
    }
    return z;
}

struct Rotation {
    ValidatedModel vm = validate_model(rotation_plant());
    JordanSplit split = validate_split(vm, 1, 2, 2);
    SaturationFunction sat = SaturationFunction::clip(1.0);
    ControlProblem cp = make_control_problem(vm, split, srhc::testing::rotation_horizon(),
                                             srhc::testing::rotation_weights(), sat,
                                             steady_state_lambdas(vm.model(), 5, sat, 20000, 3), 10.0);
};

}  // namespace

TEST(VariableMap, PackUnpackRoundTrip)
{
    std::mt19937_64 rng(1);
    VariableMap vars(3, 2, 2);
    EXPECT_EQ(vars.theta_count(), 2 * 2 * (1 + 2 + 3));
    EXPECT_EQ(vars.theta(0, 2), -1);
    EXPECT_GE(vars.theta(2, 1), 0);
    const Policy pol = random_causal_policy(3, 2, 2, rng);
    const Policy back = vars.unpack(vars.pack(pol));
    EXPECT_EQ(back.eta, pol.eta);
    EXPECT_EQ(back.theta, pol.theta);
}

TEST(PolicyQuadratic, MatchesDirectTraceExpression)
{
    std::mt19937_64 rng(2);
    const int N = 3, m = 2, n = 2, p = 2;
    VariableMap vars(N, m, p);
    const LambdaSet lset = random_lambdas(N, n, p, rng);
    const Matrix M = random_spd(N * m, rng);
    const Vector g = random_vector(N * m, rng);
    const Matrix R = random_matrix(N * m, N * p, rng);
    const QuadraticForm q = policy_quadratic(vars, lset, M, g, R, 1.5);
    for (int rep = 0; rep < 10; ++rep) {
        const Policy pol = random_causal_policy(N, m, p, rng);
        const Vector& eta = pol.eta;
        const Matrix& T = pol.theta;
        const double direct = eta.dot(M * eta) + 2.0 * eta.dot(M * T * lset.lambda_phi) +
                              (T.transpose() * M * T * lset.lambda_phi_phi).trace() + g.dot(eta) +
                              2.0 * (T.transpose() * R).trace() + 1.5;
        EXPECT_NEAR(q.value(vars.pack(pol)), direct, 1e-9 * (1.0 + std::abs(direct)));
    }
}

TEST(Objective, OpenLoopPartMatchesClosedForm)
{
    Rotation r;
    const auto& L = r.cp.ctx.lifted;
    std::mt19937_64 rng(3);
    const Vector xhat = 10.0 * random_vector(3, rng);
    VariableMap vars(5, 1, 3);
    const QuadraticForm obj = assemble_objective(vars, xhat, r.cp.ctx.lambdas, L);
    Policy pol = Policy::zero(5, 1, 3);
    pol.eta = random_vector(5, rng);
    // With Theta = 0: E[(Aa x + Ba eta + Da W)^T Wxa (.)] + eta^T Wua eta, x ~ N(xhat, P).
    const Vector mean = L.Aa * xhat + L.Ba * pol.eta;
    const double expected = mean.dot(L.Wxa * mean) + pol.eta.dot(L.Wua * pol.eta) +
                            (L.Aa.transpose() * L.Wxa * L.Aa * r.cp.ctx.lambdas.P_used).trace() +
                            (L.Da.transpose() * L.Wxa * L.Da * L.sigma_W).trace();
    EXPECT_NEAR(obj.value(vars.pack(pol)), expected, 1e-9 * expected);
}

TEST(Constraints, InputRowsAgreeWithPolicyCertificate)
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        ConvexProgram prog;
        VariableMap vars(3, 2, 2);
        prog.linear = assemble_input_constraints(vars, 4.0, 1.5);
        prog.vars = vars;
        const Policy pol = random_causal_policy(3, 2, 2, rng, 0.8);
        const Vector z = tight_point(prog, pol);
        EXPECT_NEAR(prog.max_violation(z), std::max(0.0, pol.bound_excess(4.0, 1.5)), 1e-12);
    }
}

TEST(Constraints, RateRowsBoundStepToStepChange)
{
    std::mt19937_64 rng(5);
    const int N = 3, m = 1, p = 2;
    ConvexProgram prog;
    VariableMap vars(N, m, p);
    prog.linear = assemble_rate_constraints(vars, 2.0, 1.0);
    prog.vars = vars;
    for (int rep = 0; rep < 20; ++rep) {
        const Policy pol = random_causal_policy(N, m, p, rng, 0.7);
        double worst = 0.0;
        for (int l = 0; l + 1 < N; ++l) {
            const double d = std::abs(pol.eta(l) - pol.eta(l + 1)) +
                             (pol.theta.row(l) - pol.theta.row(l + 1)).cwiseAbs().sum();
            worst = std::max(worst, d - 2.0);
        }
        EXPECT_NEAR(prog.max_violation(tight_point(prog, pol)), std::max(0.0, worst), 1e-12);
    }
}

TEST(Constraints, DriftRowsReproduceSlack)
{
    Rotation r;
    std::mt19937_64 rng(6);
    Vector x2(2);
    x2 << 150.0, -90.0;
    const auto data = drift_constraint_data(x2, r.cp.ctx.stability, r.split, 5, 1);
    ASSERT_TRUE(data.has_value());
    for (int rep = 0; rep < 20; ++rep) {
        ConvexProgram prog;
        VariableMap vars(5, 1, 3);
        assemble_drift_constraint(vars, *data, 1.0, prog.linear, prog.soc);
        prog.vars = vars;
        const Policy pol = random_causal_policy(5, 1, 3, rng, 20.0);
        const Vector z = tight_point(prog, pol);
        const double slack = drift_slack(*data, pol.eta, pol.theta, 1.0);
        EXPECT_NEAR(prog.max_violation(z), std::max(0.0, -slack), 1e-9 * (1.0 + std::abs(slack)));
    }
}

TEST(ConeTranslation, MembershipMatchesConstraintValues)
{
    Rotation r;
    std::mt19937_64 rng(7);
    const Vector xhat = 60.0 * random_vector(3, rng);
    ConvexProgram prog = build_program(r.cp.ctx, xhat);
    SoftConstraintSpec spec;
    spec.S = Matrix::Identity(18, 18);
    spec.L = random_vector(18, rng);
    spec.S_tilde = Matrix::Identity(5, 5);
    prog.quad = assemble_soft_constraints(prog.vars, xhat, r.cp.ctx.lambdas.P_used, r.cp.ctx.lambdas,
                                          r.cp.ctx.lifted, spec, 5e5, 2e4);
    const ConeProblem cp = to_cone_problem(prog);
    for (int rep = 0; rep < 30; ++rep) {
        const Policy pol = random_causal_policy(5, 1, 3, rng, 40.0);
        const Vector z = tight_point(prog, pol);
        const Vector s = cp.h - cp.G * z;
        double cone_violation = 0.0;
        for (int i = 0; i < cp.dims.linear; ++i) {
            if (prog.linear[i].tag.rfind("abs_", 0) == 0 || prog.linear[i].tag == "drift_row_sum") {
                cone_violation = std::max(cone_violation, -s(i));
            } else {
                const auto& c = prog.linear[i];
                double lhs = 0.0;
                for (const auto& [j, a] : c.coeffs) {
                    lhs += a * z(j);
                }
                EXPECT_NEAR(s(i), c.bound - lhs, 1e-9 * (1.0 + std::abs(c.bound) + std::abs(lhs)));
            }
        }
        int off = cp.dims.linear;
        for (std::size_t k = 0; k < cp.dims.soc.size(); ++k) {
            const int len = cp.dims.soc[k];
            const bool inside = s(off) >= s.segment(off + 1, len - 1).norm() - 1e-9 * (1.0 + std::abs(s(off)));
            if (k >= prog.soc.size()) {
                const auto& qc = prog.quad[k - prog.soc.size()];
                EXPECT_EQ(inside, qc.form.value(z) <= qc.level) << k;
            }
            off += len;
        }
        EXPECT_NEAR(cone_violation, 0.0, 1e-9);  // auxiliaries are tight, rows of |.| hold
    }
}

TEST(Solve, DecoupledOptimumIsOpenLoopLqr)
{
    Rotation r;
    OptimizerContext ctx = r.cp.ctx;
    ctx.lambdas.lambda_phi.setZero();
    ctx.lambdas.lambda_phi_e.setZero();
    ctx.lambdas.lambda_phi_x.setZero();
    ctx.lambdas.lambda_w_phi.setZero();
    ctx.split.n2 = 0;  // no drift constraint
    ctx.horizon.u_max = 1e6;
    Vector xhat(3);
    xhat << 3.0, -2.0, 1.0;
    const SolveResult res = solve(build_program(ctx, xhat));
    ASSERT_EQ(res.status, SolveStatus::Optimal);
    const auto& L = ctx.lifted;
    const Vector eta = -L.M1.ldlt().solve(L.Ba.transpose() * L.Wxa * L.Aa * xhat);
    EXPECT_LE((res.policy.eta - eta).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LE(res.policy.theta.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Solve, RotationProgramRespectsEveryConstraint)
{
    Rotation r;
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const Vector xhat = 120.0 * random_vector(3, rng);
        const ConvexProgram prog = build_program(r.cp.ctx, xhat);
        const SolveResult res = solve(prog);
        ASSERT_TRUE(res.usable()) << to_string(res.status);
        EXPECT_LE(res.max_violation, 1e-6);
        EXPECT_LE(res.policy.bound_excess(r.cp.ctx.horizon.u_max, 1.0), 1e-9);
        EXPECT_TRUE(res.policy.is_causal());
        const Vector x2 = xhat.tail(2);
        if (const auto d = drift_constraint_data(x2, r.cp.ctx.stability, r.split, 5, 1)) {
            EXPECT_GE(drift_slack(*d, res.policy.eta, res.policy.theta, 1.0), -1e-6);
        }
    }
}

TEST(Solve, FeedbackLowersTheObjective)
{
    // The optimum over (eta, Theta) is no worse than the best open-loop sequence.
    Rotation r;
    Vector xhat(3);
    xhat << 5.0, 5.0, -5.0;
    OptimizerContext ctx = r.cp.ctx;
    const ConvexProgram full = build_program(ctx, xhat);
    const SolveResult res = solve(full);
    ASSERT_TRUE(res.usable());
    const auto& L = ctx.lifted;
    Policy open = Policy::zero(5, 1, 3);
    open.eta = -L.M1.ldlt().solve(L.Ba.transpose() * L.Wxa * L.Aa * xhat);
    EXPECT_LE(res.objective, full.objective.value(full.vars.pack(open)) + 1e-6);
}

TEST(SoftConstraints, UpperLevelsHoldForEveryBoundedPolicy)
{
    Rotation r;
    std::mt19937_64 rng(9);
    const auto& L = r.cp.ctx.lifted;
    SoftConstraintSpec spec;
    const Matrix g = random_matrix(18, 18, rng);
    spec.S = g * g.transpose() / 18.0;
    spec.L = random_vector(18, rng);
    spec.S_tilde = random_spd(5, rng);
    const double u_max = r.cp.ctx.horizon.u_max;
    for (int rep = 0; rep < 20; ++rep) {
        const Vector xhat = 50.0 * random_vector(3, rng);
        const Matrix P = r.cp.ctx.lambdas.P_used;
        const AlphaBeta ab = compute_alpha_beta_star(xhat, P, L, spec, u_max);
        VariableMap vars(5, 1, 3);
        const auto quads = assemble_soft_constraints(vars, xhat, P, r.cp.ctx.lambdas, L, spec, ab.alpha_star,
                                                     ab.beta_star);
        Policy pol = random_causal_policy(5, 1, 3, rng, 100.0);
        pol.clamp_to_bound(u_max, 1.0);
        const Vector z = vars.pack(pol);
        EXPECT_LE(quads[0].form.value(z), ab.alpha_star);
        EXPECT_LE(quads[1].form.value(z), ab.beta_star);
    }
}

TEST(SoftConstraints, DegenerateWeightsAreRejected)
{
    Rotation r;
    SoftConstraintSpec spec;
    spec.S = Matrix::Zero(18, 18);
    spec.L = Vector::Zero(18);
    spec.S_tilde = Matrix::Zero(5, 5);
    EXPECT_THROW(compute_alpha_beta_star(Vector::Zero(3), Matrix::Identity(3, 3), r.cp.ctx.lifted, spec, 1.0), Error);
}

TEST(Bisection, BracketsKnownThresholds)
{
    SoftConstraintSpec spec;
    spec.delta = 1e-3;
    spec.nu_bar = 30;
    const double a0 = 3.21987;
    const double b0 = 0.4321;
    auto oracle = [&](double a, double b) {
        SolveResult r;
        r.status = (a >= a0 && b >= b0) ? SolveStatus::Optimal : SolveStatus::Infeasible;
        return r;
    };
    const auto res = run_level_bisection(oracle, 10.0, 1.0, spec);
    // Joint halving keeps both brackets aligned with the slower coordinate.
    EXPECT_GE(res.alpha_upper, a0);
    EXPECT_GE(res.beta_upper, b0);
    EXPECT_LE(res.iterations, 30);
    EXPECT_TRUE(res.solution.usable());
    for (const auto& step : res.trace) {
        EXPECT_EQ(step.feasible, step.alpha >= a0 && step.beta >= b0);
    }
}

TEST(Bisection, InfeasibleUpperLevelThrows)
{
    SoftConstraintSpec spec;
    auto never = [](double, double) { return SolveResult{}; };
    try {
        run_level_bisection(never, 1.0, 1.0, spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InitialInfeasible);
    }
}

TEST(ProgramDump, ContainsBlocksAndVariableMap)
{
    Rotation r;
    Vector xhat(3);
    xhat << 0.0, 150.0, 20.0;
    const ConvexProgram prog = build_program(r.cp.ctx, xhat);
    const auto j = program_to_json(prog);
    const int core = prog.vars.core_size();
    EXPECT_EQ(j["variables"]["size"], prog.vars.size());
    EXPECT_EQ(j["objective"]["H_upper"].size(), static_cast<std::size_t>(core * (core + 1) / 2));
    EXPECT_EQ(j["linear"].size(), prog.linear.size());
    EXPECT_EQ(j["soc"].size(), 1u);
    EXPECT_EQ(j["soc"][0]["tag"], "drift");
}
