#include "srhc/cone_solver.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace srhc;
using srhc::testing::random_matrix;
using srhc::testing::random_spd;
using srhc::testing::random_vector;

namespace {

bool in_soc(const Vector& v, double tol)
{
    return v(0) + tol >= v.tail(v.size() - 1).norm();
}

/// Interior point of the cone: identity plus a small random part.
Vector random_interior(const ConeDims& dims, std::mt19937_64& rng)
{
    Vector v = random_vector(dims.rows(), rng);
    v.head(dims.linear) = v.head(dims.linear).cwiseAbs().array() + 0.1;
    int off = dims.linear;
    for (int k : dims.soc) {
        v(off) = v.segment(off + 1, k - 1).norm() + 0.5;
        off += k;
    }
    return v;
}

SparseRowMatrix sparse(const Matrix& m)
{
    return m.sparseView();
}

/// Primal/dual feasibility, complementarity and stationarity of a claimed optimum.
void expect_kkt(const ConeProblem& pr, const ConeSolution& sol, double tol)
{
    ASSERT_TRUE(sol.usable()) << to_string(sol.status);
    const Vector stat = pr.P * sol.x + pr.q + pr.G.transpose() * sol.z;
    EXPECT_LE(stat.lpNorm<Eigen::Infinity>(), tol);
    const Vector prim = pr.G * sol.x + sol.s - pr.h;
    EXPECT_LE(prim.lpNorm<Eigen::Infinity>(), tol);
    for (int i = 0; i < pr.dims.linear; ++i) {
        EXPECT_GE(sol.s(i), -tol);
        EXPECT_GE(sol.z(i), -tol);
    }
    int off = pr.dims.linear;
    for (int k : pr.dims.soc) {
        EXPECT_TRUE(in_soc(sol.s.segment(off, k), tol));
        EXPECT_TRUE(in_soc(sol.z.segment(off, k), tol));
        off += k;
    }
    EXPECT_LE(std::abs(sol.s.dot(sol.z)), tol * std::max(1.0, std::abs(sol.primal_objective)));
}

}  // namespace

TEST(ConeAlgebra, NtScalingMapsBothVectorsToLambda)
{
    std::mt19937_64 rng(3);
    ConeDims dims{4, {3, 5, 2}};
    for (int rep = 0; rep < 20; ++rep) {
        const Vector s = random_interior(dims, rng);
        const Vector z = random_interior(dims, rng);
        const auto W = cone::nt_scaling(s, z, dims);
        const Vector wz = cone::apply_w(W, z, dims);
        const Vector winv_s = cone::apply_w_inverse(W, s, dims);
        EXPECT_LE((wz - W.lambda).norm(), 1e-10 * (1.0 + W.lambda.norm()));
        EXPECT_LE((winv_s - W.lambda).norm(), 1e-10 * (1.0 + W.lambda.norm()));
        const Vector v = random_vector(dims.rows(), rng);
        EXPECT_LE((cone::apply_w_inverse(W, cone::apply_w(W, v, dims), dims) - v).norm(), 1e-10 * v.norm());
    }
}

TEST(ConeAlgebra, JordanDivideInvertsProduct)
{
    std::mt19937_64 rng(5);
    ConeDims dims{3, {4, 3}};
    const Vector lambda = random_interior(dims, rng);
    const Vector x = random_vector(dims.rows(), rng);
    const Vector y = cone::jordan_product(lambda, x, dims);
    EXPECT_LE((cone::jordan_divide(lambda, y, dims) - x).norm(), 1e-10 * x.norm());
}

TEST(ConeAlgebra, SocStepLengthMatchesBisection)
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        Vector lambda = random_vector(4, rng);
        lambda(0) = lambda.tail(3).norm() + 0.01 + std::abs(lambda(0));
        const Vector d = random_vector(4, rng);
        const double t = cone::soc_step_length(lambda, d);
        auto inside = [&](double a) {
            const Vector v = lambda + a * d;
            return v(0) >= v.tail(3).norm();
        };
        if (std::isinf(t)) {
            EXPECT_TRUE(inside(1e6));
            continue;
        }
        double lo = 0.0;
        double hi = t * 2.0 + 1.0;
        while (inside(hi) && hi < 1e12) {
            hi *= 2.0;
        }
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (inside(mid) ? lo : hi) = mid;
        }
        EXPECT_NEAR(t, lo, 1e-8 * (1.0 + t));
    }
}

TEST(ConeAlgebra, IdentityShiftReachesBoundary)
{
    ConeDims dims{2, {3}};
    Vector v(5);
    v << -1.0, 2.0, 0.0, 3.0, 4.0;
    const double t = cone::identity_shift(v, dims);
    EXPECT_NEAR(t, 5.0, 1e-12);
}

TEST(ConeSolver, UnconstrainedQuadratic)
{
    std::mt19937_64 rng(11);
    ConeProblem pr;
    pr.P = random_spd(6, rng);
    pr.q = random_vector(6, rng);
    pr.G.resize(0, 6);
    pr.h.resize(0);
    const auto sol = solve_cone_program(pr);
    ASSERT_EQ(sol.status, ConeStatus::Optimal);
    const Vector expected = -pr.P.ldlt().solve(pr.q);
    EXPECT_LE((sol.x - expected).norm(), 1e-8);
}

TEST(ConeSolver, ActiveBoxConstraint)
{
    ConeProblem pr;
    pr.P = 2.0 * Matrix::Identity(1, 1);
    pr.q = Vector::Constant(1, -6.0);  // (x - 3)^2
    Matrix G(2, 1);
    G << 1.0, -1.0;
    pr.G = sparse(G);
    pr.h = Vector::Constant(2, 1.0);
    pr.dims.linear = 2;
    const auto sol = solve_cone_program(pr);
    ASSERT_EQ(sol.status, ConeStatus::Optimal);
    EXPECT_NEAR(sol.x(0), 1.0, 1e-8);
    EXPECT_NEAR(sol.z(0), 4.0, 1e-6);
}

TEST(ConeSolver, LinearObjectiveOverBall)
{
    ConeProblem pr;
    pr.P = Matrix::Zero(3, 3);
    pr.q = Vector(3);
    pr.q << 1.0, -2.0, 2.0;
    Matrix G = Matrix::Zero(4, 3);
    G.bottomRows(3) = -Matrix::Identity(3, 3);
    pr.G = sparse(G);
    pr.h = Vector::Zero(4);
    pr.h(0) = 1.0;
    pr.dims.soc = {4};
    const auto sol = solve_cone_program(pr);
    ASSERT_EQ(sol.status, ConeStatus::Optimal);
    EXPECT_LE((sol.x + pr.q / 3.0).norm(), 1e-7);
    EXPECT_NEAR(sol.primal_objective, -3.0, 1e-7);
}

TEST(ConeSolver, RandomMixedConesSatisfyKkt)
{
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = 8;
        ConeProblem pr;
        pr.P = random_spd(n, rng, 0.01);
        pr.q = random_vector(n, rng);
        pr.dims = ConeDims{10, {4, 3}};
        const Matrix G = random_matrix(pr.dims.rows(), n, rng);
        pr.G = sparse(G);
        // h = G x0 + s0 with s0 interior keeps the problem strictly feasible.
        pr.h = G * random_vector(n, rng) + random_interior(pr.dims, rng);
        const auto sol = solve_cone_program(pr);
        expect_kkt(pr, sol, 1e-6);
    }
}

TEST(ConeSolver, LinearProgramWithBoundedFeasibleSet)
{
    // min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
    ConeProblem pr;
    pr.P = Matrix::Zero(2, 2);
    pr.q = Vector::Constant(2, -1.0);
    Matrix G(4, 2);
    G << 1, 2, 3, 1, -1, 0, 0, -1;
    pr.G = sparse(G);
    pr.h = Vector(4);
    pr.h << 4, 6, 0, 0;
    pr.dims.linear = 4;
    const auto sol = solve_cone_program(pr);
    ASSERT_EQ(sol.status, ConeStatus::Optimal);
    EXPECT_NEAR(sol.x(0), 1.6, 1e-7);
    EXPECT_NEAR(sol.x(1), 1.2, 1e-7);
}

TEST(ConeSolver, ReportsInfeasible)
{
    ConeProblem pr;
    pr.P = Matrix::Identity(1, 1);
    pr.q = Vector::Zero(1);
    Matrix G(2, 1);
    G << 1.0, -1.0;  // x <= -1 and x >= 1
    pr.G = sparse(G);
    pr.h = Vector::Constant(2, -1.0);
    pr.dims.linear = 2;
    const auto sol = solve_cone_program(pr);
    EXPECT_EQ(sol.status, ConeStatus::Infeasible);
    EXPECT_GT(sol.infeasibility_shift, 0.5);
}

TEST(ConeSolver, ReportsInfeasibleConeIntersection)
{
    // ||x|| <= 1 together with x_0 >= 2
    ConeProblem pr;
    pr.P = Matrix::Identity(2, 2);
    pr.q = Vector::Zero(2);
    Matrix G = Matrix::Zero(4, 2);
    G(0, 0) = -1.0;
    G.bottomRows(2) = -Matrix::Identity(2, 2);
    pr.G = sparse(G);
    pr.h = Vector::Zero(4);
    pr.h(0) = -2.0;
    pr.h(1) = 1.0;
    pr.dims = ConeDims{1, {3}};
    const auto sol = solve_cone_program(pr);
    EXPECT_EQ(sol.status, ConeStatus::Infeasible);
}

TEST(ConeSolver, DegenerateSinglePointFeasibleSet)
{
    // x <= 1, -x <= -1 leaves only x = 1.
    ConeProblem pr;
    pr.P = Matrix::Identity(1, 1);
    pr.q = Vector::Zero(1);
    Matrix G(2, 1);
    G << 1.0, -1.0;
    pr.G = sparse(G);
    pr.h = Vector(2);
    pr.h << 1.0, -1.0;
    pr.dims.linear = 2;
    const auto sol = solve_cone_program(pr);
    ASSERT_TRUE(sol.usable()) << to_string(sol.status);
    EXPECT_NEAR(sol.x(0), 1.0, 1e-5);
}
