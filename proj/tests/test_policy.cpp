#include "srhc/errors.hpp"
#include "srhc/policy.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace srhc;
using srhc::testing::random_matrix;
using srhc::testing::random_vector;

namespace {

Policy random_causal_policy(int N, int m, int p, std::mt19937_64& rng)
{
    Policy pol = Policy::zero(N, m, p);
    pol.eta = random_vector(N * m, rng);
    pol.theta = random_matrix(N * m, N * p, rng);
    for (int l = 0; l < N; ++l) {
        pol.theta.block(l * m, (l + 1) * p, m, (N - l - 1) * p).setZero();
    }
    return pol;
}

}  // namespace

TEST(Policy, ZeroGainIsOpenLoop)
{
    std::mt19937_64 rng(1);
    Policy pol = Policy::zero(3, 2, 2);
    pol.eta = random_vector(6, rng);
    const auto sat = SaturationFunction::clip(1.0);
    const std::vector<Vector> r = {random_vector(2, rng), random_vector(2, rng)};
    EXPECT_EQ(apply_policy(pol, r, 1, sat), pol.eta.segment(2, 2));
}

TEST(Policy, MatchesNaiveDoubleLoop)
{
    std::mt19937_64 rng(2);
    const auto sat = SaturationFunction::sigmoid(0.7, 1.3);
    for (int rep = 0; rep < 50; ++rep) {
        const int N = 4;
        const int m = 2;
        const int p = 3;
        const Policy pol = random_causal_policy(N, m, p, rng);
        std::vector<Vector> r;
        for (int l = 0; l < N; ++l) {
            r.push_back(3.0 * random_vector(p, rng));
            const Vector u = apply_policy(pol, r, l, sat);
            for (int a = 0; a < m; ++a) {
                double v = pol.eta(l * m + a);
                for (int i = 0; i <= l; ++i) {
                    for (int b = 0; b < p; ++b) {
                        v += pol.theta(l * m + a, i * p + b) * sat(r[i](b));
                    }
                }
                EXPECT_NEAR(u(a), v, 1e-13 * (1.0 + std::abs(v)));
            }
        }
    }
}

TEST(Policy, RejectsFutureResiduals)
{
    const Policy pol = Policy::zero(3, 1, 1);
    const auto sat = SaturationFunction::clip(1.0);
    const std::vector<Vector> r(3, Vector::Zero(1));
    try {
        apply_policy(pol, r, 1, sat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CausalityViolation);
    }
    EXPECT_THROW(apply_policy(pol, {}, 1, sat), Error);
}

TEST(Policy, ExtremeResidualsStayWithinCertificate)
{
    std::mt19937_64 rng(3);
    Policy pol = random_causal_policy(3, 2, 2, rng);
    const double u_max = 5.0;
    pol.clamp_to_bound(u_max, 1.0);
    EXPECT_LE(pol.bound_excess(u_max, 1.0), 1e-12);
    const auto sat = SaturationFunction::clip(1.0);
    std::vector<Vector> r;
    for (int l = 0; l < 3; ++l) {
        r.push_back(Vector::Constant(2, l % 2 == 0 ? 1e9 : -1e9));
        const Vector u = apply_policy(pol, r, l, sat);
        EXPECT_LE(u.lpNorm<Eigen::Infinity>(), u_max + 1e-9);
    }
}

TEST(Policy, CausalityAndBoundExcess)
{
    Policy pol = Policy::zero(2, 1, 1);
    EXPECT_TRUE(pol.is_causal());
    pol.theta(0, 1) = 1.0;
    EXPECT_FALSE(pol.is_causal());
    pol.theta(0, 1) = 0.0;
    pol.eta << 1.0, -2.0;
    pol.theta(1, 0) = 0.5;
    pol.theta(1, 1) = -0.25;
    EXPECT_NEAR(pol.bound_excess(3.0, 2.0), 2.0 + 2.0 * 0.75 - 3.0, 1e-15);
}

TEST(Policy, ClampLeavesFeasibleRowsAlone)
{
    Policy pol = Policy::zero(2, 1, 1);
    pol.eta << 0.5, 4.0;
    pol.theta(1, 0) = 2.0;
    const Policy before = pol;
    pol.clamp_to_bound(3.0, 1.0);
    EXPECT_EQ(pol.eta(0), before.eta(0));
    EXPECT_NEAR(std::abs(pol.eta(1)) + std::abs(pol.theta(1, 0)), 3.0, 1e-12);
}
