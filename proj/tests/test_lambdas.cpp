#include "srhc/lambdas.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace srhc;
using srhc::testing::random_vector;
using srhc::testing::rotation_plant;

namespace {

struct Fixture {
    SystemModel model = rotation_plant();
    RiccatiSolution ric = riccati_limit(model);
    int N = 3;
    ErrorLift lift = build_error_lift(steady_state_gains(model, ric, N));
};

std::filesystem::path scratch_dir(const char* name)
{
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST(InnovationMaps, ResidualsEqualMeasurementMinusFilteredEstimate)
{
    Fixture f;
    const auto maps = innovation_maps(f.lift, f.model, f.N);
    std::mt19937_64 rng(3);
    const Vector e0 = random_vector(3, rng);
    const Vector W = random_vector(f.N * 3, rng);
    const Vector V = random_vector((f.N + 1) * 3, rng);
    const Vector E = f.lift.Fe * e0 + f.lift.Fw * W - f.lift.Fv * V;
    // y_k - C xhat_{k|k} = C e_k + v_k
    Vector expected((f.N + 1) * 3);
    for (int k = 0; k <= f.N; ++k) {
        expected.segment(k * 3, 3) = f.model.C * E.segment(k * 3, 3) + V.segment(k * 3, 3);
    }
    const Vector got = maps.Ge * e0 + maps.Gw * W + maps.Gv * V;
    EXPECT_LE((got - expected).norm(), 1e-10 * expected.norm());
}

TEST(InnovationBatch, ColumnsAreConsistentDraws)
{
    Fixture f;
    const auto sat = SaturationFunction::clip(1.0);
    const auto batch = sample_innovation_batch(f.ric.P_circ, f.lift, f.model, f.N, 40, 11, sat);
    ASSERT_EQ(batch.innov.cols(), 40);
    const auto maps = innovation_maps(f.lift, f.model, f.N);
    const Matrix innov = maps.Ge * batch.e + maps.Gw * batch.W + maps.Gv * batch.V;
    EXPECT_LE((innov - batch.innov).cwiseAbs().maxCoeff(), 1e-10);
    Matrix phi = batch.innov.topRows(f.N * 3);
    sat.apply_inplace(phi);
    EXPECT_EQ(phi, batch.phi);
}

TEST(Lambdas, OddSaturatorHasZeroMean)
{
    Fixture f;
    const auto lset = estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, SaturationFunction::clip(1.0), 20000, 5);
    for (Eigen::Index i = 0; i < lset.lambda_phi.size(); ++i) {
        EXPECT_LE(std::abs(lset.lambda_phi(i)), 3.5 * lset.se_phi(i)) << i;
    }
    EXPECT_TRUE(linalg::is_symmetric(lset.lambda_phi_phi, 0.0));
    EXPECT_LE((lset.lambda_phi_x - lset.lambda_phi_e).norm(), 0.0);
}

TEST(Lambdas, IndependentOfShardSchedulingAndSeeded)
{
    Fixture f;
    const auto sat = SaturationFunction::clip(1.0);
    const auto a = estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, sat, 5003, 9);
    const auto b = estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, sat, 5003, 9);
    const auto c = estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, sat, 5003, 10);
    EXPECT_EQ(a.lambda_phi_phi, b.lambda_phi_phi);
    EXPECT_EQ(a.lambda_w_phi, b.lambda_w_phi);
    EXPECT_NE(a.lambda_phi_phi, c.lambda_phi_phi);
    EXPECT_EQ(a.sample_count, 5003);
}

TEST(Lambdas, LinearSaturatorRecoversCovariances)
{
    // With a saturator that is linear over the sampled range, E[phi phi^T]
    // equals the residual covariance G Sigma G^T.
    Fixture f;
    const auto maps = innovation_maps(f.lift, f.model, f.N);
    const auto sat = SaturationFunction::piecewise_linear({{-1e6, -1e6}, {1e6, 1e6}}, 1e6);
    const auto lset = estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, sat, 40000, 2);
    const Matrix sw = linalg::kron_identity(f.N, f.model.sigma_w);
    const Matrix sv = linalg::kron_identity(f.N + 1, f.model.sigma_v);
    const Matrix cov = maps.Ge * f.ric.P_circ * maps.Ge.transpose() + maps.Gw * sw * maps.Gw.transpose() +
                       maps.Gv * sv * maps.Gv.transpose();
    const int Np = f.N * 3;
    const Matrix expected = cov.topLeftCorner(Np, Np);
    for (int i = 0; i < Np; ++i) {
        for (int j = 0; j < Np; ++j) {
            EXPECT_LE(std::abs(lset.lambda_phi_phi(i, j) - expected(i, j)), 4.0 * lset.se_phi_phi(i, j) + 1e-9)
                << i << "," << j;
        }
    }
    // E[W phi^T] = Sigma_W Gw^T for the first N blocks.
    const Matrix w_phi = (sw * maps.Gw.transpose()).leftCols(Np);
    for (int i = 0; i < w_phi.rows(); ++i) {
        for (int j = 0; j < Np; ++j) {
            EXPECT_LE(std::abs(lset.lambda_w_phi(i, j) - w_phi(i, j)), 4.0 * lset.se_w_phi(i, j) + 1e-9);
        }
    }
}

TEST(LambdaCache, RoundTripIsBitExact)
{
    Fixture f;
    const auto sat = SaturationFunction::clip(1.0);
    const auto lset = estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, sat, 2000, 4);
    const auto dir = scratch_dir("srhc_lambda_roundtrip");
    std::filesystem::create_directories(dir);
    write_lambda_payload(dir / "x.bin", lset);
    const auto back = read_lambda_payload(dir / "x.bin");
    EXPECT_EQ(back.lambda_phi, lset.lambda_phi);
    EXPECT_EQ(back.lambda_phi_e, lset.lambda_phi_e);
    EXPECT_EQ(back.lambda_w_phi, lset.lambda_w_phi);
    EXPECT_EQ(back.lambda_phi_phi, lset.lambda_phi_phi);
    EXPECT_EQ(back.P_used, lset.P_used);
    EXPECT_EQ(back.se_phi_phi, lset.se_phi_phi);
    EXPECT_EQ(back.seed, lset.seed);
    std::filesystem::remove_all(dir);
}

TEST(LambdaCache, HitRecomputeAndForce)
{
    Fixture f;
    const auto sat = SaturationFunction::clip(1.0);
    const auto key = make_lambda_key(f.model, f.N, sat, f.ric.P_circ, 1000, 8);
    const auto dir = scratch_dir("srhc_lambda_cache");
    int calls = 0;
    auto compute = [&] {
        ++calls;
        return estimate_lambdas(f.ric.P_circ, f.lift, f.model, f.N, sat, 1000, 8);
    };
    const auto first = lambda_cache_get_or_compute(key, dir, compute);
    EXPECT_EQ(first.outcome, CacheOutcome::Computed);
    const auto second = lambda_cache_get_or_compute(key, dir, compute);
    EXPECT_EQ(second.outcome, CacheOutcome::Hit);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(second.lambdas.lambda_phi_phi, first.lambdas.lambda_phi_phi);
    EXPECT_TRUE(std::filesystem::exists(dir / "lambda" / (key.hex() + ".json")));

    // Flip one payload byte: the sidecar hash no longer matches.
    {
        std::fstream io(first.payload_path, std::ios::in | std::ios::out | std::ios::binary);
        io.seekp(64);
        io.put('\x7f');
    }
    const auto third = lambda_cache_get_or_compute(key, dir, compute);
    EXPECT_EQ(third.outcome, CacheOutcome::Recomputed);
    EXPECT_EQ(third.lambdas.lambda_phi_phi, first.lambdas.lambda_phi_phi);

    const auto forced = lambda_cache_get_or_compute(key, dir, compute, true);
    EXPECT_EQ(forced.outcome, CacheOutcome::Recomputed);
    EXPECT_EQ(calls, 3);
    std::filesystem::remove_all(dir);
}

TEST(LambdaCache, KeyDependsOnEveryField)
{
    Fixture f;
    const auto sat = SaturationFunction::clip(1.0);
    const auto base = make_lambda_key(f.model, f.N, sat, f.ric.P_circ, 1000, 8).hex();
    EXPECT_NE(base, make_lambda_key(f.model, f.N + 1, sat, f.ric.P_circ, 1000, 8).hex());
    EXPECT_NE(base, make_lambda_key(f.model, f.N, SaturationFunction::clip(2.0), f.ric.P_circ, 1000, 8).hex());
    EXPECT_NE(base, make_lambda_key(f.model, f.N, sat, f.ric.P_star, 1000, 8).hex());
    EXPECT_NE(base, make_lambda_key(f.model, f.N, sat, f.ric.P_circ, 1001, 8).hex());
    EXPECT_NE(base, make_lambda_key(f.model, f.N, sat, f.ric.P_circ, 1000, 9).hex());
    SystemModel other = f.model;
    other.sigma_v *= 2.0;
    EXPECT_NE(base, make_lambda_key(other, f.N, sat, f.ric.P_circ, 1000, 8).hex());
}
