#include "srhc/linalg.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace srhc;
using srhc::testing::random_matrix;
using srhc::testing::random_spd;

TEST(Linalg, PsdFactorReconstructsSemidefiniteInput)
{
    std::mt19937_64 rng(1);
    const Matrix g = random_matrix(5, 3, rng);
    const Matrix m = g * g.transpose();  // rank 3
    const Matrix L = linalg::psd_factor(m);
    EXPECT_LE((L * L.transpose() - m).cwiseAbs().maxCoeff(), 1e-10 * m.norm());
}

TEST(Linalg, PseudoInverseSatisfiesPenroseConditions)
{
    std::mt19937_64 rng(2);
    const Matrix a = random_matrix(3, 5, rng);
    const Matrix x = linalg::pseudo_inverse(a);
    EXPECT_LE((a * x * a - a).norm(), 1e-10);
    EXPECT_LE((x * a * x - x).norm(), 1e-10);
    EXPECT_LE(((a * x).transpose() - a * x).norm(), 1e-10);
    EXPECT_LE(((x * a).transpose() - x * a).norm(), 1e-10);
}

TEST(Linalg, NormsAgreeWithEigenvaluesOfGram)
{
    std::mt19937_64 rng(3);
    const Matrix a = random_matrix(4, 4, rng);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a);
    EXPECT_NEAR(linalg::spectral_norm(a), std::sqrt(es.eigenvalues().maxCoeff()), 1e-10);
    EXPECT_NEAR(linalg::min_singular_value(a), std::sqrt(es.eigenvalues().minCoeff()), 1e-8);
}

TEST(Linalg, SpectralRadiusOfRotationIsOne)
{
    Matrix r(2, 2);
    r << 0.0, -1.0, 1.0, 0.0;
    EXPECT_NEAR(linalg::spectral_radius(r), 1.0, 1e-14);
}

TEST(Linalg, MatrixPowerMatchesRepeatedProduct)
{
    std::mt19937_64 rng(4);
    const Matrix a = random_matrix(3, 3, rng) * 0.5;
    Matrix expected = Matrix::Identity(3, 3);
    for (int k = 0; k < 7; ++k) {
        expected = expected * a;
    }
    EXPECT_LE((linalg::matrix_power(a, 7) - expected).norm(), 1e-12 * (1.0 + expected.norm()));
    EXPECT_EQ(linalg::matrix_power(a, 0), Matrix::Identity(3, 3));
}

TEST(Linalg, KronIdentityIsBlockDiagonal)
{
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    const Matrix k = linalg::kron_identity(3, m);
    ASSERT_EQ(k.rows(), 6);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const Matrix block = k.block(2 * i, 2 * j, 2, 2);
            EXPECT_EQ(block, i == j ? m : Matrix::Zero(2, 2));
        }
    }
}

TEST(Linalg, DefinitenessChecks)
{
    std::mt19937_64 rng(5);
    const Matrix spd = random_spd(4, rng);
    EXPECT_TRUE(linalg::is_positive_definite(spd));
    Matrix indefinite = Matrix::Identity(2, 2);
    indefinite(1, 1) = -1e-3;
    EXPECT_FALSE(linalg::is_positive_semidefinite(indefinite));
    EXPECT_FALSE(linalg::is_positive_definite(Matrix::Zero(2, 2)));
    EXPECT_TRUE(linalg::is_positive_semidefinite(Matrix::Zero(2, 2)));
}

TEST(Linalg, HashIsDeterministicAndShapeSensitive)
{
    Matrix a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    const Matrix b = a;
    EXPECT_EQ(linalg::hash_matrix(a), linalg::hash_matrix(b));
    const Matrix reshaped = Eigen::Map<const Matrix>(a.data(), 3, 2);
    EXPECT_NE(linalg::hash_matrix(a), linalg::hash_matrix(reshaped));
    Matrix c = a;
    c(1, 2) = std::nextafter(6.0, 7.0);
    EXPECT_NE(linalg::hash_matrix(a), linalg::hash_matrix(c));
}
