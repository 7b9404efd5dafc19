#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace srhc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Relative singular-value threshold below which a direction counts as null.
inline constexpr double kRankTol = 1e-9;

Matrix symmetrize(const Matrix& m);

bool is_symmetric(const Matrix& m, double tol = 1e-9);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

bool is_positive_definite(const Matrix& m);
bool is_positive_semidefinite(const Matrix& m, double tol = 1e-9);

/// Numerical rank: singular values <= kRankTol * sigma_max count as zero.
int numerical_rank(const Matrix& m, double rel_tol = kRankTol);
int numerical_rank(const Eigen::MatrixXcd& m, double rel_tol = kRankTol);

double spectral_norm(const Matrix& m);
double min_singular_value(const Matrix& m);
double spectral_radius(const Matrix& m);

/// Returns L with L * L^T == m for symmetric positive semidefinite m.
/// Negative eigenvalues (round-off) are clipped to zero.
Matrix psd_factor(const Matrix& m);

Matrix matrix_power(const Matrix& a, int k);

/// Moore-Penrose pseudoinverse through a thin SVD.
Matrix pseudo_inverse(const Matrix& m, double rel_tol = kRankTol);

/// Block-diagonal repetition I_k (x) m.
Matrix kron_identity(int k, const Matrix& m);

double max_abs(const Matrix& m);

/// FNV-1a over the raw bytes; stable across runs and platforms with IEEE doubles.
std::uint64_t hash_bytes(std::span<const unsigned char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_matrix(const Matrix& m, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace linalg
}  // namespace srhc
