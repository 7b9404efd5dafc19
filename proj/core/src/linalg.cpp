#include "srhc/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace srhc::linalg {

Matrix symmetrize(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

bool is_symmetric(const Matrix& m, double tol)
{
    if (m.rows() != m.cols()) {
        return false;
    }
    const double scale = std::max(1.0, max_abs(m));
    return max_abs(m - m.transpose()) <= tol * scale;
}

double min_eigenvalue(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

bool is_positive_definite(const Matrix& m)
{
    if (!is_symmetric(m)) {
        return false;
    }
    Eigen::LLT<Matrix> llt(symmetrize(m));
    return llt.info() == Eigen::Success && min_eigenvalue(m) > 0.0;
}

bool is_positive_semidefinite(const Matrix& m, double tol)
{
    if (!is_symmetric(m)) {
        return false;
    }
    const double scale = std::max(1.0, max_abs(m));
    return min_eigenvalue(m) >= -tol * scale;
}

int numerical_rank(const Matrix& m, double rel_tol)
{
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (smax == 0.0) {
        return 0;
    }
    return static_cast<int>((sv.array() > rel_tol * smax).count());
}

int numerical_rank(const Eigen::MatrixXcd& m, double rel_tol)
{
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (smax == 0.0) {
        return 0;
    }
    return static_cast<int>((sv.array() > rel_tol * smax).count());
}

double spectral_norm(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double min_singular_value(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1);
}

double spectral_radius(const Matrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix psd_factor(const Matrix& m)
{
    if (m.size() == 0) {
        return Matrix(m.rows(), m.cols());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

Matrix matrix_power(const Matrix& a, int k)
{
    Matrix out = Matrix::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) {
        out = a * out;
    }
    return out;
}

Matrix pseudo_inverse(const Matrix& m, double rel_tol)
{
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    Vector inv(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        inv(i) = (smax > 0.0 && sv(i) > rel_tol * smax) ? 1.0 / sv(i) : 0.0;
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix kron_identity(int k, const Matrix& m)
{
    Matrix out = Matrix::Zero(k * m.rows(), k * m.cols());
    for (int i = 0; i < k; ++i) {
        out.block(i * m.rows(), i * m.cols(), m.rows(), m.cols()) = m;
    }
    return out;
}

double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

std::uint64_t hash_bytes(std::span<const unsigned char> bytes, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_matrix(const Matrix& m, std::uint64_t seed)
{
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    std::uint64_t h = hash_bytes({reinterpret_cast<const unsigned char*>(dims), sizeof(dims)}, seed);
    return hash_bytes({reinterpret_cast<const unsigned char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size())}, h);
}

}  // namespace srhc::linalg
