#include "srhc/sysmodel.hpp"
#include "srhc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace srhc {
namespace {

constexpr double kEigTol = 1e-9;
constexpr double kClusterTol = 1e-6;
constexpr double kOrthoTol = 1e-9;

void require_dims(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name)
{
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
        throw Error(ErrorKind::DimensionMismatch, os.str());
    }
}

int complex_rank_abs(const Eigen::MatrixXcd& m, double abs_tol)
{
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return static_cast<int>((svd.singularValues().array() > abs_tol).count());
}

}  // namespace

CostWeights CostWeights::uniform(const Matrix& wx, const Matrix& wx_terminal, const Matrix& wu, int N)
{
    CostWeights w;
    w.Wx.assign(static_cast<std::size_t>(N), wx);
    w.WxN = wx_terminal;
    w.Wu.assign(static_cast<std::size_t>(N), wu);
    return w;
}

ValidatedModel validate_model(SystemModel model)
{
    const auto n = model.A.rows();
    if (n == 0 || model.A.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "A must be a non-empty square matrix");
    }
    if (model.B.rows() != n || model.B.cols() == 0) {
        throw Error(ErrorKind::DimensionMismatch, "B must have n rows and at least one column");
    }
    if (model.C.cols() != n || model.C.rows() == 0) {
        throw Error(ErrorKind::DimensionMismatch, "C must have n columns and at least one row");
    }
    const auto p = model.C.rows();
    require_dims(model.sigma_w, n, n, "sigma_w");
    require_dims(model.sigma_v, p, p, "sigma_v");
    require_dims(model.sigma_x0, n, n, "sigma_x0");
    if (model.xhat0.size() == 0) {
        model.xhat0 = Vector::Zero(n);
    }
    if (model.xhat0.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "xhat0 must have n entries");
    }

    if (!linalg::is_positive_definite(model.sigma_w)) {
        throw Error(ErrorKind::NotPositiveDefinite, "sigma_w");
    }
    if (!linalg::is_positive_definite(model.sigma_v)) {
        throw Error(ErrorKind::NotPositiveDefinite, "sigma_v");
    }
    if (!linalg::is_positive_semidefinite(model.sigma_x0)) {
        throw Error(ErrorKind::NotPositiveDefinite, "sigma_x0 (must be positive semidefinite)");
    }

    const Matrix& A = model.A;
    const double abs_tol = kEigTol * std::max(1.0, linalg::spectral_norm(A));
    Eigen::EigenSolver<Matrix> es(A, false);
    const Eigen::VectorXcd eig = es.eigenvalues();
    const Eigen::MatrixXcd Ac = A.cast<std::complex<double>>();
    const Eigen::MatrixXcd Bc = model.B.cast<std::complex<double>>();
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);

    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        const std::complex<double> lambda = eig(i);
        const double modulus = std::abs(lambda);
        if (modulus > 1.0 + kEigTol) {
            std::ostringstream os;
            os << "eigenvalue " << lambda << " lies outside the unit disc";
            throw Error(ErrorKind::NotLyapunovStable, os.str());
        }
        if (modulus < 1.0 - kEigTol) {
            continue;
        }
        const int algebraic = static_cast<int>(((eig.array() - lambda).abs() <= kClusterTol).count());
        const int geometric = static_cast<int>(n) - complex_rank_abs(Ac - lambda * I, abs_tol);
        if (algebraic != geometric) {
            std::ostringstream os;
            os << "unit-modulus eigenvalue " << lambda << " has algebraic multiplicity " << algebraic
               << " but geometric multiplicity " << geometric;
            throw Error(ErrorKind::NotLyapunovStable, os.str());
        }
        Eigen::MatrixXcd pbh(n, n + model.B.cols());
        pbh << Ac - lambda * I, Bc;
        if (complex_rank_abs(pbh, abs_tol) < n) {
            std::ostringstream os;
            os << "mode " << lambda << " is not reachable from the input";
            throw Error(ErrorKind::NotStabilizable, os.str());
        }
    }
    return ValidatedModel(std::move(model));
}

Matrix reachability_matrix(const Matrix& A, const Matrix& B, int steps)
{
    if (steps < 1) {
        throw Error(ErrorKind::DimensionMismatch, "reachability matrix needs steps >= 1");
    }
    if (A.rows() != A.cols() || B.rows() != A.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "reachability matrix: incompatible A, B");
    }
    const auto k = A.rows();
    const auto m = B.cols();
    Matrix R(k, steps * m);
    Matrix block = B;
    // Column block j (0-based) holds A^{steps-1-j} B; fill from the right.
    for (int j = steps - 1; j >= 0; --j) {
        R.middleCols(j * m, m) = block;
        block = A * block;
    }
    return R;
}

int compute_kappa(const Matrix& A2, const Matrix& B2)
{
    const int n2 = static_cast<int>(A2.rows());
    if (n2 == 0) {
        return 0;
    }
    for (int k = 1; k <= n2; ++k) {
        if (linalg::numerical_rank(reachability_matrix(A2, B2, k)) == n2) {
            return k;
        }
    }
    throw Error(ErrorKind::NotReachable, "(A2, B2) is not reachable within n2 steps");
}

JordanSplit validate_split(const ValidatedModel& vm, int n1, int n2, std::optional<int> expected_kappa)
{
    const SystemModel& model = vm.model();
    if (n1 < 0 || n2 < 0 || n1 + n2 != model.n()) {
        throw Error(ErrorKind::DimensionMismatch, "split sizes must partition the state dimension");
    }
    const Matrix& A = model.A;
    const double off = std::max(linalg::max_abs(A.topRightCorner(n1, n2)), linalg::max_abs(A.bottomLeftCorner(n2, n1)));
    if (off > kOrthoTol * std::max(1.0, linalg::max_abs(A))) {
        throw Error(ErrorKind::NotBlockDiagonal, "A has nonzero coupling between the split blocks");
    }

    JordanSplit split;
    split.n1 = n1;
    split.n2 = n2;
    split.A1 = A.topLeftCorner(n1, n1);
    split.A2 = A.bottomRightCorner(n2, n2);
    split.B1 = model.B.topRows(n1);
    split.B2 = model.B.bottomRows(n2);

    if (n1 > 0 && linalg::spectral_radius(split.A1) >= 1.0 - kEigTol) {
        throw Error(ErrorKind::NotSchur, "A1 has an eigenvalue on or outside the unit circle");
    }
    if (n2 > 0) {
        const Matrix gram = split.A2.transpose() * split.A2 - Matrix::Identity(n2, n2);
        if (linalg::max_abs(gram) > kOrthoTol) {
            throw Error(ErrorKind::NotOrthogonal, "A2^T A2 differs from the identity");
        }
    }
    split.kappa = compute_kappa(split.A2, split.B2);
    if (expected_kappa && *expected_kappa != split.kappa) {
        std::ostringstream os;
        os << "declared kappa " << *expected_kappa << " but (A2, B2) has reachability index " << split.kappa;
        throw Error(ErrorKind::KappaMismatch, os.str());
    }
    return split;
}

JordanSplit validate_split(const ValidatedModel& model, const JordanSplit& split)
{
    JordanSplit checked = validate_split(model, split.n1, split.n2, split.kappa);
    const auto differs = [](const Matrix& a, const Matrix& b) {
        return a.rows() != b.rows() || a.cols() != b.cols() || (a.size() > 0 && linalg::max_abs(a - b) > 0.0);
    };
    if (differs(checked.A1, split.A1) || differs(checked.A2, split.A2) || differs(checked.B1, split.B1) ||
        differs(checked.B2, split.B2)) {
        throw Error(ErrorKind::DimensionMismatch, "split blocks do not match the model matrices");
    }
    return checked;
}

void validate_horizon(const HorizonConfig& h, int kappa)
{
    if (h.N < 1 || h.Nc < 1 || h.Nc > h.N) {
        throw Error(ErrorKind::InvalidHorizon, "need N >= Nc >= 1");
    }
    if (h.Nc < kappa) {
        throw Error(ErrorKind::InvalidHorizon, "control horizon Nc must be at least kappa");
    }
    if (!(h.u_max > 0.0) || !(h.phi_max > 0.0)) {
        throw Error(ErrorKind::InvalidHorizon, "u_max and phi_max must be positive");
    }
}

void validate_weights(const CostWeights& w, int n, int m, int N)
{
    if (static_cast<int>(w.Wx.size()) != N || static_cast<int>(w.Wu.size()) != N) {
        throw Error(ErrorKind::DimensionMismatch, "need exactly N state and input weights");
    }
    for (const Matrix& wx : w.Wx) {
        require_dims(wx, n, n, "Wx");
        if (!linalg::is_positive_definite(wx)) {
            throw Error(ErrorKind::NotPositiveDefinite, "Wx");
        }
    }
    require_dims(w.WxN, n, n, "WxN");
    if (!linalg::is_positive_definite(w.WxN)) {
        throw Error(ErrorKind::NotPositiveDefinite, "WxN");
    }
    for (const Matrix& wu : w.Wu) {
        require_dims(wu, m, m, "Wu");
        if (!linalg::is_positive_definite(wu)) {
            throw Error(ErrorKind::NotPositiveDefinite, "Wu");
        }
    }
}

LiftedSystem build_lifted(const ValidatedModel& vm, const CostWeights& weights, int N)
{
    if (N < 1) {
        throw Error(ErrorKind::InvalidHorizon, "lifting needs N >= 1");
    }
    const SystemModel& model = vm.model();
    const int n = model.n();
    const int m = model.m();
    const int p = model.p();
    validate_weights(weights, n, m, N);

    LiftedSystem L;
    L.N = N;
    L.n = n;
    L.m = m;
    L.p = p;

    std::vector<Matrix> powers(static_cast<std::size_t>(N + 1));
    powers[0] = Matrix::Identity(n, n);
    for (int k = 1; k <= N; ++k) {
        powers[k] = model.A * powers[k - 1];
    }

    L.Aa.resize((N + 1) * n, n);
    L.Ba = Matrix::Zero((N + 1) * n, N * m);
    L.Da = Matrix::Zero((N + 1) * n, N * n);
    for (int i = 0; i <= N; ++i) {
        L.Aa.middleRows(i * n, n) = powers[i];
        for (int j = 0; j < i; ++j) {
            L.Ba.block(i * n, j * m, n, m) = powers[i - j - 1] * model.B;
            L.Da.block(i * n, j * n, n, n) = powers[i - j - 1];
        }
    }
    L.Ca = linalg::kron_identity(N + 1, model.C);

    L.Wxa = Matrix::Zero((N + 1) * n, (N + 1) * n);
    for (int k = 0; k < N; ++k) {
        L.Wxa.block(k * n, k * n, n, n) = weights.Wx[k];
    }
    L.Wxa.block(N * n, N * n, n, n) = weights.WxN;
    L.Wua = Matrix::Zero(N * m, N * m);
    for (int k = 0; k < N; ++k) {
        L.Wua.block(k * m, k * m, m, m) = weights.Wu[k];
    }
    L.M1 = linalg::symmetrize(L.Wua + L.Ba.transpose() * L.Wxa * L.Ba);
    L.sigma_W = linalg::kron_identity(N, model.sigma_w);
    return L;
}

}  // namespace srhc
