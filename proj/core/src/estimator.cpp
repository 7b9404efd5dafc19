#include "srhc/estimator.hpp"
#include "srhc/errors.hpp"

#include <algorithm>

namespace srhc {
namespace {

// Returns P C^T (C P C^T + Sigma_v)^{-1} through an LLT solve.
Matrix kalman_gain(const Matrix& P_prior, const SystemModel& model)
{
    const Matrix S = linalg::symmetrize(model.C * P_prior * model.C.transpose() + model.sigma_v);
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::SingularInnovationCovariance, "C P C^T + sigma_v is not positive definite");
    }
    // K^T = S^{-1} C P
    return llt.solve(model.C * P_prior).transpose();
}

}  // namespace

FilterState initial_filter_state(const SystemModel& model)
{
    FilterState s;
    s.xhat_pred = model.xhat0.size() == model.n() ? model.xhat0 : Vector::Zero(model.n());
    s.P_pred = model.sigma_x0;
    s.xhat_filt = s.xhat_pred;
    s.P_filt = s.P_pred;
    s.t = 0;
    return s;
}

FilterState time_update(const FilterState& state, const Vector& u, const SystemModel& model)
{
    if (u.size() != model.m()) {
        throw Error(ErrorKind::DimensionMismatch, "time_update: input has wrong length");
    }
    FilterState out = state;
    out.xhat_pred = model.A * state.xhat_filt + model.B * u;
    out.P_pred = linalg::symmetrize(model.A * state.P_filt * model.A.transpose() + model.sigma_w);
    out.t = state.t + 1;
    return out;
}

FilterState measurement_update(const FilterState& state, const Vector& y, const SystemModel& model)
{
    if (y.size() != model.p()) {
        throw Error(ErrorKind::DimensionMismatch, "measurement_update: measurement has wrong length");
    }
    FilterState out = state;
    const FilterGains g = gains_from_prior(state.P_pred, model);
    out.K = g.K;
    out.Gamma = g.Gamma;
    out.Phi = g.Phi;
    out.xhat_filt = state.xhat_pred + g.K * (y - model.C * state.xhat_pred);
    out.P_filt = linalg::symmetrize(state.P_pred - g.K * model.C * state.P_pred);
    return out;
}

FilterGains gains_from_prior(const Matrix& P_prior, const SystemModel& model)
{
    FilterGains g;
    g.K = kalman_gain(P_prior, model);
    g.Gamma = Matrix::Identity(model.n(), model.n()) - g.K * model.C;
    g.Phi = g.Gamma * model.A;
    return g;
}

Matrix filtered_covariance(const Matrix& P_prior, const SystemModel& model)
{
    const Matrix K = kalman_gain(P_prior, model);
    return linalg::symmetrize(P_prior - K * model.C * P_prior);
}

RiccatiSolution riccati_limit(const SystemModel& model, double tol, int max_iter)
{
    return riccati_limit(model, model.sigma_x0, tol, max_iter);
}

RiccatiSolution riccati_limit(const SystemModel& model, const Matrix& P0, double tol, int max_iter)
{
    RiccatiSolution sol;
    Matrix P = P0;
    for (int k = 1; k <= max_iter; ++k) {
        const Matrix next =
            linalg::symmetrize(model.A * filtered_covariance(P, model) * model.A.transpose() + model.sigma_w);
        const double step = linalg::max_abs(next - P);
        sol.residual_history.push_back(step);
        P = next;
        if (step <= tol) {
            sol.P_star = P;
            sol.P_circ = filtered_covariance(P, model);
            sol.iterations = k;
            sol.residual = step;
            return sol;
        }
    }
    throw Error(ErrorKind::NoConvergence, "Riccati iteration did not converge within " + std::to_string(max_iter) +
                                              " iterations");
}

CovarianceBounds covariance_bounds(const SystemModel& model, int horizon)
{
    return covariance_bounds(model, riccati_limit(model), horizon);
}

CovarianceBounds covariance_bounds(const SystemModel& model, const RiccatiSolution& riccati, int horizon)
{
    constexpr double kSettleTol = 1e-6;
    const double n = static_cast<double>(model.n());
    const double normA = linalg::spectral_norm(model.A);
    const double normW = linalg::spectral_norm(model.sigma_w);
    const double normC = linalg::spectral_norm(model.C);
    const double minV = linalg::min_eigenvalue(model.sigma_v);

    CovarianceBounds b;
    b.T_prime = -1;
    Matrix P_prior = model.sigma_x0;
    for (int k = 0; k < horizon; ++k) {
        const Matrix P_filt = filtered_covariance(P_prior, model);
        if (b.T_prime < 0 && linalg::max_abs(P_filt - riccati.P_circ) <= kSettleTol) {
            b.T_prime = k;
        }
        if (b.T_prime >= 0) {
            b.rho = std::max(b.rho, n * linalg::max_eigenvalue(P_filt));
            const double gain = (normW + normA * normA * linalg::spectral_norm(P_filt)) * normC / minV;
            b.rho_m = std::max(b.rho_m, gain);
        }
        P_prior = linalg::symmetrize(model.A * P_filt * model.A.transpose() + model.sigma_w);
    }
    if (b.T_prime < 0) {
        throw Error(ErrorKind::NoConvergence, "filtered covariance did not settle within the scan window");
    }
    return b;
}

ErrorLift build_error_lift(const std::vector<FilterGains>& gains)
{
    if (gains.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "error lift needs at least one gain triple");
    }
    const int N = static_cast<int>(gains.size());
    const auto n = gains.front().Phi.rows();
    const auto p = gains.front().K.cols();

    ErrorLift L;
    L.Fe = Matrix::Zero((N + 1) * n, n);
    L.Fw = Matrix::Zero((N + 1) * n, N * n);
    L.Fv = Matrix::Zero((N + 1) * n, (N + 1) * p);
    L.Fe.topRows(n).setIdentity();
    // e_{k+1} = Phi_k e_k + Gamma_k w_k - K_k v_{k+1}
    for (int k = 0; k < N; ++k) {
        const FilterGains& g = gains[k];
        L.Fe.middleRows((k + 1) * n, n) = g.Phi * L.Fe.middleRows(k * n, n);
        L.Fw.middleRows((k + 1) * n, n) = g.Phi * L.Fw.middleRows(k * n, n);
        L.Fw.block((k + 1) * n, k * n, n, n) += g.Gamma;
        L.Fv.middleRows((k + 1) * n, n) = g.Phi * L.Fv.middleRows(k * n, n);
        L.Fv.block((k + 1) * n, (k + 1) * p, n, p) = g.K;
    }
    return L;
}

std::vector<FilterGains> steady_state_gains(const SystemModel& model, const RiccatiSolution& riccati, int N)
{
    return std::vector<FilterGains>(static_cast<std::size_t>(N), gains_from_prior(riccati.P_star, model));
}

}  // namespace srhc
