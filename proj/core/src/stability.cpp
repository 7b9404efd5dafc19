#include "srhc/stability.hpp"
#include "srhc/errors.hpp"

#include <cmath>

namespace srhc {

double compute_zeta(const SystemModel& model, const JordanSplit& split, const CovarianceBounds& bounds)
{
    if (split.n2 == 0 || split.kappa == 0) {
        return 0.0;
    }
    const double k = static_cast<double>(split.kappa);
    const double normCA = linalg::spectral_norm(model.C * model.A);
    const double normC = linalg::spectral_norm(model.C);
    return std::pow(k, 1.5) * bounds.rho_m *
           (normCA * std::sqrt(bounds.rho) + normC * std::sqrt(model.sigma_w.trace()) +
            std::sqrt(model.sigma_v.trace()));
}

double compute_umax_star(double zeta, double epsilon, double sigma_min_R)
{
    if (!(sigma_min_R > 0.0)) {
        throw Error(ErrorKind::DegenerateReachability, "smallest singular value of the reachability matrix is zero");
    }
    return (zeta + 0.5 * epsilon) / sigma_min_R;
}

StabilityParams compute_stability_params(const ValidatedModel& vm, const JordanSplit& split, double epsilon,
                                         const std::optional<RiccatiSolution>& riccati)
{
    if (!(epsilon > 0.0)) {
        throw Error(ErrorKind::DegenerateSpec, "epsilon must be positive");
    }
    const SystemModel& model = vm.model();
    const RiccatiSolution ric = riccati ? *riccati : riccati_limit(model);

    StabilityParams sp;
    sp.epsilon = epsilon;
    sp.kappa = split.kappa;
    sp.n2 = split.n2;
    sp.bounds = covariance_bounds(model, ric);
    sp.zeta = compute_zeta(model, split, sp.bounds);
    sp.r = sp.zeta + 0.5 * epsilon;
    if (split.n2 == 0) {
        sp.T = sp.bounds.T_prime;
        return sp;
    }
    sp.R_kappa = reachability_matrix(split.A2, split.B2, split.kappa);
    sp.sigma_min_R = linalg::min_singular_value(sp.R_kappa);
    sp.R_pinv = linalg::pseudo_inverse(sp.R_kappa);
    sp.A2_kappa = linalg::matrix_power(split.A2, split.kappa);
    sp.u_max_star = compute_umax_star(sp.zeta, epsilon, sp.sigma_min_R);
    sp.T = split.kappa * ((sp.bounds.T_prime + split.kappa - 1) / split.kappa);
    return sp;
}

Vector ball_retraction(const Vector& z, double r)
{
    const double norm = z.norm();
    if (norm <= r || norm == 0.0) {
        return z;
    }
    return z * (r / norm);
}

Vector candidate_policy(const Vector& xhat2, const StabilityParams& params, const JordanSplit& split)
{
    if (split.n2 == 0) {
        return Vector();
    }
    if (xhat2.size() != split.n2) {
        throw Error(ErrorKind::DimensionMismatch, "xhat2 has wrong length");
    }
    return -params.R_pinv * ball_retraction(params.A2_kappa * xhat2, params.r);
}

std::optional<DriftConstraintData> drift_constraint_data(const Vector& xhat2, const StabilityParams& params,
                                                         const JordanSplit& split, int N, int m)
{
    if (split.n2 == 0) {
        return std::nullopt;
    }
    if (xhat2.size() != split.n2) {
        throw Error(ErrorKind::DimensionMismatch, "xhat2 has wrong length");
    }
    if (split.kappa > N) {
        throw Error(ErrorKind::InvalidHorizon, "kappa exceeds the prediction horizon");
    }
    if (params.R_kappa.cols() != split.kappa * m) {
        throw Error(ErrorKind::DimensionMismatch, "input dimension does not match the reachability matrix");
    }
    const double norm = xhat2.norm();
    if (norm < params.threshold()) {
        return std::nullopt;
    }
    DriftConstraintData d;
    d.offset = params.A2_kappa * xhat2;
    d.R = params.R_kappa;
    d.rhs = norm - params.r;
    d.theta_coeff = std::sqrt(static_cast<double>(split.n2));
    d.kappa = split.kappa;
    return d;
}

double drift_slack(const DriftConstraintData& d, const Vector& eta, const Matrix& theta, double phi_max)
{
    const auto rows = d.R.cols();
    const double soc = (d.offset + d.R * eta.head(rows)).norm();
    double inf_norm = 0.0;
    if (theta.cols() > 0) {
        const Matrix RT = d.R * theta.topRows(rows);
        inf_norm = RT.cwiseAbs().rowwise().sum().maxCoeff();
    }
    return d.rhs - (soc + d.theta_coeff * phi_max * inf_norm);
}

}  // namespace srhc
