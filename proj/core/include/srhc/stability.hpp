#pragma once

#include "srhc/estimator.hpp"
#include "srhc/sysmodel.hpp"

#include <optional>

namespace srhc {

struct StabilityParams {
    double zeta = 0.0;
    double epsilon = 10.0;
    double r = 0.0;            ///< zeta + epsilon / 2
    double u_max_star = 0.0;
    int T = 0;                 ///< kappa * ceil(T_prime / kappa)
    int kappa = 0;
    int n2 = 0;
    double sigma_min_R = 0.0;
    CovarianceBounds bounds;
    Matrix R_kappa;            ///< n2 x kappa*m reachability matrix of (A2, B2)
    Matrix R_pinv;             ///< kappa*m x n2
    Matrix A2_kappa;           ///< A2^kappa

    /// Norm of the orthogonal estimate above which the drift constraint is imposed.
    double threshold() const { return zeta + epsilon; }
};

/// Second-order-cone data for the drift constraint
///   ||offset + R eta_{1:kappa m}|| + theta_coeff * phi_max * ||R Theta_{1:kappa m}||_inf <= rhs.
struct DriftConstraintData {
    Vector offset;       ///< A2^kappa xhat2
    Matrix R;            ///< n2 x kappa*m
    double rhs = 0.0;    ///< ||xhat2|| - r
    double theta_coeff;  ///< sqrt(n2)
    int kappa = 0;
};

double compute_zeta(const SystemModel& model, const JordanSplit& split, const CovarianceBounds& bounds);

/// (zeta + epsilon / 2) / sigma_min_R. Throws DegenerateReachability when sigma_min_R <= 0.
double compute_umax_star(double zeta, double epsilon, double sigma_min_R);

/// Full parameter set. With n2 == 0 the orthogonal part is empty: zeta, kappa
/// and u_max_star are 0 and no drift constraint is ever produced.
StabilityParams compute_stability_params(const ValidatedModel& model, const JordanSplit& split, double epsilon = 10.0,
                                         const std::optional<RiccatiSolution>& riccati = std::nullopt);

/// z * min(1, r / ||z||)
Vector ball_retraction(const Vector& z, double r);

/// -R^+ sat_r(A2^kappa xhat2), length kappa*m.
Vector candidate_policy(const Vector& xhat2, const StabilityParams& params, const JordanSplit& split);

/// Empty when n2 == 0 or ||xhat2|| < zeta + epsilon.
std::optional<DriftConstraintData> drift_constraint_data(const Vector& xhat2, const StabilityParams& params,
                                                         const JordanSplit& split, int N, int m);

/// rhs - lhs of the drift constraint at (eta, Theta); eta and Theta are full
/// horizon length, only their first kappa*m rows enter.
double drift_slack(const DriftConstraintData& data, const Vector& eta, const Matrix& theta, double phi_max);

}  // namespace srhc
