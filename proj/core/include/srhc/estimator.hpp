#pragma once

#include "srhc/sysmodel.hpp"

#include <vector>

namespace srhc {

/// Conditional mean/covariance pairs of the filter at time t.
struct FilterState {
    Vector xhat_filt;  ///< E[x_t | Y_t]
    Matrix P_filt;
    Vector xhat_pred;  ///< E[x_{t+1} | Y_t] after time_update, E[x_t | Y_{t-1}] before
    Matrix P_pred;
    Matrix K;
    Matrix Gamma;      ///< I - K C
    Matrix Phi;        ///< Gamma A
    int t = 0;
};

/// Gain triple for one error-propagation step.
struct FilterGains {
    Matrix K;
    Matrix Gamma;
    Matrix Phi;
};

struct RiccatiSolution {
    Matrix P_star;   ///< predicted (prior) fixed point
    Matrix P_circ;   ///< filtered fixed point
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

struct CovarianceBounds {
    double rho = 0.0;    ///< bound on tr(P_{t|t})
    double rho_m = 0.0;  ///< bound on ||K_t||
    int T_prime = 0;
};

/// Horizon error maps: E = Fe e + Fw W - Fv V, stacked over k = 0..N.
struct ErrorLift {
    Matrix Fe;  ///< (N+1)n x n
    Matrix Fw;  ///< (N+1)n x Nn
    Matrix Fv;  ///< (N+1)n x (N+1)p
};

/// State before the first measurement: prior mean xhat0, covariance sigma_x0.
FilterState initial_filter_state(const SystemModel& model);

FilterState time_update(const FilterState& state, const Vector& u, const SystemModel& model);
FilterState measurement_update(const FilterState& state, const Vector& y, const SystemModel& model);

/// Gain computed from a prior covariance.
FilterGains gains_from_prior(const Matrix& P_prior, const SystemModel& model);

/// Filtered covariance from a prior covariance.
Matrix filtered_covariance(const Matrix& P_prior, const SystemModel& model);

/// Iterates the prior covariance recursion from sigma_x0 (or `P0`) until the
/// max-norm step is <= tol.
RiccatiSolution riccati_limit(const SystemModel& model, double tol = 1e-12, int max_iter = 100000);
RiccatiSolution riccati_limit(const SystemModel& model, const Matrix& P0, double tol, int max_iter);

/// Scans the first `horizon` filtered covariance iterates starting at sigma_x0.
CovarianceBounds covariance_bounds(const SystemModel& model, const RiccatiSolution& riccati, int horizon = 2000);
CovarianceBounds covariance_bounds(const SystemModel& model, int horizon = 2000);

/// gains[k] drives the transition k -> k+1; gains.size() is the horizon N.
ErrorLift build_error_lift(const std::vector<FilterGains>& gains);

/// N copies of the steady-state gain of a Riccati solution.
std::vector<FilterGains> steady_state_gains(const SystemModel& model, const RiccatiSolution& riccati, int N);

}  // namespace srhc
