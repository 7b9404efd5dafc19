#include "srhc/policy.hpp"
#include "srhc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace srhc {

Policy Policy::zero(int N, int m, int p)
{
    Policy pol;
    pol.N = N;
    pol.m = m;
    pol.p = p;
    pol.eta = Vector::Zero(N * m);
    pol.theta = Matrix::Zero(N * m, N * p);
    return pol;
}

bool Policy::is_causal() const
{
    for (int l = 0; l < N; ++l) {
        for (int i = l + 1; i < N; ++i) {
            if ((theta.block(l * m, i * p, m, p).array() != 0.0).any()) {
                return false;
            }
        }
    }
    return true;
}

double Policy::bound_excess(double u_max, double phi_max) const
{
    double worst = -u_max;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double row = std::abs(eta(i)) + phi_max * theta.row(i).cwiseAbs().sum();
        worst = std::max(worst, row - u_max);
    }
    return worst;
}

void Policy::clamp_to_bound(double u_max, double phi_max)
{
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double row = std::abs(eta(i)) + phi_max * theta.row(i).cwiseAbs().sum();
        if (row > u_max) {
            const double s = u_max / row;
            eta(i) *= s;
            theta.row(i) *= s;
        }
    }
}

Vector apply_policy(const Policy& policy, const std::vector<Vector>& residuals, int step,
                    const SaturationFunction& sat)
{
    if (step < 0 || step >= policy.N) {
        throw Error(ErrorKind::DimensionMismatch, "policy step outside the horizon");
    }
    const auto have = static_cast<int>(residuals.size());
    if (have > step + 1) {
        throw Error(ErrorKind::CausalityViolation, "residuals beyond the current step were supplied");
    }
    if (have < step + 1) {
        throw Error(ErrorKind::DimensionMismatch, "policy needs one residual per elapsed step");
    }
    const int m = policy.m;
    const int p = policy.p;
    Vector u = policy.eta.segment(step * m, m);
    for (int i = 0; i <= step; ++i) {
        if (residuals[i].size() != p) {
            throw Error(ErrorKind::DimensionMismatch, "residual has wrong length");
        }
        u += policy.theta.block(step * m, i * p, m, p) * sat.apply(residuals[i]);
    }
    return u;
}

}  // namespace srhc
