#pragma once

#include "srhc/linalg.hpp"
#include "srhc/saturation.hpp"

#include <vector>

namespace srhc {

/// u_l = eta_l + sum_{i <= l} theta_{l,i} phi(r_i) over a horizon of N steps.
/// theta is Nm x Np and block lower triangular with m x p blocks.
struct Policy {
    int N = 0;
    int m = 0;
    int p = 0;
    Vector eta;
    Matrix theta;

    static Policy zero(int N, int m, int p);

    /// True when every block strictly above the block diagonal is exactly zero.
    bool is_causal() const;

    /// max_i |eta_i| + phi_max ||theta_i||_1 - u_max; <= 0 means the hard bound holds.
    double bound_excess(double u_max, double phi_max) const;

    /// Rows of (eta, theta) whose certificate exceeds u_max are scaled back onto the bound.
    void clamp_to_bound(double u_max, double phi_max);
};

/// Input at horizon step `step` from the raw residuals r_0..r_step (exactly
/// step + 1 of them). More residuals than that raise CausalityViolation.
Vector apply_policy(const Policy& policy, const std::vector<Vector>& residuals, int step,
                    const SaturationFunction& sat);

}  // namespace srhc
