#pragma once

#include "srhc/linalg.hpp"

#include <string>
#include <utility>
#include <vector>

namespace srhc {

/// Bounded elementwise nonlinearity applied to innovations.
class SaturationFunction {
public:
    enum class Kind { Clip, PiecewiseLinear, Sigmoid };

    /// clip(s) = min(max(s, -phi_max), phi_max)
    static SaturationFunction clip(double phi_max);
    /// Linear interpolation through (s_i, v_i), constant beyond the end knots.
    /// Knot abscissae must be strictly increasing and |v_i| <= phi_max.
    static SaturationFunction piecewise_linear(std::vector<std::pair<double, double>> knots, double phi_max);
    /// phi_max * tanh(s / scale)
    static SaturationFunction sigmoid(double phi_max, double scale);

    Kind kind() const { return kind_; }
    double phi_max() const { return phi_max_; }
    double scale() const { return scale_; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    double operator()(double s) const;
    Vector apply(const Vector& s) const;
    void apply_inplace(Matrix& s) const;

    /// Values at -inf and +inf.
    std::pair<double, double> limits() const;

    /// Stable textual form used in cache keys and reports.
    std::string describe() const;

private:
    SaturationFunction() = default;

    Kind kind_ = Kind::Clip;
    double phi_max_ = 1.0;
    double scale_ = 1.0;
    std::vector<std::pair<double, double>> knots_;
};

}  // namespace srhc
