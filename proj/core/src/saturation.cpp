#include "srhc/saturation.hpp"
#include "srhc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace srhc {

SaturationFunction SaturationFunction::clip(double phi_max)
{
    if (!(phi_max > 0.0)) {
        throw Error(ErrorKind::DegenerateSpec, "saturation bound must be positive");
    }
    SaturationFunction f;
    f.kind_ = Kind::Clip;
    f.phi_max_ = phi_max;
    return f;
}

SaturationFunction SaturationFunction::piecewise_linear(std::vector<std::pair<double, double>> knots, double phi_max)
{
    if (!(phi_max > 0.0)) {
        throw Error(ErrorKind::DegenerateSpec, "saturation bound must be positive");
    }
    if (knots.empty()) {
        throw Error(ErrorKind::DegenerateSpec, "piecewise linear saturation needs at least one knot");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second)) {
            throw Error(ErrorKind::DegenerateSpec, "knots must be finite");
        }
        if (std::abs(knots[i].second) > phi_max) {
            throw Error(ErrorKind::DegenerateSpec, "knot value exceeds the saturation bound");
        }
        if (i > 0 && !(knots[i].first > knots[i - 1].first)) {
            throw Error(ErrorKind::DegenerateSpec, "knot abscissae must be strictly increasing");
        }
    }
    SaturationFunction f;
    f.kind_ = Kind::PiecewiseLinear;
    f.phi_max_ = phi_max;
    f.knots_ = std::move(knots);
    return f;
}

SaturationFunction SaturationFunction::sigmoid(double phi_max, double scale)
{
    if (!(phi_max > 0.0) || !(scale > 0.0)) {
        throw Error(ErrorKind::DegenerateSpec, "sigmoid needs positive bound and scale");
    }
    SaturationFunction f;
    f.kind_ = Kind::Sigmoid;
    f.phi_max_ = phi_max;
    f.scale_ = scale;
    return f;
}

double SaturationFunction::operator()(double s) const
{
    switch (kind_) {
    case Kind::Clip:
        return std::clamp(s, -phi_max_, phi_max_);
    case Kind::Sigmoid:
        return phi_max_ * std::tanh(s / scale_);
    case Kind::PiecewiseLinear: {
        if (std::isnan(s)) {
            return s;
        }
        if (s <= knots_.front().first) {
            return knots_.front().second;
        }
        if (s >= knots_.back().first) {
            return knots_.back().second;
        }
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                                         [](double v, const std::pair<double, double>& k) { return v < k.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (s - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
    }
    }
    return 0.0;
}

Vector SaturationFunction::apply(const Vector& s) const
{
    Vector out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        out(i) = (*this)(s(i));
    }
    return out;
}

void SaturationFunction::apply_inplace(Matrix& s) const
{
    if (kind_ == Kind::Clip) {
        s = s.cwiseMax(-phi_max_).cwiseMin(phi_max_);
        return;
    }
    s = s.unaryExpr([this](double v) { return (*this)(v); });
}

std::pair<double, double> SaturationFunction::limits() const
{
    switch (kind_) {
    case Kind::Clip:
    case Kind::Sigmoid:
        return {-phi_max_, phi_max_};
    case Kind::PiecewiseLinear:
        return {knots_.front().second, knots_.back().second};
    }
    return {0.0, 0.0};
}

std::string SaturationFunction::describe() const
{
    char buf[64];
    std::string out;
    switch (kind_) {
    case Kind::Clip:
        std::snprintf(buf, sizeof(buf), "clip(%.17g)", phi_max_);
        return buf;
    case Kind::Sigmoid:
        std::snprintf(buf, sizeof(buf), "sigmoid(%.17g,%.17g)", phi_max_, scale_);
        return buf;
    case Kind::PiecewiseLinear:
        std::snprintf(buf, sizeof(buf), "pwl(%.17g", phi_max_);
        out = buf;
        for (const auto& [s, v] : knots_) {
            std::snprintf(buf, sizeof(buf), ";%.17g:%.17g", s, v);
            out += buf;
        }
        return out + ")";
    }
    return out;
}

}  // namespace srhc
