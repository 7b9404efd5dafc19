#include "srhc/cone_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace srhc {

int ConeDims::rows() const
{
    return linear + std::accumulate(soc.begin(), soc.end(), 0);
}

std::string_view to_string(ConeStatus status) noexcept
{
    switch (status) {
    case ConeStatus::Optimal:
        return "optimal";
    case ConeStatus::Inaccurate:
        return "inaccurate";
    case ConeStatus::Infeasible:
        return "infeasible";
    case ConeStatus::NumericalFailure:
        return "numerical_failure";
    }
    return "unknown";
}

namespace cone {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// J-norm squared, v0^2 - ||v1||^2.
double jdot(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v)
{
    return u(0) * v(0) - u.tail(u.size() - 1).dot(v.tail(v.size() - 1));
}

template <typename F>
void for_each_soc(const ConeDims& dims, F&& f)
{
    int offset = dims.linear;
    for (std::size_t k = 0; k < dims.soc.size(); ++k) {
        f(k, offset, dims.soc[k]);
        offset += dims.soc[k];
    }
}

// Dense k x k matrix of the scaled hyperbolic reflection (inverse when `inverse`).
Matrix soc_block_matrix(double beta, const Vector& w, bool inverse)
{
    const auto k = w.size();
    const double w0 = w(0);
    const Vector w1 = w.tail(k - 1);
    const double sgn = inverse ? -1.0 : 1.0;
    Matrix M(k, k);
    M(0, 0) = w0;
    M.block(0, 1, 1, k - 1) = sgn * w1.transpose();
    M.block(1, 0, k - 1, 1) = sgn * w1;
    M.block(1, 1, k - 1, k - 1) = Matrix::Identity(k - 1, k - 1) + w1 * w1.transpose() / (1.0 + w0);
    return inverse ? Matrix(M / beta) : Matrix(M * beta);
}

}  // namespace

Vector identity(const ConeDims& dims)
{
    Vector e = Vector::Zero(dims.rows());
    e.head(dims.linear).setOnes();
    for_each_soc(dims, [&](std::size_t, int off, int) { e(off) = 1.0; });
    return e;
}

double identity_shift(const Vector& v, const ConeDims& dims)
{
    double t = -kInf;
    if (dims.linear > 0) {
        t = std::max(t, -v.head(dims.linear).minCoeff());
    }
    for_each_soc(dims, [&](std::size_t, int off, int k) {
        t = std::max(t, v.segment(off + 1, k - 1).norm() - v(off));
    });
    return t;
}

NtScaling nt_scaling(const Vector& s, const Vector& z, const ConeDims& dims)
{
    NtScaling W;
    W.d = (s.head(dims.linear).array() / z.head(dims.linear).array()).sqrt();
    W.lambda.resize(s.size());
    W.lambda.head(dims.linear) = (s.head(dims.linear).array() * z.head(dims.linear).array()).sqrt();
    for_each_soc(dims, [&](std::size_t, int off, int k) {
        const Vector sk = s.segment(off, k);
        const Vector zk = z.segment(off, k);
        const double sn = std::sqrt(std::max(jdot(sk, sk), 0.0));
        const double zn = std::sqrt(std::max(jdot(zk, zk), 0.0));
        const Vector sb = sk / sn;
        Vector zb = zk / zn;
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        zb.tail(k - 1) *= -1.0;  // J zb
        Vector w = (sb + zb) / (2.0 * gamma);
        const double beta = std::sqrt(sn / zn);
        W.beta.push_back(beta);
        W.w.push_back(std::move(w));
    });
    W.lambda.tail(s.size() - dims.linear) = apply_w(W, z, dims).tail(s.size() - dims.linear);
    return W;
}

Vector apply_w(const NtScaling& W, const Vector& v, const ConeDims& dims)
{
    Vector out(v.size());
    out.head(dims.linear) = W.d.cwiseProduct(v.head(dims.linear));
    for_each_soc(dims, [&](std::size_t idx, int off, int k) {
        const Vector& w = W.w[idx];
        const double w0 = w(0);
        const auto w1 = w.tail(k - 1);
        const auto v1 = v.segment(off + 1, k - 1);
        const double a = w1.dot(v1);
        const double v0 = v(off);
        out(off) = W.beta[idx] * (w0 * v0 + a);
        out.segment(off + 1, k - 1) = W.beta[idx] * (v1 + (v0 + a / (1.0 + w0)) * w1);
    });
    return out;
}

Vector apply_w_inverse(const NtScaling& W, const Vector& v, const ConeDims& dims)
{
    Vector out(v.size());
    out.head(dims.linear) = v.head(dims.linear).cwiseQuotient(W.d);
    for_each_soc(dims, [&](std::size_t idx, int off, int k) {
        const Vector& w = W.w[idx];
        const double w0 = w(0);
        const auto w1 = w.tail(k - 1);
        const auto v1 = v.segment(off + 1, k - 1);
        const double a = w1.dot(v1);
        const double v0 = v(off);
        out(off) = (w0 * v0 - a) / W.beta[idx];
        out.segment(off + 1, k - 1) = (v1 + (-v0 + a / (1.0 + w0)) * w1) / W.beta[idx];
    });
    return out;
}

Vector jordan_product(const Vector& u, const Vector& v, const ConeDims& dims)
{
    Vector out(u.size());
    out.head(dims.linear) = u.head(dims.linear).cwiseProduct(v.head(dims.linear));
    for_each_soc(dims, [&](std::size_t, int off, int k) {
        out(off) = u.segment(off, k).dot(v.segment(off, k));
        out.segment(off + 1, k - 1) = u(off) * v.segment(off + 1, k - 1) + v(off) * u.segment(off + 1, k - 1);
    });
    return out;
}

Vector jordan_divide(const Vector& lambda, const Vector& y, const ConeDims& dims)
{
    Vector out(y.size());
    out.head(dims.linear) = y.head(dims.linear).cwiseQuotient(lambda.head(dims.linear));
    for_each_soc(dims, [&](std::size_t, int off, int k) {
        const double l0 = lambda(off);
        const auto l1 = lambda.segment(off + 1, k - 1);
        const auto y1 = y.segment(off + 1, k - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double x0 = (l0 * y(off) - l1.dot(y1)) / det;
        out(off) = x0;
        out.segment(off + 1, k - 1) = (y1 - x0 * l1) / l0;
    });
    return out;
}

double soc_step_length(const Vector& lambda, const Vector& d)
{
    const double a = jdot(d, d);
    const double b = 2.0 * jdot(lambda, d);
    const double c = jdot(lambda, lambda);
    if (c <= 0.0) {
        return 0.0;
    }
    if (a == 0.0) {
        return b < 0.0 ? -c / b : kInf;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        return kInf;
    }
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (b + std::copysign(sq, b));
    double best = kInf;
    for (const double r : {qq / a, qq != 0.0 ? c / qq : kInf}) {
        if (r > 0.0 && r < best) {
            best = r;
        }
    }
    return best;
}

double max_step(const Vector& lambda, const Vector& d, const ConeDims& dims)
{
    double t = kInf;
    for (int i = 0; i < dims.linear; ++i) {
        if (d(i) < 0.0) {
            t = std::min(t, -lambda(i) / d(i));
        }
    }
    for_each_soc(dims, [&](std::size_t, int off, int k) {
        t = std::min(t, soc_step_length(lambda.segment(off, k), d.segment(off, k)));
    });
    return t;
}

}  // namespace cone

namespace {

struct Residuals {
    Vector rx;
    Vector rz;
    double pcost = 0.0;
    double dcost = 0.0;
    double gap = 0.0;
    double pres = 0.0;
    double dres = 0.0;
    double relgap = std::numeric_limits<double>::infinity();
};

Residuals residuals(const ConeProblem& pr, const Vector& x, const Vector& s, const Vector& z, double resx0,
                    double resz0)
{
    Residuals r;
    const Vector Px = pr.P * x;
    r.rx = Px + pr.q + pr.G.transpose() * z;
    r.rz = pr.G * x + s - pr.h;
    r.pcost = 0.5 * x.dot(Px) + pr.q.dot(x);
    r.gap = s.dot(z);
    r.dcost = r.pcost + z.dot(r.rz) - r.gap;
    r.pres = r.rz.norm() / resz0;
    r.dres = r.rx.norm() / resx0;
    if (r.pcost < 0.0) {
        r.relgap = r.gap / -r.pcost;
    } else if (r.dcost > 0.0) {
        r.relgap = r.gap / r.dcost;
    }
    return r;
}

bool converged(const Residuals& r, const ConeSolverOptions& o, double factor)
{
    return r.pres <= o.feastol * factor && r.dres <= o.feastol * factor &&
           (r.gap <= o.abstol * factor || r.relgap <= o.reltol * factor);
}

// Factorization of P + Gs^T Gs, Gs = W^{-1} G.
class KktSolver {
public:
    explicit KktSolver(const ConeProblem& pr) : pr_(pr) {}

    bool factor(const cone::NtScaling* W)
    {
        const ConeDims& dims = pr_.dims;
        H_ = pr_.P;
        if (dims.linear > 0) {
            const SparseRowMatrix Gl = pr_.G.topRows(dims.linear);
            SparseRowMatrix Gls = Gl;
            if (W != nullptr) {
                for (int i = 0; i < dims.linear; ++i) {
                    Gls.row(i) /= W->d(i);
                }
            }
            const Eigen::SparseMatrix<double> Gt = Gls.transpose();
            H_ += Matrix(Gt * Gls);
        }
        int off = dims.linear;
        for (std::size_t idx = 0; idx < dims.soc.size(); ++idx) {
            const int k = dims.soc[idx];
            Matrix Gq = Matrix(pr_.G.middleRows(off, k));
            if (W != nullptr) {
                Gq = cone::soc_block_matrix(W->beta[idx], W->w[idx], true) * Gq;
            }
            H_.noalias() += Gq.transpose() * Gq;
            off += k;
        }
        llt_.compute(H_);
        use_ldlt_ = false;
        if (llt_.info() == Eigen::Success) {
            return true;
        }
        // Singular or indefinite by round-off: factor a shifted copy and let
        // solve() refine against the exact matrix.
        Matrix shifted = H_;
        const double scale = std::max(1.0, H_.diagonal().cwiseAbs().maxCoeff());
        shifted.diagonal().array() += 1e-13 * scale;
        llt_.compute(shifted);
        if (llt_.info() == Eigen::Success) {
            return true;
        }
        ldlt_.compute(shifted);
        use_ldlt_ = true;
        return ldlt_.info() == Eigen::Success;
    }

    Vector solve(const Vector& rhs) const
    {
        Vector x = raw_solve(rhs);
        for (int k = 0; k < 2; ++k) {
            const Vector res = rhs - H_ * x;
            x += raw_solve(res);
        }
        return x;
    }

private:
    Vector raw_solve(const Vector& rhs) const
    {
        return use_ldlt_ ? Vector(ldlt_.solve(rhs)) : Vector(llt_.solve(rhs));
    }

    const ConeProblem& pr_;
    Matrix H_;
    Eigen::LLT<Matrix> llt_;
    Eigen::LDLT<Matrix> ldlt_;
    bool use_ldlt_ = false;
};

}  // namespace

namespace {

ConeSolution run_interior_point(const ConeProblem& pr, const ConeSolverOptions& opt)
{
    const ConeDims& dims = pr.dims;
    const Vector e = cone::identity(dims);
    const double resx0 = std::max(1.0, pr.q.norm());
    const double resz0 = std::max(1.0, pr.h.norm());

    ConeSolution sol;
    KktSolver kkt(pr);

    // Starting point from the W = I system.
    if (!kkt.factor(nullptr)) {
        sol.status = ConeStatus::NumericalFailure;
        return sol;
    }
    Vector x = kkt.solve(-pr.q + pr.G.transpose() * pr.h);
    Vector s = pr.h - pr.G * x;
    Vector z = -s;
    const double ts = cone::identity_shift(s, dims);
    if (ts >= -1e-8 * std::max(s.norm(), 1.0)) {
        s += (1.0 + ts) * e;
    }
    const double tz = cone::identity_shift(z, dims);
    if (tz >= -1e-8 * std::max(z.norm(), 1.0)) {
        z += (1.0 + tz) * e;
    }

    Residuals r;
    for (int it = 0; it <= opt.max_iter; ++it) {
        r = residuals(pr, x, s, z, resx0, resz0);
        sol.iterations = it;
        if (!std::isfinite(r.pres) || !std::isfinite(r.dres) || !std::isfinite(r.gap)) {
            break;
        }
        if (converged(r, opt, 1.0)) {
            sol.status = ConeStatus::Optimal;
            break;
        }
        if (it == opt.max_iter) {
            break;
        }

        const cone::NtScaling W = cone::nt_scaling(s, z, dims);
        const Vector& lambda = W.lambda;
        if (!lambda.allFinite() || !kkt.factor(&W)) {
            break;
        }
        const double mu = r.gap / static_cast<double>(dims.degree());

        // Solves  P dx + G^T W^{-1} dzt = bx,  G dx + W dst = bz,  dst + dzt = bu.
        auto solve_newton = [&](const Vector& bx, const Vector& bz, const Vector& bu, Vector& dx, Vector& dzt,
                                Vector& dst) {
            const Vector t = cone::apply_w_inverse(W, cone::apply_w_inverse(W, bz, dims) - bu, dims);
            dx = kkt.solve(bx + pr.G.transpose() * t);
            dzt = cone::apply_w_inverse(W, pr.G * dx - bz, dims) + bu;
            dst = bu - dzt;
        };
        // u is the complementarity term lambda \ rc; one refinement pass on the full system.
        auto newton = [&](const Vector& u, Vector& dx, Vector& dzt, Vector& dst) {
            const Vector bx = -r.rx;
            const Vector bz = -r.rz;
            solve_newton(bx, bz, u, dx, dzt, dst);
            const Vector ex = bx - pr.P * dx - pr.G.transpose() * cone::apply_w_inverse(W, dzt, dims);
            const Vector ez = bz - pr.G * dx - cone::apply_w(W, dst, dims);
            const Vector eu = u - dst - dzt;
            Vector cx, cz, cs;
            solve_newton(ex, ez, eu, cx, cz, cs);
            dx += cx;
            dzt += cz;
            dst += cs;
        };

        Vector dx, dzt, dst;
        newton(-lambda, dx, dzt, dst);
        const double a_aff =
            std::min(1.0, std::min(cone::max_step(lambda, dst, dims), cone::max_step(lambda, dzt, dims)));
        const double sigma = std::pow(1.0 - a_aff, 3.0);

        const Vector lsq = cone::jordan_product(lambda, lambda, dims);
        const Vector rc = -lsq - cone::jordan_product(dst, dzt, dims) + sigma * mu * e;
        newton(cone::jordan_divide(lambda, rc, dims), dx, dzt, dst);
        const double amax = std::min(cone::max_step(lambda, dst, dims), cone::max_step(lambda, dzt, dims));
        const double alpha = std::min(1.0, opt.step_fraction * amax);
        if (!(alpha > 1e-14) || !dx.allFinite()) {
            break;
        }
        x += alpha * dx;
        s += alpha * cone::apply_w(W, dst, dims);
        z += alpha * cone::apply_w_inverse(W, dzt, dims);

        // Guard against round-off pushing iterates onto the boundary.
        if (cone::identity_shift(s, dims) >= 0.0 || cone::identity_shift(z, dims) >= 0.0) {
            break;
        }
    }
    sol.x = x;
    sol.s = s;
    sol.z = z;
    sol.primal_objective = r.pcost;
    sol.dual_objective = r.dcost;
    sol.gap = r.gap;
    sol.primal_residual = r.pres;
    sol.dual_residual = r.dres;
    if (sol.status != ConeStatus::Optimal) {
        sol.status = converged(r, opt, opt.relaxed_factor) ? ConeStatus::Inaccurate : ConeStatus::NumericalFailure;
    }
    return sol;
}

// min tau  s.t.  G x - tau e + s = h, tau >= -1.
double feasibility_shift(const ConeProblem& pr, const ConeSolverOptions& opt)
{
    const int nx = static_cast<int>(pr.q.size());
    const ConeDims& dims = pr.dims;
    const Vector e = cone::identity(dims);

    ConeProblem ph;
    ph.dims = dims;
    ph.dims.linear += 1;
    const int rows = ph.dims.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(pr.G.nonZeros() + rows + 1));
    trip.emplace_back(0, nx, -1.0);
    for (int i = 0; i < pr.G.outerSize(); ++i) {
        for (SparseRowMatrix::InnerIterator it(pr.G, i); it; ++it) {
            trip.emplace_back(i + 1, it.col(), it.value());
        }
        if (e(i) != 0.0) {
            trip.emplace_back(i + 1, nx, -e(i));
        }
    }
    ph.G.resize(rows, nx + 1);
    ph.G.setFromTriplets(trip.begin(), trip.end());
    ph.h.resize(rows);
    ph.h(0) = 1.0;
    ph.h.tail(rows - 1) = pr.h;
    ph.P = Matrix::Zero(nx + 1, nx + 1);
    ph.q = Vector::Zero(nx + 1);
    ph.q(nx) = 1.0;

    ConeSolverOptions o = opt;
    o.classify_failures = false;
    o.max_iter = std::max(opt.max_iter, 100);
    const ConeSolution sol = run_interior_point(ph, o);
    if (!sol.x.allFinite() || sol.x.size() != nx + 1) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sol.usable() ? sol.x(nx) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ConeSolution solve_cone_program(const ConeProblem& problem, const ConeSolverOptions& options)
{
    ConeSolution sol = run_interior_point(problem, options);
    if (sol.usable() || !options.classify_failures) {
        return sol;
    }
    const double tau = feasibility_shift(problem, options);
    sol.infeasibility_shift = tau;
    const double threshold = options.feastol * options.relaxed_factor * (1.0 + problem.h.cwiseAbs().maxCoeff());
    if (std::isfinite(tau) && tau > threshold) {
        sol.status = ConeStatus::Infeasible;
    }
    return sol;
}

}  // namespace srhc
