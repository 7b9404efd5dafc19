#pragma once

#include "srhc/linalg.hpp"

#include <Eigen/Sparse>

#include <limits>
#include <string_view>
#include <vector>

namespace srhc {

/// Cone K = R_+^linear x Q^{soc[0]} x ... ; rows of G are ordered the same way.
struct ConeDims {
    int linear = 0;
    std::vector<int> soc;

    int rows() const;
    int degree() const { return linear + static_cast<int>(soc.size()); }
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// minimize 1/2 x^T P x + q^T x  subject to  G x + s = h, s in K.
struct ConeProblem {
    Matrix P;
    Vector q;
    SparseRowMatrix G;
    Vector h;
    ConeDims dims;
};

struct ConeSolverOptions {
    double feastol = 1e-10;
    double abstol = 1e-10;
    double reltol = 1e-10;
    int max_iter = 80;
    double step_fraction = 0.99;
    /// Tolerances are multiplied by this factor for an Inaccurate result.
    double relaxed_factor = 1e3;
    /// Run a feasibility problem when the main iteration fails, to tell
    /// Infeasible apart from NumericalFailure.
    bool classify_failures = true;
};

enum class ConeStatus { Optimal, Inaccurate, Infeasible, NumericalFailure };

std::string_view to_string(ConeStatus status) noexcept;

struct ConeSolution {
    ConeStatus status = ConeStatus::NumericalFailure;
    Vector x;
    Vector s;
    Vector z;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double primal_residual = 0.0;  ///< ||G x + s - h|| / max(1, ||h||)
    double dual_residual = 0.0;    ///< ||P x + q + G^T z|| / max(1, ||q||)
    int iterations = 0;
    /// Optimal shift of the feasibility problem when it was run, else NaN.
    double infeasibility_shift = std::numeric_limits<double>::quiet_NaN();

    bool usable() const { return status == ConeStatus::Optimal || status == ConeStatus::Inaccurate; }
};

ConeSolution solve_cone_program(const ConeProblem& problem, const ConeSolverOptions& options = {});

namespace cone {

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct NtScaling {
    Vector d;                 ///< orthant part, W = diag(d)
    std::vector<double> beta; ///< one per second-order cone
    std::vector<Vector> w;    ///< normalized hyperbolic vectors, w0^2 - ||w1||^2 = 1
    Vector lambda;
};

NtScaling nt_scaling(const Vector& s, const Vector& z, const ConeDims& dims);
Vector apply_w(const NtScaling& W, const Vector& v, const ConeDims& dims);
Vector apply_w_inverse(const NtScaling& W, const Vector& v, const ConeDims& dims);

/// Jordan product u o v and its inverse (solve lambda o x = y for x).
Vector jordan_product(const Vector& u, const Vector& v, const ConeDims& dims);
Vector jordan_divide(const Vector& lambda, const Vector& y, const ConeDims& dims);

/// Largest t >= 0 with lambda + t d in the cone (infinity when unbounded).
/// lambda must be interior.
double max_step(const Vector& lambda, const Vector& d, const ConeDims& dims);

/// Same for a single second-order cone block.
double soc_step_length(const Vector& lambda, const Vector& d);

/// Smallest t with v + t e in the cone, where e is the cone identity.
double identity_shift(const Vector& v, const ConeDims& dims);

Vector identity(const ConeDims& dims);

}  // namespace cone
}  // namespace srhc
