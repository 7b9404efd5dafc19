#pragma once

#include "srhc/cone_solver.hpp"
#include "srhc/lambdas.hpp"
#include "srhc/policy.hpp"
#include "srhc/stability.hpp"
#include "srhc/sysmodel.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace srhc {

/// Flat decision vector z = [eta (Nm); free theta entries; auxiliaries].
/// The first core_size() entries are the policy; auxiliaries are appended by
/// the constraint assemblers.
class VariableMap {
public:
    VariableMap() = default;
    VariableMap(int N, int m, int p);

    int N() const { return N_; }
    int m() const { return m_; }
    int p() const { return p_; }

    int eta(int i) const { return i; }
    /// Index of theta(row, col), or -1 for a structural zero.
    int theta(int row, int col) const { return theta_index_(row, col); }
    const std::vector<std::pair<int, int>>& theta_entries() const { return theta_entries_; }
    int theta_count() const { return static_cast<int>(theta_entries_.size()); }

    int core_size() const { return N_ * m_ + theta_count(); }
    int size() const { return core_size() + static_cast<int>(aux_labels_.size()); }
    int add_aux(std::string label);
    const std::vector<std::string>& aux_labels() const { return aux_labels_; }

    /// Core part of z for a policy (auxiliaries are not touched).
    Vector pack(const Policy& policy) const;
    Policy unpack(const Vector& z) const;

private:
    int N_ = 0;
    int m_ = 0;
    int p_ = 0;
    Eigen::MatrixXi theta_index_;
    std::vector<std::pair<int, int>> theta_entries_;
    std::vector<std::string> aux_labels_;
};

/// z_core^T H z_core + f^T z_core + constant.
struct QuadraticForm {
    Matrix H;
    Vector f;
    double constant = 0.0;

    double value(const Vector& z_core) const;
};

/// coeffs . z <= bound
struct LinearConstraint {
    std::vector<std::pair<int, double>> coeffs;
    double bound = 0.0;
    std::string tag;
};

/// ||A z_core + b|| <= c . z + d
struct SocConstraint {
    Matrix A;
    Vector b;
    std::vector<std::pair<int, double>> c;
    double d = 0.0;
    std::string tag;
};

/// quad(z_core) <= level
struct QuadConstraint {
    QuadraticForm form;
    double level = 0.0;
    std::string tag;
};

struct ConvexProgram {
    VariableMap vars;
    QuadraticForm objective;
    std::vector<LinearConstraint> linear;
    std::vector<SocConstraint> soc;
    std::vector<QuadConstraint> quad;
    /// (u_max, phi_max) when the hard input bound is part of the program.
    std::optional<std::pair<double, double>> hard_bound;

    double objective_value(const Vector& z) const;
    /// Largest constraint violation at z (0 when feasible).
    double max_violation(const Vector& z) const;
};

/// eta^T M eta + 2 eta^T M Theta L_phi + tr(Theta^T M Theta L_phiphi) + g^T eta + 2 tr(Theta^T R) + constant
QuadraticForm policy_quadratic(const VariableMap& vars, const LambdaSet& lset, const Matrix& M, const Vector& g,
                               const Matrix& R, double constant);

/// Expected horizon cost as a function of the policy. The constant uses
/// E[x x^T] = xhat xhat^T + lset.P_used.
QuadraticForm assemble_objective(const VariableMap& vars, const Vector& xhat, const LambdaSet& lset,
                                 const LiftedSystem& lifted);

/// |eta_i| + phi_max ||theta_i||_1 <= u_max per row, one auxiliary per free theta entry.
std::vector<LinearConstraint> assemble_input_constraints(VariableMap& vars, double u_max, double phi_max);

/// |eta_l - eta_{l+1}| + phi_max ||theta_l - theta_{l+1}||_1 <= delta_u_max per row and step.
std::vector<LinearConstraint> assemble_rate_constraints(VariableMap& vars, double delta_u_max, double phi_max);

/// Drift cone plus the linear rows bounding the induced inf-norm of R Theta.
void assemble_drift_constraint(VariableMap& vars, const DriftConstraintData& data, double phi_max,
                               std::vector<LinearConstraint>& linear, std::vector<SocConstraint>& soc);

struct SoftConstraintSpec {
    Matrix S;        ///< (N+1)n x (N+1)n, PSD
    Vector L;        ///< (N+1)n
    Matrix S_tilde;  ///< Nm x Nm, PSD
    double delta = 1e-3;
    int nu_bar = 30;
    std::optional<double> alpha_floor;
    std::optional<double> beta_floor;
};

/// Expected state-cost and input-energy constraints at levels alpha, beta.
/// `P` is the solve-time error covariance.
std::vector<QuadConstraint> assemble_soft_constraints(const VariableMap& vars, const Vector& xhat, const Matrix& P,
                                                      const LambdaSet& lset, const LiftedSystem& lifted,
                                                      const SoftConstraintSpec& spec, double alpha, double beta);

struct AlphaBeta {
    double alpha_star = 0.0;
    double beta_star = 0.0;
};

/// Levels at which the soft constraints hold for every bounded policy.
/// Throws DegenerateSpec when either level is not positive.
AlphaBeta compute_alpha_beta_star(const Vector& xhat, const Matrix& P, const LiftedSystem& lifted,
                                  const SoftConstraintSpec& spec, double u_max);

enum class SolveStatus { Optimal, Inaccurate, Infeasible, NumericalFailure };
std::string_view to_string(SolveStatus status) noexcept;

struct SolveOptions {
    ConeSolverOptions cone;
    /// Weight of the Tikhonov term added to the objective.
    double regularization = 1e-12;
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Policy policy;
    Vector z;
    double objective = 0.0;
    double max_violation = 0.0;
    int iterations = 0;

    bool usable() const { return status == SolveStatus::Optimal || status == SolveStatus::Inaccurate; }
};

ConeProblem to_cone_problem(const ConvexProgram& program, double regularization = 1e-12);
SolveResult solve(const ConvexProgram& program, const SolveOptions& options = {});

/// Flat H upper triangle, f, constraint blocks and the variable map.
nlohmann::json program_to_json(const ConvexProgram& program);

/// Data shared by all solves of one receding-horizon run.
struct OptimizerContext {
    LiftedSystem lifted;
    JordanSplit split;
    HorizonConfig horizon;
    StabilityParams stability;
    LambdaSet lambdas;
    std::optional<double> rate_limit;
    std::optional<SoftConstraintSpec> soft;
    SolveOptions solve_options;
};

/// Objective, hard input bound, drift constraint (when active) and rate limit.
ConvexProgram build_program(const OptimizerContext& ctx, const Vector& xhat);
/// Same plus the soft constraints at (alpha, beta).
ConvexProgram build_program(const OptimizerContext& ctx, const Vector& xhat, const Matrix& P, double alpha,
                            double beta);

struct BisectionStep {
    double alpha = 0.0;
    double beta = 0.0;
    bool feasible = false;
};

struct LevelBisectionResult {
    SolveResult solution;
    double alpha_upper = 0.0;
    double alpha_lower = 0.0;
    double beta_upper = 0.0;
    double beta_lower = 0.0;
    int iterations = 0;  ///< halving steps taken
    std::vector<BisectionStep> trace;
};

/// Joint bisection on (alpha, beta) starting from the upper levels. Any
/// unusable solve counts as infeasible. Throws InitialInfeasible if the first
/// solve at the upper levels fails.
LevelBisectionResult run_level_bisection(const std::function<SolveResult(double, double)>& solve_at,
                                         double alpha_star, double beta_star, const SoftConstraintSpec& spec);

LevelBisectionResult level_bisection(const OptimizerContext& ctx, const Vector& xhat, const Matrix& P);

}  // namespace srhc
