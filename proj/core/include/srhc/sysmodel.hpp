#pragma once

#include "srhc/linalg.hpp"

#include <optional>
#include <vector>

namespace srhc {

/// Linear plant x+ = A x + B u + w, y = C x + v with Gaussian w, v, x0.
struct SystemModel {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix sigma_w;
    Matrix sigma_v;
    Matrix sigma_x0;
    Vector xhat0;  ///< prior mean of x0; zero unless the caller says otherwise

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }
};

/// A SystemModel that passed validate_model(). Only constructible through it.
class ValidatedModel {
public:
    const SystemModel& model() const { return model_; }
    const SystemModel* operator->() const { return &model_; }

private:
    explicit ValidatedModel(SystemModel m) : model_(std::move(m)) {}
    friend ValidatedModel validate_model(SystemModel model);

    SystemModel model_;
};

/// Partition of the state into a Schur-stable part (first n1 coordinates)
/// and an orthogonal part (last n2 coordinates).
struct JordanSplit {
    int n1 = 0;
    int n2 = 0;
    Matrix A1;
    Matrix A2;
    Matrix B1;
    Matrix B2;
    int kappa = 0;  ///< reachability index of (A2, B2); 0 when n2 == 0
};

struct HorizonConfig {
    int N = 1;          ///< prediction horizon
    int Nc = 1;         ///< control horizon
    double u_max = 1.0;
    double phi_max = 1.0;
};

struct CostWeights {
    std::vector<Matrix> Wx;  ///< N state weights, k = 0..N-1
    Matrix WxN;
    std::vector<Matrix> Wu;  ///< N input weights

    static CostWeights uniform(const Matrix& wx, const Matrix& wx_terminal, const Matrix& wu, int N);
};

/// Horizon-stacked dynamics X = Aa x + Ba U + Da W, Y = Ca X + V and weights.
struct LiftedSystem {
    int N = 0;
    int n = 0;
    int m = 0;
    int p = 0;
    Matrix Aa;   ///< (N+1)n x n
    Matrix Ba;   ///< (N+1)n x Nm
    Matrix Da;   ///< (N+1)n x Nn
    Matrix Ca;   ///< (N+1)p x (N+1)n
    Matrix Wxa;  ///< (N+1)n x (N+1)n
    Matrix Wua;  ///< Nm x Nm
    Matrix M1;   ///< Wua + Ba^T Wxa Ba
    Matrix sigma_W;  ///< I_N (x) sigma_w, covariance of the stacked process noise
};

/// Checks dimensions, covariance definiteness, Lyapunov stability of A and
/// stabilizability of (A, B). Throws srhc::Error on failure.
ValidatedModel validate_model(SystemModel model);

/// Extracts and checks the (n1, n2) block split of A. The off-diagonal blocks
/// must vanish, A1 must be Schur, A2 orthogonal, and (A2, B2) reachable. When
/// `expected_kappa` is given it has to agree with the recomputed index.
JordanSplit validate_split(const ValidatedModel& model, int n1, int n2,
                           std::optional<int> expected_kappa = std::nullopt);

/// Re-checks an already populated split against the model.
JordanSplit validate_split(const ValidatedModel& model, const JordanSplit& split);

void validate_horizon(const HorizonConfig& horizon, int kappa);
void validate_weights(const CostWeights& weights, int n, int m, int N);

/// [A^{steps-1} B, ..., A B, B]
Matrix reachability_matrix(const Matrix& A, const Matrix& B, int steps);

/// Smallest k <= n2 such that the k-step reachability matrix has full row rank.
int compute_kappa(const Matrix& A2, const Matrix& B2);

LiftedSystem build_lifted(const ValidatedModel& model, const CostWeights& weights, int N);

}  // namespace srhc
