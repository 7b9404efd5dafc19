#pragma once

#include "srhc/model_io.hpp"
#include "srhc/sysmodel.hpp"

#include <random>

namespace srhc::testing {

/// Three-state plant with one contracting mode and a quarter-turn rotation.
inline SystemModel rotation_plant()
{
    SystemModel m;
    m.A = Matrix::Zero(3, 3);
    m.A(0, 0) = 0.5;
    m.A(1, 2) = -1.0;
    m.A(2, 1) = 1.0;
    m.B = Matrix(3, 1);
    m.B << 1.0, 0.0, 1.0;
    m.C = Matrix::Identity(3, 3);
    m.sigma_w = 10.0 * Matrix::Identity(3, 3);
    m.sigma_v = 10.0 * Matrix::Identity(3, 3);
    m.sigma_x0 = Matrix::Identity(3, 3);
    m.xhat0 = Vector::Zero(3);
    return m;
}

inline constexpr double kRotationUmax = 168.6783;

inline HorizonConfig rotation_horizon()
{
    HorizonConfig h;
    h.N = 5;
    h.Nc = 2;
    h.u_max = kRotationUmax;
    h.phi_max = 1.0;
    return h;
}

inline CostWeights rotation_weights(int N = 5)
{
    return CostWeights::uniform(Matrix::Identity(3, 3), Matrix::Identity(3, 3), Matrix::Identity(1, 1), N);
}

inline Vector rotation_x0()
{
    Vector x(3);
    x << 97.38, 100.19, 99.78;
    return x;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = nd(rng);
        }
    }
    return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng)
{
    return random_matrix(n, 1, rng);
}

/// G G^T + floor I
inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng, double floor = 0.1)
{
    const Matrix g = random_matrix(n, n, rng);
    return g * g.transpose() + floor * Matrix::Identity(n, n);
}

}  // namespace srhc::testing
