#pragma once

#include <Eigen/Dense>

namespace chaos_spde {

/// Smallest ridge ever used in a solve.
inline constexpr double kRidgeFloor = 1e-10;
/// Condition estimates above this mark a solution as ill-conditioned.
inline constexpr double kIllConditioned = 1e12;

struct LeastSquaresResult {
    Eigen::MatrixXd solution;
    double condition_estimate = 1.0;
    bool ill_conditioned = false;
    double ridge_used = kRidgeFloor;
};

/// argmin_Y ||design Y - targets||_F^2 + ridge ||Y||_F^2, solved by a column-pivoted
/// Householder QR of the ridge-augmented system [design; sqrt(ridge) I].
/// The effective ridge is max(ridge, kRidgeFloor).
LeastSquaresResult fit_readout_least_squares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                                             double ridge);

/// Ridge least squares with a Kronecker-structured design:
///   min_Y || space * Y * scenario^T - targets ||_F^2 + ridge ||Y||_F^2
/// with space (S x N), scenario (M x A), targets (S x M); returns Y (N x A).
/// Exact closed form from the thin SVDs of both factors.
LeastSquaresResult fit_kronecker_least_squares(const Eigen::MatrixXd& space, const Eigen::MatrixXd& scenario,
                                               const Eigen::MatrixXd& targets, double ridge);

}  // namespace chaos_spde
