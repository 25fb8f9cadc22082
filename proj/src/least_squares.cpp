#include "chaos_spde/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaos_spde/errors.hpp"

namespace chaos_spde {

namespace {

double pivoted_condition(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
    const Eigen::Index k = std::min(qr.rows(), qr.cols());
    if (k == 0) return 1.0;
    const double top = std::abs(qr.matrixR()(0, 0));
    const double bottom = std::abs(qr.matrixR()(k - 1, k - 1));
    if (top == 0.0) return 1.0;
    if (bottom == 0.0 || qr.cols() > qr.rows()) return std::numeric_limits<double>::infinity();
    return top / bottom;
}

}  // namespace

LeastSquaresResult fit_readout_least_squares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                                             double ridge) {
    if (design.rows() < 1 || design.cols() < 1) {
        throw std::invalid_argument("fit_readout_least_squares: empty design");
    }
    if (targets.rows() != design.rows()) {
        throw std::invalid_argument("fit_readout_least_squares: design and targets have different row counts");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw std::invalid_argument("fit_readout_least_squares: ridge must be a nonnegative number");
    }
    if (!design.allFinite() || !targets.allFinite()) {
        throw NumericalError("fit_readout_least_squares: non-finite input");
    }
    LeastSquaresResult result;
    result.ridge_used = std::max(ridge, kRidgeFloor);

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> raw(design);
    result.condition_estimate = pivoted_condition(raw);
    result.ill_conditioned = !(result.condition_estimate <= kIllConditioned);

    const Eigen::Index p = design.rows(), n = design.cols();
    Eigen::MatrixXd augmented(p + n, n);
    augmented.topRows(p) = design;
    augmented.bottomRows(n) = std::sqrt(result.ridge_used) * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(p + n, targets.cols());
    rhs.topRows(p) = targets;
    result.solution = augmented.colPivHouseholderQr().solve(rhs);
    return result;
}

LeastSquaresResult fit_kronecker_least_squares(const Eigen::MatrixXd& space, const Eigen::MatrixXd& scenario,
                                               const Eigen::MatrixXd& targets, double ridge) {
    if (targets.rows() != space.rows() || targets.cols() != scenario.rows()) {
        throw std::invalid_argument("fit_kronecker_least_squares: target shape does not match the factors");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw std::invalid_argument("fit_kronecker_least_squares: ridge must be a nonnegative number");
    }
    if (!space.allFinite() || !scenario.allFinite() || !targets.allFinite()) {
        throw NumericalError("fit_kronecker_least_squares: non-finite input");
    }
    LeastSquaresResult result;
    result.ridge_used = std::max(ridge, kRidgeFloor);

    const Eigen::BDCSVD<Eigen::MatrixXd> svd_space(space, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::BDCSVD<Eigen::MatrixXd> svd_scen(scenario, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s1 = svd_space.singularValues();
    const Eigen::VectorXd& s2 = svd_scen.singularValues();

    // Projected targets U1^T T U2, then a per-entry ridge filter.
    Eigen::MatrixXd core = svd_space.matrixU().transpose() * targets * svd_scen.matrixU();
    for (Eigen::Index a = 0; a < core.rows(); ++a) {
        for (Eigen::Index b = 0; b < core.cols(); ++b) {
            const double sigma = s1(a) * s2(b);
            core(a, b) *= sigma / (sigma * sigma + result.ridge_used);
        }
    }
    result.solution = svd_space.matrixV() * core * svd_scen.matrixV().transpose();

    const double top = (s1.size() ? s1(0) : 0.0) * (s2.size() ? s2(0) : 0.0);
    const bool full_rank = space.rows() >= space.cols() && scenario.rows() >= scenario.cols();
    const double bottom = full_rank ? s1(s1.size() - 1) * s2(s2.size() - 1) : 0.0;
    result.condition_estimate = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
    result.ill_conditioned = !(result.condition_estimate <= kIllConditioned);
    return result;
}

}  // namespace chaos_spde
