#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace chaos_spde {

struct AdamConfig {
    double learning_rate = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment estimates and the step counter.
struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::uint64_t step = 0;

    static AdamState zeros(Eigen::Index size);
};

/// One bias-corrected Adam update of `params` in place. Throws NumericalError on
/// non-finite gradients, std::invalid_argument on shape mismatch.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace chaos_spde
