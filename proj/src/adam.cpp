#include "chaos_spde/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "chaos_spde/errors.hpp"

namespace chaos_spde {

AdamState AdamState::zeros(Eigen::Index size) {
    return AdamState{Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), 0};
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamConfig& config) {
    if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
    }
    if (!grads.allFinite()) {
        throw NumericalError("adam_step: non-finite gradient");
    }
    ++state.step;
    state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grads;
    state.second_moment = config.beta2 * state.second_moment + (1.0 - config.beta2) * grads.cwiseAbs2();
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    const Eigen::ArrayXd m_hat = state.first_moment.array() / correction1;
    const Eigen::ArrayXd v_hat = state.second_moment.array() / correction2;
    params.array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
}

}  // namespace chaos_spde
