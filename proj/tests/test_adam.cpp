#include <cmath>
#include <limits>

#include <stdexcept>

#include <doctest.h>

#include "chaos_spde/adam.hpp"
#include "chaos_spde/errors.hpp"

using namespace chaos_spde;

TEST_CASE("zero gradient leaves parameters unchanged") {
    Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(4, -1, 1);
    const Eigen::VectorXd before = p;
    AdamState state = AdamState::zeros(4);
    adam_step(p, Eigen::VectorXd::Zero(4), state, AdamConfig{});
    CHECK(p == before);
    CHECK(state.step == 1);
}

TEST_CASE("constant gradient moves by about the learning rate") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    AdamState state = AdamState::zeros(3);
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    const Eigen::VectorXd g = Eigen::Vector3d(2.0, -0.5, 1e-3);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd before = p;
        adam_step(p, g, state, cfg);
        for (Eigen::Index j = 0; j < 3; ++j) {
            const double step = before(j) - p(j);
            CHECK(std::abs(std::abs(step) - cfg.learning_rate) < 1e-4);
            CHECK((step > 0) == (g(j) > 0));
        }
    }
}

TEST_CASE("matches a hand-rolled reference") {
    AdamConfig cfg{0.05, 0.8, 0.95, 1e-6};
    Eigen::VectorXd p(2), m = Eigen::VectorXd::Zero(2), v = Eigen::VectorXd::Zero(2);
    p << 0.3, -0.7;
    Eigen::VectorXd q = p;
    AdamState state = AdamState::zeros(2);
    for (int t = 1; t <= 10; ++t) {
        Eigen::VectorXd g(2);
        g << std::sin(t * 0.7) + q(0), std::cos(t * 1.3) - 2 * q(1);
        adam_step(p, g, state, cfg);
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g.cwiseProduct(g);
        const Eigen::VectorXd mh = m / (1 - std::pow(cfg.beta1, t));
        const Eigen::VectorXd vh = v / (1 - std::pow(cfg.beta2, t));
        q -= cfg.learning_rate * (mh.array() / (vh.array().sqrt() + cfg.epsilon)).matrix();
        CHECK((p - q).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("invalid input") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
    AdamState state = AdamState::zeros(2);
    Eigen::VectorXd g(2);
    g << 1.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adam_step(p, g, state, AdamConfig{}), NumericalError);
    CHECK_THROWS_AS(adam_step(p, Eigen::VectorXd::Zero(3), state, AdamConfig{}), std::invalid_argument);
}
