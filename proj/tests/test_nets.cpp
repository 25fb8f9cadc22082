#include <algorithm>
#include <cmath>
#include <vector>

#include <stdexcept>

#include <doctest.h>

#include "chaos_spde/nets.hpp"
#include "chaos_spde/rng.hpp"
#include "support.hpp"

using namespace chaos_spde;

namespace {

TanhLayer random_layer(Eigen::Index N, Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
    CounterStream rng(seed);
    TanhLayer layer(N, m, d);
    for (Eigen::Index n = 0; n < N; ++n) {
        layer.time_weights(n) = rng.uniform(-1.5, 1.5);
        layer.biases(n) = rng.uniform(-1.5, 1.5);
        for (Eigen::Index l = 0; l < m; ++l) layer.space_weights(n, l) = rng.uniform(-1.5, 1.5);
        for (Eigen::Index c = 0; c < d; ++c) layer.readouts(n, c) = rng.uniform(-1.0, 1.0);
    }
    return layer;
}

std::vector<double> random_point(Eigen::Index m, CounterStream& rng) {
    std::vector<double> u(static_cast<std::size_t>(m));
    for (auto& v : u) v = rng.uniform(-1.5, 1.5);
    return u;
}

JetForm random_form(Eigen::Index m, CounterStream& rng) {
    JetForm f = JetForm::zero(m);
    f.value = rng.uniform(-1, 1);
    for (Eigen::Index l = 0; l < m; ++l) f.grad(l) = rng.uniform(-1, 1);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) f.hess(a, b) = rng.uniform(-1, 1);
    return f;
}

}  // namespace

TEST_CASE("net_eval oracles") {
    TanhLayer zero = random_layer(4, 2, 3, 1);
    zero.readouts.setZero();
    const std::vector<double> u{0.3, -0.2};
    CHECK(net_eval(zero, 0.5, u).norm() == 0.0);

    TanhLayer flat(1, 1, 1);
    flat.readouts(0, 0) = 2.5;
    CHECK(net_eval(flat, 0.7, std::vector<double>{0.1})(0) == 0.0);

    TanhLayer one(1, 1, 1);
    one.time_weights(0) = 1.0;
    one.space_weights(0, 0) = 2.0;
    one.biases(0) = 0.5;
    one.readouts(0, 0) = 3.0;
    CHECK(net_eval(one, 0.25, std::vector<double>{0.5})(0) == doctest::Approx(3.0 * std::tanh(0.75)).epsilon(1e-14));
    CHECK(net_eval(one, 0.25, std::vector<double>{0.5})(0) == doctest::Approx(1.905447).epsilon(1e-6));
}

TEST_CASE("derivative oracles") {
    TanhLayer zero = random_layer(3, 2, 2, 2);
    zero.readouts.setZero();
    const std::vector<double> u{0.1, 0.4};
    CHECK(net_grad_u(zero, 0.2, u).norm() == 0.0);
    CHECK(net_hess_diag_u(zero, 0.2, u).norm() == 0.0);

    TanhLayer one(1, 1, 1);
    one.space_weights(0, 0) = 2.0;
    one.readouts(0, 0) = 1.7;
    CHECK(net_hess_diag_u(one, 0.0, std::vector<double>{0.0})(0, 0) == 0.0);
    CHECK(tanh_d2(0.0) == 0.0);
}

TEST_CASE("input validation") {
    const TanhLayer layer = random_layer(3, 2, 1, 3);
    CHECK_THROWS_AS(net_eval(layer, 0.0, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(net_jet(layer, 0.0, std::vector<double>{1.0, 2.0}, 1), std::out_of_range);
    CHECK_THROWS(JetForm::partial(2, 2));
    CHECK_THROWS(parse_feature_law("gamma"));
    CHECK(parse_feature_law(to_string(FeatureLaw::student_t)) == FeatureLaw::student_t);
}

TEST_CASE("spatial derivatives match finite differences") {
    CounterStream rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(trial % 3);
        const TanhLayer layer = random_layer(6, m, 2, 100 + trial);
        const auto u = random_point(m, rng);
        const double t = rng.uniform();
        const Eigen::MatrixXd G = net_grad_u(layer, t, u);
        const Eigen::MatrixXd H = net_hess_diag_u(layer, t, u);
        const double h = 1e-5;
        for (Eigen::Index l = 0; l < m; ++l) {
            auto up = u, dn = u;
            up[static_cast<std::size_t>(l)] += h;
            dn[static_cast<std::size_t>(l)] -= h;
            const Eigen::VectorXd fd = (net_eval(layer, t, up) - net_eval(layer, t, dn)) / (2 * h);
            const Eigen::VectorXd fd2 =
                (net_eval(layer, t, up) - 2 * net_eval(layer, t, u) + net_eval(layer, t, dn)) / (h * h);
            for (Eigen::Index c = 0; c < 2; ++c) {
                CHECK(test_support::close_rel(G(c, l), fd(c), 1e-6, 1e-9));
                CHECK(std::abs(H(c, l) - fd2(c)) < 1e-4);
            }
        }
        const Jet jet = net_jet(layer, t, u, 1);
        CHECK(jet.value == doctest::Approx(net_eval(layer, t, u)(1)).epsilon(1e-14));
        for (Eigen::Index l = 0; l < m; ++l) {
            CHECK(jet.grad(l) == doctest::Approx(G(1, l)).epsilon(1e-14));
            CHECK(jet.hess(l, l) == doctest::Approx(H(1, l)).epsilon(1e-14));
        }
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b) {
                auto pp = u, pm = u, mp = u, mm = u;
                const double e = 1e-4;
                pp[a] += e, pp[b] += e;
                pm[a] += e, pm[b] -= e;
                mp[a] -= e, mp[b] += e;
                mm[a] -= e, mm[b] -= e;
                const double fd = (net_eval(layer, t, pp)(1) - net_eval(layer, t, pm)(1) - net_eval(layer, t, mp)(1) +
                                   net_eval(layer, t, mm)(1)) /
                                  (4 * e * e);
                CHECK(std::abs(jet.hess(a, b) - fd) < 1e-5);
            }
    }
}

TEST_CASE("tanh derivative identities") {
    for (double z = -3.0; z <= 3.0; z += 0.5) {
        const double h = 1e-5;
        const double s = std::tanh(z);
        CHECK(tanh_d1(s) == doctest::Approx((std::tanh(z + h) - std::tanh(z - h)) / (2 * h)).epsilon(1e-8));
        CHECK(tanh_d2(s) ==
              doctest::Approx((tanh_d1(std::tanh(z + h)) - tanh_d1(std::tanh(z - h))) / (2 * h)).epsilon(1e-7));
        CHECK(tanh_d3(s) ==
              doctest::Approx((tanh_d2(std::tanh(z + h)) - tanh_d2(std::tanh(z - h))) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("parameter gradients match central differences") {
    CounterStream rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(trial % 3);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(trial % 2);
        DeterministicNet net(random_layer(4, m, d, 500 + trial));
        const auto u = random_point(m, rng);
        const double t = rng.uniform();
        const Eigen::Index channel = trial % d;
        const JetForm form = trial % 2 ? JetForm::evaluation(m) : random_form(m, rng);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
        accumulate_parameter_gradient(net.layer(), t, u, form, channel, 1.0, grad);
        if (trial % 2) CHECK((grad - net_parameter_gradient(net, t, u, channel)).norm() < 1e-14);
        const Eigen::VectorXd theta = net.parameters();
        const double h = 1e-6;
        for (Eigen::Index p = 0; p < theta.size(); ++p) {
            DeterministicNet plus = net, minus = net;
            Eigen::VectorXd tp = theta, tm = theta;
            tp(p) += h;
            tm(p) -= h;
            plus.set_parameters(tp);
            minus.set_parameters(tm);
            const double fd = (form.apply(net_jet(plus.layer(), t, u, channel)) -
                               form.apply(net_jet(minus.layer(), t, u, channel))) /
                              (2 * h);
            CHECK(test_support::close_rel(grad(p), fd, 1e-5, 1e-8));
        }
    }
}

TEST_CASE("feature responses reproduce channel values") {
    CounterStream rng(12);
    const TanhLayer layer = random_layer(7, 2, 2, 77);
    const auto u = random_point(2, rng);
    const JetForm form = random_form(2, rng);
    const Eigen::VectorXd r = feature_response(layer, 0.3, u, form);
    for (Eigen::Index c = 0; c < 2; ++c)
        CHECK(layer.readouts.col(c).dot(r) == doctest::Approx(form.apply(net_jet(layer, 0.3, u, c))).epsilon(1e-12));
}

TEST_CASE("deterministic parameter layout round trip") {
    DeterministicNet net(random_layer(3, 2, 2, 4));
    const Eigen::VectorXd theta = net.parameters();
    CHECK(theta.size() == 3 + 6 + 3 + 6);
    CHECK(theta(3) == net.layer().space_weights(0, 0));
    CHECK(theta(4) == net.layer().space_weights(0, 1));
    CHECK(theta(12) == net.layer().readouts(0, 0));
    CHECK(theta(13) == net.layer().readouts(0, 1));
    DeterministicNet other(3, 2, 2);
    other.set_parameters(theta);
    CHECK(other.parameters() == theta);
    CHECK_THROWS(other.set_parameters(Eigen::VectorXd::Zero(5)));
}

TEST_CASE("random feature sampling") {
    const RandomFeatureNet a = sample_random_net(50, 2, 1, 42, FeatureLaw::uniform_box, 2.0);
    const RandomFeatureNet b = sample_random_net(50, 2, 1, 42, FeatureLaw::uniform_box, 2.0);
    CHECK(a.layer().time_weights == b.layer().time_weights);
    CHECK(a.layer().space_weights == b.layer().space_weights);
    CHECK(a.layer().biases == b.layer().biases);
    CHECK(a.readouts().norm() == 0.0);
    CHECK(a.layer().time_weights.cwiseAbs().maxCoeff() <= 2.0);
    CHECK(a.layer().space_weights.cwiseAbs().maxCoeff() <= 2.0);
    CHECK(a.layer().biases.cwiseAbs().maxCoeff() <= 2.0);

    const RandomFeatureNet t = sample_random_net(10000, 1, 1, 7, FeatureLaw::student_t);
    std::vector<double> draws(t.layer().space_weights.data(), t.layer().space_weights.data() + 10000);
    std::nth_element(draws.begin(), draws.begin() + 5000, draws.end());
    CHECK(std::abs(draws[5000]) < 0.05);
}

TEST_CASE("frozen features never change") {
    RandomFeatureNet net = sample_random_net(5, 1, 1, 3, FeatureLaw::uniform_box);
    const TanhLayer before = net.layer();
    net.set_readouts(Eigen::MatrixXd::Constant(5, 1, 0.5));
    CHECK(net.layer().time_weights == before.time_weights);
    CHECK(net.layer().space_weights == before.space_weights);
    CHECK(net.layer().biases == before.biases);
    CHECK(net.readouts()(2, 0) == 0.5);
    CHECK_THROWS(net.set_readouts(Eigen::MatrixXd::Zero(4, 1)));
}

TEST_CASE("deterministic initialization scale") {
    const DeterministicNet net = init_deterministic_net(40, 4, 1, 8);
    CHECK(net.layer().space_weights.cwiseAbs().maxCoeff() <= 0.5);
    CHECK(net.layer().readouts.cwiseAbs().maxCoeff() <= 1.0 / 40.0);
    CHECK(net.layer().all_finite());
}
