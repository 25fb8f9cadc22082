#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <stdexcept>

#include <doctest.h>

#include "chaos_spde/chaos.hpp"
#include "chaos_spde/errors.hpp"
#include "chaos_spde/rng.hpp"
#include "support.hpp"

using namespace chaos_spde;

namespace {

ModelSettings random_settings(Eigen::Index neurons, std::uint64_t seed, bool shared = true) {
    ModelSettings s;
    s.kind = NetKind::random_feature;
    s.neurons = neurons;
    s.seed = seed;
    s.shared_features = shared;
    return s;
}

ModelSettings deterministic_settings(Eigen::Index neurons, std::uint64_t seed) {
    ModelSettings s;
    s.kind = NetKind::deterministic;
    s.neurons = neurons;
    s.seed = seed;
    return s;
}

ChaosModel make_model(const SpdeProblem& problem, std::uint32_t J, std::uint32_t K, const ModelSettings& settings) {
    const auto I = static_cast<std::uint32_t>(problem.noise_dim());
    return ChaosModel(IndexSet(I, J, K), TimeBasis(problem.horizon(), J), problem.padded_eigenvalues(I),
                      problem.space_dim(), 1, settings);
}

TrainingGrid small_grid(const SpdeProblem& problem, std::uint32_t J, std::size_t scenarios, std::size_t M2,
                        std::size_t M3, std::uint64_t seed) {
    const auto I = static_cast<std::uint32_t>(problem.noise_dim());
    return make_training_grid(problem, GaussianPanel(I, J, scenarios, seed), M2, M3, seed + 1);
}

/// Targets d_beta X^{(I,J,K)} of `model` itself on every row and scenario.
Eigen::MatrixXd self_targets(const Surrogate& model, const TrainingGrid& grid) {
    const IndexSet& idx = model.indices();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.rows()), static_cast<Eigen::Index>(grid.panel.scenarios()));
    const Eigen::MatrixXd xi = wick_matrix(idx, grid.panel);
    for (std::size_t c = 0; c < grid.components.size(); ++c) {
        const int beta = grid.components[c].first;
        for (std::size_t k = 0; k < grid.times.size(); ++k)
            for (std::size_t p = 0; p < grid.points.size(); ++p) {
                Eigen::VectorXd prop(static_cast<Eigen::Index>(idx.size()));
                for (std::size_t a = 0; a < idx.size(); ++a) {
                    const Jet jet = model.propagator_jet(a, grid.times[k], grid.points[p]);
                    prop(static_cast<Eigen::Index>(a)) = beta == kValue ? jet.value : jet.grad(beta);
                }
                out.row(static_cast<Eigen::Index>(grid.row(c, k, p))) = (xi * prop).transpose();
            }
    }
    return out;
}

Eigen::MatrixXd random_readouts(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
    CounterStream rng(seed);
    Eigen::MatrixXd y(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) y(i, j) = scale * rng.normal();
    return y;
}

/// A = F = B = 0 with a fixed initial condition.
class FrozenProblem final : public SpdeProblem {
public:
    std::string name() const override { return "frozen"; }
    Eigen::Index space_dim() const override { return 1; }
    double horizon() const override { return 1.0; }
    std::vector<double> eigenvalues() const override { return {1.0}; }
    int sobolev_order() const override { return 0; }
    double weight(std::span<const double>) const override { return 1.0; }
    ReferenceKind reference_kind() const override { return ReferenceKind::none; }
    std::vector<Point> sample_space(std::size_t count, std::uint64_t seed) const override {
        std::vector<Point> pts;
        for (std::size_t p = 0; p < count; ++p) pts.push_back({counter_normal(seed, p)});
        return pts;
    }
    double initial(std::span<const double> u, int) const override { return std::sin(u[0]) + 2.0; }
    JetForm generator(std::span<const double>, int) const override { return JetForm::zero(1); }
    double drift_offset(const ScenarioPath&, std::size_t, std::span<const double>, int) const override { return 0.0; }
    Eigen::VectorXd diffusion_offset(std::span<const double>, int) const override { return Eigen::VectorXd::Zero(1); }
    std::vector<ReferenceGrid> reference(const GaussianPanel&, const TimeBasis&, std::span<const std::size_t>,
                                         std::span<const double>, const std::vector<Point>&, int) const override {
        return {};
    }
};

/// Exact truncated heat solution: x_0 = S_t chi0, x_{eps(1,j)} = int_0^t g_j, all other propagators zero.
FunctionSurrogate exact_heat(const HeatProblem& heat, std::uint32_t J, std::uint32_t K) {
    IndexSet idx(1, J, K);
    const TimeBasis basis(heat.horizon(), J);
    const double s2 = heat.params().sigma * heat.params().sigma;
    return FunctionSurrogate(idx, 1, [=, &heat](std::size_t k, double t, std::span<const double> u) {
        Jet jet = Jet::zero(1);
        const MultiIndex& alpha = idx[k];
        if (alpha.is_zero()) {
            const double v = heat.semigroup_initial(t, u);
            const double var = s2 + 2 * t;
            jet.value = v;
            jet.grad(0) = -u[0] / var * v;
            jet.hess(0, 0) = (u[0] * u[0] / (var * var) - 1 / var) * v;
        } else if (alpha.order() == 1) {
            jet.value = basis.integral(alpha.entries()[0].j, t);
        }
        return jet;
    });
}

}  // namespace

// ------------------------------------------------------------ evaluation

TEST_CASE("chaos_eval oracles") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const GaussianPanel panel(1, 3, 5, 4);
    const std::vector<double> u{0.4};

    ChaosModel k0 = make_model(*heat, 3, 0, random_settings(8, 1));
    k0.set_readout_matrix(random_readouts(8, 1, 2));
    const double first = chaos_eval(k0, panel, 0, 0.5, u)(0);
    for (std::size_t m = 1; m < 5; ++m) CHECK(chaos_eval(k0, panel, m, 0.5, u)(0) == first);

    const ChaosModel zero = make_model(*heat, 3, 2, random_settings(8, 1));
    CHECK(chaos_eval(zero, panel, 3, 0.2, u).norm() == 0.0);

    TanhLayer zero_layer(1, 1, 1);
    TanhLayer constant(1, 1, 1);
    constant.biases(0) = -std::atanh(0.5);
    constant.readouts(0, 0) = 2 * 1.3;
    const GaussianPanel small(1, 1, 3, 8);
    const ChaosModel single(IndexSet(1, 1, 1), TimeBasis(1.0, 1), {1.0}, true,
                            std::vector<DeterministicNet>{DeterministicNet(zero_layer), DeterministicNet(constant)});
    for (std::size_t m = 0; m < 3; ++m)
        CHECK(chaos_eval(single, small, m, 0.3, u)(0) == doctest::Approx(1.3 * small.xi(m, 1, 1)).epsilon(1e-14));

    CHECK_THROWS_AS(chaos_eval(zero, GaussianPanel(1, 4, 2, 1), 0, 0.2, u), ConfigError);
}

TEST_CASE("order decomposition reassembles the expansion") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const GaussianPanel panel(1, 4, 6, 3);
    for (std::uint32_t K : {1u, 2u, 3u}) {
        ChaosModel model = make_model(*heat, 4, K, random_settings(10, 5));
        model.set_readout_matrix(random_readouts(10, static_cast<Eigen::Index>(model.size()), K));
        for (std::size_t m = 0; m < 6; ++m) {
            const std::vector<double> u{0.1 * static_cast<double>(m) - 0.2};
            const auto parts = decompose_by_order(model, panel, m, 0.7, u);
            CHECK(parts.size() == K + 1);
            CHECK(parts.rbegin()->first == K);
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(1);
            for (const auto& [order, part] : parts) sum += part;
            CHECK(std::abs(sum(0) - chaos_eval(model, panel, m, 0.7, u)(0)) < 1e-12);
        }
    }
}

TEST_CASE("expansion is linear in the readouts") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const GaussianPanel panel(1, 3, 4, 3);
    ChaosModel model = make_model(*heat, 3, 2, random_settings(6, 9));
    const auto A = static_cast<Eigen::Index>(model.size());
    const Eigen::MatrixXd y1 = random_readouts(6, A, 1), y2 = random_readouts(6, A, 2);
    const std::vector<double> u{-0.3};
    for (std::size_t m = 0; m < 4; ++m) {
        model.set_readout_matrix(y1);
        const double a = chaos_eval(model, panel, m, 0.4, u)(0);
        model.set_readout_matrix(y2);
        const double b = chaos_eval(model, panel, m, 0.4, u)(0);
        model.set_readout_matrix(y1 + y2);
        CHECK(std::abs(chaos_eval(model, panel, m, 0.4, u)(0) - (a + b)) < 1e-12);
    }
}

TEST_CASE("training grid layout") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const TrainingGrid grid = small_grid(*heat, 3, 10, 4, 7, 2);
    CHECK(grid.times.size() == 5);
    CHECK(grid.times.front() == 0.0);
    CHECK(grid.times.back() == 1.0);
    CHECK(grid.train.size() == 8);
    CHECK(grid.test.size() == 2);
    CHECK(grid.rows() == 35);
    CHECK(grid.row(0, 2, 3) == 17);
    const auto hjm = hjm_problem(4, 4, 0.9, 0.5, 1.0);
    const TrainingGrid hgrid = small_grid(*hjm, 3, 5, 4, 7, 2);
    CHECK(hgrid.components.size() == 2);
    CHECK(hgrid.row(1, 0, 0) == 35);
}

// ------------------------------------------------------------ supervised loss

TEST_CASE("supervised loss oracles") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    ChaosModel model = make_model(*heat, 2, 1, random_settings(5, 3));
    model.set_readout_matrix(random_readouts(5, 3, 4));
    TrainingGrid grid = small_grid(*heat, 2, 6, 3, 5, 1);
    const Eigen::MatrixXd targets = self_targets(model, grid);
    CHECK(supervised_loss(model, grid, targets) < 1e-12);

    TrainingGrid zero_weights = grid;
    zero_weights.components[0].second.setZero();
    CHECK(supervised_loss(model, zero_weights, targets.array() + 5.0) == 0.0);

    TrainingGrid one{GaussianPanel(1, 2, 1, 3), TimeBasis(1.0, 2), {0.5}, {{0.2}}, {}, {0}, {}};
    one.components = {{kValue, Eigen::VectorXd::Ones(1)}};
    Eigen::MatrixXd target = self_targets(model, one);
    target(0, 0) += 0.3;
    CHECK(supervised_loss(model, one, target) == doctest::Approx(0.3).epsilon(1e-12));

    Eigen::MatrixXd missing = targets;
    missing(3, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(supervised_loss(model, grid, missing), ConfigError);
    CHECK_THROWS_AS(supervised_loss(model, grid, targets.topRows(4)), ConfigError);

    const TrainingGrid wrong = small_grid(*heat, 3, 6, 3, 5, 1);
    CHECK_THROWS_AS(supervised_loss(model, wrong, self_targets(model, grid)), ConfigError);
}

// ------------------------------------------------------------ unsupervised loss

TEST_CASE("unsupervised loss at the initial time") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    TrainingGrid grid{GaussianPanel(1, 2, 4, 6), TimeBasis(1.0, 2), {0.0}, {}, {}, {0, 1, 2}, {3}};
    grid.points = heat->sample_space(9, 3);
    grid.components = heat->sobolev_weights(grid.points);
    const IndexSet idx(1, 2, 1);
    const FunctionSurrogate shifted(idx, 1, [&](std::size_t k, double, std::span<const double> u) {
        Jet jet = Jet::zero(1);
        if (k == 0) jet.value = heat->initial(u, kValue) + 0.3;
        else jet.value = 5.0;
        return jet;
    });
    double expected_sq = 0.0;
    for (std::size_t m : grid.train) {
        double xi_sum = 0.0;
        for (std::uint32_t j = 1; j <= 2; ++j) xi_sum += grid.panel.xi(m, 1, j);
        expected_sq += 9.0 * (0.3 + 5.0 * xi_sum) * (0.3 + 5.0 * xi_sum);
    }
    CHECK(unsupervised_loss(shifted, grid, *heat) == doctest::Approx(std::sqrt(expected_sq)).epsilon(1e-12));
}

TEST_CASE("zero-coefficient problem with a frozen initial state") {
    const FrozenProblem frozen;
    const TrainingGrid grid = small_grid(frozen, 3, 5, 6, 12, 7);
    const FunctionSurrogate still(IndexSet(1, 3, 1), 1, [&](std::size_t k, double, std::span<const double> u) {
        Jet jet = Jet::zero(1);
        if (k == 0) jet.value = frozen.initial(u, kValue);
        return jet;
    });
    CHECK(unsupervised_loss(still, grid, frozen) == 0.0);
}

TEST_CASE("Euler residual of the exact heat expansion shrinks with the step") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const FunctionSurrogate exact = exact_heat(*heat, 3, 1);
    std::vector<double> losses;
    for (std::size_t M2 : {10, 20, 40}) {
        const TrainingGrid grid = make_training_grid(*heat, GaussianPanel(1, 3, 10, 4), M2, 50, 5);
        losses.push_back(unsupervised_loss(exact, grid, *heat) / std::sqrt(static_cast<double>(M2 + 1)));
    }
    CHECK(losses[1] < losses[0]);
    CHECK(losses[2] < losses[1]);
    CHECK(losses[1] / losses[0] == doctest::Approx(0.5).epsilon(0.15));
    CHECK(losses[2] / losses[1] == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("unsupervised loss preconditions") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    TrainingGrid grid = small_grid(*heat, 2, 4, 3, 5, 1);
    grid.components = {{0, Eigen::VectorXd::Ones(5)}};
    const ChaosModel model = make_model(*heat, 2, 1, random_settings(4, 1));
    CHECK_THROWS_AS(unsupervised_loss(model, grid, *heat), ConfigError);

    const auto zakai = zakai_problem(2, 0.5);
    TrainingGrid zgrid = small_grid(*zakai, 2, 4, 3, 5, 1);
    zgrid.components.push_back({0, Eigen::VectorXd::Ones(5)});
    const ChaosModel zmodel = make_model(*zakai, 2, 1, random_settings(4, 1));
    CHECK_THROWS_AS(unsupervised_loss(zmodel, zgrid, *zakai), ConfigError);
}

// ------------------------------------------------------------ random-feature training

TEST_CASE("random features recover a consistent system") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    ChaosModel truth = make_model(*heat, 3, 1, random_settings(8, 21));
    truth.set_readout_matrix(random_readouts(8, 4, 3));
    const TrainingGrid grid = small_grid(*heat, 3, 20, 8, 30, 5);
    const Eigen::MatrixXd targets = self_targets(truth, grid);

    ChaosModel fit = make_model(*heat, 3, 1, random_settings(8, 21));
    TrainConfig cfg;
    cfg.ridge = 0.0;
    const TrainResult result = train_supervised(fit, grid, targets, cfg);
    REQUIRE(result.trace.size() == 1);
    CHECK(result.trace[0].epoch == 1);
    CHECK(result.trace[0].train_loss < 1e-8);
    CHECK(supervised_loss(fit, grid, targets, grid.test) < 1e-8);

    ChaosModel zero = make_model(*heat, 3, 1, random_settings(8, 21));
    cfg.ridge = 1e-6;
    train_supervised(zero, grid, Eigen::MatrixXd::Zero(targets.rows(), targets.cols()), cfg);
    CHECK(zero.readout_matrix().norm() == 0.0);
}

namespace {

void check_optimal(ChaosModel& model, const std::function<double(const ChaosModel&)>& loss) {
    const double best = loss(model);
    const Eigen::MatrixXd y = model.readout_matrix();
    for (int c = 0; c < 20; ++c) {
        const double scale = c < 10 ? 1e-2 : 1.0;
        const Eigen::MatrixXd challenger =
            (c < 10 ? y : Eigen::MatrixXd::Zero(y.rows(), y.cols())) + random_readouts(y.rows(), y.cols(), 100 + c, scale);
        model.set_readout_matrix(challenger);
        CHECK(best <= loss(model) * (1 + 1e-9) + 1e-12);
    }
    model.set_readout_matrix(y);
}

}  // namespace

TEST_CASE("least-squares readouts beat any challenger") {
    TrainConfig cfg;
    cfg.ridge = 0.0;

    SUBCASE("supervised heat, shared features") {
        const auto heat = heat_problem(1, 6.0, 1.0);
        const TrainingGrid grid = small_grid(*heat, 3, 20, 5, 20, 8);
        const Eigen::MatrixXd targets = make_supervised_targets(*heat, grid).values;
        ChaosModel model = make_model(*heat, 3, 2, random_settings(12, 4));
        train_supervised(model, grid, targets, cfg);
        check_optimal(model, [&](const ChaosModel& m) { return supervised_loss(m, grid, targets); });
    }
    SUBCASE("supervised hjm, unshared features") {
        const auto hjm = hjm_problem(4, 4, 0.9, 0.5, 1.0);
        const TrainingGrid grid = small_grid(*hjm, 3, 20, 5, 20, 8);
        const Eigen::MatrixXd targets = make_supervised_targets(*hjm, grid).values;
        ChaosModel model = make_model(*hjm, 3, 1, random_settings(10, 4, false));
        train_supervised(model, grid, targets, cfg);
        check_optimal(model, [&](const ChaosModel& m) { return supervised_loss(m, grid, targets); });
    }
    SUBCASE("unsupervised heat, unshared features") {
        const auto heat = heat_problem(1, 6.0, 1.0);
        const TrainingGrid grid = small_grid(*heat, 2, 15, 5, 15, 8);
        ChaosModel model = make_model(*heat, 2, 1, random_settings(10, 4, false));
        train_unsupervised(model, grid, *heat, cfg);
        check_optimal(model, [&](const ChaosModel& m) { return unsupervised_loss(m, grid, *heat); });
    }
    SUBCASE("unsupervised zakai, shared features (stacked path)") {
        const auto zakai = zakai_problem(2, 0.5);
        const TrainingGrid grid = small_grid(*zakai, 2, 12, 4, 15, 8);
        ChaosModel model = make_model(*zakai, 2, 1, random_settings(10, 4));
        train_unsupervised(model, grid, *zakai, cfg);
        check_optimal(model, [&](const ChaosModel& m) { return unsupervised_loss(m, grid, *zakai); });
    }
    SUBCASE("unsupervised zakai, unshared features") {
        const auto zakai = zakai_problem(2, 0.5);
        const TrainingGrid grid = small_grid(*zakai, 2, 12, 4, 15, 8);
        ChaosModel model = make_model(*zakai, 2, 1, random_settings(6, 4, false));
        train_unsupervised(model, grid, *zakai, cfg);
        check_optimal(model, [&](const ChaosModel& m) { return unsupervised_loss(m, grid, *zakai); });
    }
}

TEST_CASE("random-feature training is deterministic and keeps features frozen") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const TrainingGrid grid = small_grid(*heat, 3, 15, 5, 20, 3);
    ChaosModel a = make_model(*heat, 3, 1, random_settings(10, 77, false));
    ChaosModel b = make_model(*heat, 3, 1, random_settings(10, 77, false));
    const TanhLayer before = a.layer(2);
    train_unsupervised(a, grid, *heat, TrainConfig{});
    train_unsupervised(b, grid, *heat, TrainConfig{});
    CHECK(a.readout_matrix() == b.readout_matrix());
    CHECK(a.layer(2).time_weights == before.time_weights);
    CHECK(a.layer(2).space_weights == before.space_weights);
    CHECK(a.layer(2).biases == before.biases);
    CHECK(a.layer(0).biases != a.layer(1).biases);
}

// ------------------------------------------------------------ deterministic training

namespace {

void check_gradient(ChaosModel& model, const std::function<LossValue(const ChaosModel&)>& value) {
    const LossValue lv = value(model);
    const Eigen::VectorXd theta = model.parameters();
    REQUIRE(lv.gradient.size() == theta.size());
    const double h = 1e-6;
    for (Eigen::Index p = 0; p < theta.size(); p += 3) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(p) += h;
        tm(p) -= h;
        model.set_parameters(tp);
        const double up = value(model).loss;
        model.set_parameters(tm);
        const double dn = value(model).loss;
        CHECK(test_support::close_rel(lv.gradient(p), (up - dn) / (2 * h), 1e-5, 1e-7));
    }
    model.set_parameters(theta);
}

}  // namespace

TEST_CASE("loss gradients match central differences") {
    SUBCASE("supervised heat") {
        const auto heat = heat_problem(1, 6.0, 1.0);
        const TrainingGrid grid = small_grid(*heat, 2, 6, 3, 6, 2);
        const Eigen::MatrixXd targets = make_supervised_targets(*heat, grid).values;
        ChaosModel model = make_model(*heat, 2, 1, deterministic_settings(4, 3));
        check_gradient(model, [&](const ChaosModel& m) { return supervised_loss_gradient(m, grid, targets, grid.train); });
    }
    SUBCASE("supervised hjm with derivative weights") {
        const auto hjm = hjm_problem(4, 4, 0.9, 0.5, 1.0);
        const TrainingGrid grid = small_grid(*hjm, 2, 6, 3, 6, 2);
        const Eigen::MatrixXd targets = make_supervised_targets(*hjm, grid).values;
        ChaosModel model = make_model(*hjm, 2, 1, deterministic_settings(4, 3));
        check_gradient(model, [&](const ChaosModel& m) { return supervised_loss_gradient(m, grid, targets, grid.train); });
    }
    SUBCASE("unsupervised heat") {
        const auto heat = heat_problem(1, 6.0, 1.0);
        const TrainingGrid grid = small_grid(*heat, 2, 6, 3, 6, 2);
        ChaosModel model = make_model(*heat, 2, 1, deterministic_settings(4, 3));
        check_gradient(model, [&](const ChaosModel& m) { return unsupervised_loss_gradient(m, grid, *heat, grid.train); });
    }
    SUBCASE("unsupervised hjm") {
        const auto hjm = hjm_problem(4, 4, 0.9, 0.5, 1.0);
        const TrainingGrid grid = small_grid(*hjm, 2, 6, 3, 6, 2);
        ChaosModel model = make_model(*hjm, 2, 1, deterministic_settings(4, 3));
        check_gradient(model, [&](const ChaosModel& m) { return unsupervised_loss_gradient(m, grid, *hjm, grid.train); });
    }
    SUBCASE("unsupervised zakai") {
        const auto zakai = zakai_problem(2, 0.5);
        const TrainingGrid grid = small_grid(*zakai, 2, 5, 3, 5, 2);
        ChaosModel model = make_model(*zakai, 2, 1, deterministic_settings(3, 3));
        check_gradient(model, [&](const ChaosModel& m) { return unsupervised_loss_gradient(m, grid, *zakai, grid.train); });
    }
}

TEST_CASE("Adam training trace and determinism") {
    const auto heat = heat_problem(1, 6.0, 1.0);
    const TrainingGrid grid = small_grid(*heat, 2, 50, 4, 10, 6);
    const Eigen::MatrixXd targets = make_supervised_targets(*heat, grid).values;
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = 5;
    cfg.adam.learning_rate = 1e-2;
    ChaosModel a = make_model(*heat, 2, 1, deterministic_settings(6, 2));
    ChaosModel b = make_model(*heat, 2, 1, deterministic_settings(6, 2));
    const double initial = supervised_loss(a, grid, targets);
    const TrainResult ra = train_supervised(a, grid, targets, cfg);
    train_supervised(b, grid, targets, cfg);
    REQUIRE(ra.trace.size() == 30);
    for (std::size_t e = 0; e < 30; ++e) {
        CHECK(ra.trace[e].epoch == e + 1);
        CHECK(std::isfinite(ra.trace[e].test_error));
    }
    CHECK(a.parameters() == b.parameters());
    CHECK(supervised_loss(a, grid, targets) < initial);

    cfg.adam.learning_rate = 1e308;
    ChaosModel c = make_model(*heat, 2, 1, deterministic_settings(6, 2));
    CHECK_THROWS_AS(train_supervised(c, grid, targets, cfg), NumericalError);
}

TEST_CASE("net kind names") {
    CHECK(parse_net_kind("deterministic") == NetKind::deterministic);
    CHECK(parse_net_kind("random_feature") == NetKind::random_feature);
    CHECK(parse_net_kind(to_string(NetKind::random_feature)) == NetKind::random_feature);
    CHECK_THROWS_AS(parse_net_kind("cnn"), ConfigError);
}
