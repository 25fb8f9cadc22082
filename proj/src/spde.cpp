#include "chaos_spde/spde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chaos_spde/errors.hpp"
#include "chaos_spde/rng.hpp"

namespace chaos_spde {

namespace {

void check_beta(int beta, Eigen::Index dim) {
    if (beta < kValue || beta >= dim) throw std::out_of_range("derivative selector out of range");
}

void check_point(std::span<const double> u, Eigen::Index dim) {
    if (static_cast<Eigen::Index>(u.size()) != dim) throw std::invalid_argument("point has wrong dimension");
}

double squared_norm(std::span<const double> u) {
    double s = 0.0;
    for (double v : u) s += v * v;
    return s;
}

Eigen::MatrixXd noise_on_grid(const SpdeProblem& problem, const GaussianPanel& panel, const TimeBasis& basis,
                              std::size_t scenario, std::span<const double> times) {
    const auto lambda = problem.padded_eigenvalues(panel.I());
    Eigen::MatrixXd noise(panel.I(), static_cast<Eigen::Index>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k)
        noise.col(static_cast<Eigen::Index>(k)) = brownian_path(panel, basis, lambda, scenario, times[k]);
    return noise;
}

/// Refines [0, times.back()] with `substeps` equal steps inside every gap of {0} u times.
struct FineGrid {
    std::vector<double> times;
    std::vector<std::size_t> marks;  // position of each requested time
};

FineGrid refine(std::span<const double> times, std::size_t substeps) {
    FineGrid grid;
    grid.times.push_back(0.0);
    for (double t : times) {
        const double last = grid.times.back();
        if (t < last) throw std::invalid_argument("time grid must be nondecreasing and nonnegative");
        if (t > last) {
            for (std::size_t s = 1; s <= substeps; ++s)
                grid.times.push_back(s == substeps ? t : last + (t - last) * static_cast<double>(s) / substeps);
        }
        grid.marks.push_back(grid.times.size() - 1);
    }
    return grid;
}

}  // namespace

std::string to_string(ReferenceKind kind) {
    switch (kind) {
        case ReferenceKind::exact: return "exact";
        case ReferenceKind::monte_carlo: return "monte_carlo";
        case ReferenceKind::none: return "none";
    }
    return "none";
}

double gaussian_density(std::span<const double> u) {
    const double m = static_cast<double>(u.size());
    return std::pow(2.0 * std::numbers::pi, -0.5 * m) * std::exp(-0.5 * squared_norm(u));
}

// ------------------------------------------------------------------ base

std::vector<double> SpdeProblem::padded_eigenvalues(std::size_t count) const {
    auto lambda = eigenvalues();
    lambda.resize(std::max(count, lambda.size()), 0.0);
    lambda.resize(count);
    return lambda;
}

std::vector<std::pair<int, Eigen::VectorXd>> SpdeProblem::sobolev_weights(const std::vector<Point>& points) const {
    return {{kValue, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(points.size()))}};
}

double SpdeProblem::drift_multiplier(const ScenarioPath&, std::size_t, std::span<const double>) const {
    return 0.0;
}

Eigen::VectorXd SpdeProblem::diffusion_multiplier(std::span<const double>) const {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(noise_dim()));
}

ScenarioPath SpdeProblem::scenario_path(const GaussianPanel& panel, const TimeBasis& basis, std::size_t scenario,
                                        std::span<const double> times) const {
    ScenarioPath path;
    path.times.assign(times.begin(), times.end());
    path.noise = noise_on_grid(*this, panel, basis, scenario, times);
    return path;
}

// ------------------------------------------------------------------ heat

HeatProblem::HeatProblem(HeatParams params) : params_(params) {
    if (params_.dim < 1) throw ConfigError("heat: dimension must be positive");
    if (!(params_.sigma > 0.0)) throw ConfigError("heat: sigma must be positive");
    if (!(params_.horizon > 0.0)) throw ConfigError("heat: horizon must be positive");
}

double HeatProblem::weight(std::span<const double> u) const { return gaussian_density(u); }

std::vector<Point> HeatProblem::sample_space(std::size_t count, std::uint64_t seed) const {
    std::vector<Point> points(count, Point(static_cast<std::size_t>(params_.dim)));
    for (std::size_t p = 0; p < count; ++p)
        for (Eigen::Index l = 0; l < params_.dim; ++l)
            points[p][static_cast<std::size_t>(l)] = counter_normal(seed, p, static_cast<std::uint64_t>(l));
    return points;
}

double HeatProblem::semigroup_initial(double t, std::span<const double> u, int beta) const {
    check_point(u, params_.dim);
    check_beta(beta, params_.dim);
    const double s2 = params_.sigma * params_.sigma;
    const double var = s2 + 2.0 * t;
    const double value = params_.amplitude * std::pow(s2 / var, 0.5 * static_cast<double>(params_.dim)) *
                         std::exp(-squared_norm(u) / (2.0 * var));
    if (beta == kValue) return value;
    return -u[static_cast<std::size_t>(beta)] / var * value;
}

double HeatProblem::initial(std::span<const double> u, int beta) const { return semigroup_initial(0.0, u, beta); }

JetForm HeatProblem::generator(std::span<const double> u, int beta) const {
    check_point(u, params_.dim);
    check_beta(beta, params_.dim);
    if (beta != kValue) throw std::domain_error("heat: derivatives of the Laplacian need third-order jets");
    JetForm form = JetForm::zero(params_.dim);
    form.hess.setIdentity();
    return form;
}

Eigen::VectorXd HeatProblem::diffusion_offset(std::span<const double> u, int beta) const {
    check_point(u, params_.dim);
    check_beta(beta, params_.dim);
    return Eigen::VectorXd::Constant(1, beta == kValue ? 1.0 : 0.0);
}

std::vector<ReferenceGrid> HeatProblem::reference(const GaussianPanel& panel, const TimeBasis& basis,
                                                  std::span<const std::size_t> scenarios,
                                                  std::span<const double> times, const std::vector<Point>& points,
                                                  int beta) const {
    const auto T = static_cast<Eigen::Index>(times.size());
    const auto P = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd deterministic(T, P);
    for (Eigen::Index k = 0; k < T; ++k)
        for (Eigen::Index p = 0; p < P; ++p)
            deterministic(k, p) = semigroup_initial(times[static_cast<std::size_t>(k)],
                                                    points[static_cast<std::size_t>(p)], beta);
    std::vector<ReferenceGrid> out;
    out.reserve(scenarios.size());
    for (std::size_t m : scenarios) {
        ReferenceGrid grid{deterministic, Eigen::MatrixXd::Zero(T, P)};
        if (beta == kValue) {
            const Eigen::MatrixXd noise = noise_on_grid(*this, panel, basis, m, times);
            for (Eigen::Index k = 0; k < T; ++k) grid.values.row(k).array() += noise(0, k);
        }
        out.push_back(std::move(grid));
    }
    return out;
}

std::unique_ptr<HeatProblem> heat_problem(Eigen::Index dim, double sigma, double horizon) {
    HeatParams params;
    params.dim = dim;
    params.sigma = sigma;
    params.horizon = horizon;
    return std::make_unique<HeatProblem>(params);
}

double heat_reference(const HeatProblem& problem, const GaussianPanel& panel, const TimeBasis& basis,
                      std::size_t scenario, double t, std::span<const double> u) {
    const auto lambda = problem.padded_eigenvalues(panel.I());
    return problem.semigroup_initial(t, u) + brownian_path(panel, basis, lambda, scenario, t)(0);
}

// ------------------------------------------------------------------- HJM

HjmProblem::HjmProblem(HjmParams params) : params_(params) {
    if (params_.kappa == 0.0) throw ConfigError("hjm: kappa must be nonzero");
    if (!(params_.sigma > 0.0)) throw ConfigError("hjm: sigma must be positive");
    if (!(params_.horizon > 0.0)) throw ConfigError("hjm: horizon must be positive");
    if (!(params_.max_maturity > 0.0)) throw ConfigError("hjm: maturity range must be positive");
}

double HjmProblem::weight(std::span<const double> u) const {
    check_point(u, 1);
    return std::exp(params_.tilt * u[0]);
}

std::vector<std::pair<int, Eigen::VectorXd>> HjmProblem::sobolev_weights(const std::vector<Point>& points) const {
    const auto P = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd value = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd slope = Eigen::VectorXd::Zero(P);
    for (Eigen::Index p = 0; p < P; ++p) {
        if (points[static_cast<std::size_t>(p)][0] == 0.0)
            value(p) = 1.0;
        else
            slope(p) = 1.0;
    }
    return {{kValue, value}, {0, slope}};
}

std::vector<Point> HjmProblem::sample_space(std::size_t count, std::uint64_t seed) const {
    std::vector<Point> points;
    points.reserve(count);
    if (count == 0) return points;
    points.push_back({0.0});
    const double a = params_.tilt;
    const double U = params_.max_maturity;
    for (std::size_t p = 1; p < count; ++p) {
        const double q = to_open_unit(counter_hash(seed, p));
        const double u = a == 0.0 ? q * U : std::log1p(q * std::expm1(a * U)) / a;
        points.push_back({u});
    }
    return points;
}

double hjm_reference(double short_rate, double mu, double kappa, double sigma, double u, int beta) {
    if (kappa == 0.0) throw ConfigError("hjm: kappa must be nonzero");
    const double e = std::exp(-kappa * u);
    const double c = sigma * sigma / (2.0 * kappa * kappa);
    if (beta == kValue) return short_rate * e + (mu / kappa) * (1.0 - e) - c * (1.0 - e) * (1.0 - e);
    if (beta == 0) return -kappa * short_rate * e + mu * e - 2.0 * c * kappa * (1.0 - e) * e;
    throw std::out_of_range("hjm: derivative selector out of range");
}

double HjmProblem::initial(std::span<const double> u, int beta) const {
    check_point(u, 1);
    return hjm_reference(params_.r0, params_.mu, params_.kappa, params_.sigma, u[0], beta);
}

JetForm HjmProblem::generator(std::span<const double> u, int beta) const {
    check_point(u, 1);
    check_beta(beta, 1);
    JetForm form = JetForm::zero(1);
    if (beta == kValue)
        form.grad(0) = 1.0;
    else
        form.hess(0, 0) = 1.0;
    return form;
}

double HjmProblem::drift(double u, int beta) const {
    const double k = params_.kappa;
    const double s2 = params_.sigma * params_.sigma;
    const double e = std::exp(-k * u);
    if (beta == kValue) return s2 / k * e * (1.0 - e);
    if (beta == 0) return s2 * (2.0 * e * e - e);
    throw std::out_of_range("hjm: derivative selector out of range");
}

double HjmProblem::drift_offset(const ScenarioPath&, std::size_t, std::span<const double> u, int beta) const {
    check_point(u, 1);
    return drift(u[0], beta);
}

Eigen::VectorXd HjmProblem::diffusion_offset(std::span<const double> u, int beta) const {
    check_point(u, 1);
    check_beta(beta, 1);
    const double b = params_.sigma * std::exp(-params_.kappa * u[0]);
    return Eigen::VectorXd::Constant(1, beta == kValue ? b : -params_.kappa * b);
}

double vasicek_short_rate(const HjmParams& params, const GaussianPanel& panel, const TimeBasis& basis,
                          std::size_t scenario, double t) {
    const double k = params.kappa;
    if (k == 0.0) throw ConfigError("hjm: kappa must be nonzero");
    if (t < 0.0 || t > basis.horizon()) throw std::out_of_range("time outside [0, T]");
    if (panel.J() != basis.count()) throw std::invalid_argument("panel and basis disagree on J");
    const double T = basis.horizon();
    const double decay = std::exp(-k * t);
    double stochastic = 0.0;
    for (std::uint32_t j = 1; j <= panel.J(); ++j) {
        double conv;
        if (j == 1) {
            conv = std::sqrt(1.0 / T) * (1.0 - decay) / k;
        } else {
            const double w = (j - 1) * std::numbers::pi / T;
            conv = std::sqrt(2.0 / T) * (k * std::cos(w * t) + w * std::sin(w * t) - k * decay) / (k * k + w * w);
        }
        stochastic += panel.xi(scenario, 1, j) * conv;
    }
    return params.r0 * decay + params.mu / k * (1.0 - decay) + params.sigma * stochastic;
}

double vasicek_exact_transition(const HjmParams& params, double rate, double dt, double z) {
    const double k = params.kappa;
    if (k == 0.0) throw ConfigError("hjm: kappa must be nonzero");
    const double decay = std::exp(-k * dt);
    const double sd = params.sigma * std::sqrt(-std::expm1(-2.0 * k * dt) / (2.0 * k));
    return rate * decay + params.mu / k * (1.0 - decay) + sd * z;
}

std::vector<ReferenceGrid> HjmProblem::reference(const GaussianPanel& panel, const TimeBasis& basis,
                                                 std::span<const std::size_t> scenarios,
                                                 std::span<const double> times, const std::vector<Point>& points,
                                                 int beta) const {
    check_beta(beta, 1);
    const auto T = static_cast<Eigen::Index>(times.size());
    const auto P = static_cast<Eigen::Index>(points.size());
    std::vector<ReferenceGrid> out;
    out.reserve(scenarios.size());
    for (std::size_t m : scenarios) {
        ReferenceGrid grid{Eigen::MatrixXd(T, P), Eigen::MatrixXd::Zero(T, P)};
        for (Eigen::Index k = 0; k < T; ++k) {
            const double r = vasicek_short_rate(params_, panel, basis, m, times[static_cast<std::size_t>(k)]);
            for (Eigen::Index p = 0; p < P; ++p)
                grid.values(k, p) = hjm_reference(r, params_.mu, params_.kappa, params_.sigma,
                                                  points[static_cast<std::size_t>(p)][0], beta);
        }
        out.push_back(std::move(grid));
    }
    return out;
}

std::unique_ptr<HjmProblem> hjm_problem(double r0, double mu, double kappa, double sigma, double horizon) {
    HjmParams params;
    params.r0 = r0;
    params.mu = mu;
    params.kappa = kappa;
    params.sigma = sigma;
    params.horizon = horizon;
    return std::make_unique<HjmProblem>(params);
}

// ------------------------------------------------------------------ Zakai

ZakaiProblem::ZakaiProblem(ZakaiParams params) : params_(params) {
    if (params_.dim < 1) throw ConfigError("zakai: dimension must be positive");
    if (!(params_.horizon > 0.0)) throw ConfigError("zakai: horizon must be positive");
    if (params_.substeps < 1) throw ConfigError("zakai: substeps must be positive");
    if (params_.particles < 2) throw ConfigError("zakai: need at least two particles");
    if (!(params_.bandwidth > 0.0 && params_.bandwidth < 1.0))
        throw ConfigError("zakai: kernel bandwidth must lie in (0, 1)");
}

std::vector<double> ZakaiProblem::eigenvalues() const {
    return std::vector<double>(static_cast<std::size_t>(2 * params_.dim), 1.0);
}

double ZakaiProblem::weight(std::span<const double> u) const { return gaussian_density(u); }

std::vector<Point> ZakaiProblem::sample_space(std::size_t count, std::uint64_t seed) const {
    std::vector<Point> points(count, Point(static_cast<std::size_t>(params_.dim)));
    for (std::size_t p = 0; p < count; ++p)
        for (Eigen::Index l = 0; l < params_.dim; ++l)
            points[p][static_cast<std::size_t>(l)] = counter_normal(seed, p, static_cast<std::uint64_t>(l));
    return points;
}

double ZakaiProblem::initial(std::span<const double> u, int beta) const {
    check_point(u, params_.dim);
    check_beta(beta, params_.dim);
    const double value = gaussian_density(u);
    return beta == kValue ? value : -u[static_cast<std::size_t>(beta)] * value;
}

Eigen::VectorXd ZakaiProblem::signal_drift(const Eigen::VectorXd& y) const {
    return 0.25 * y / (1.0 + y.squaredNorm());
}

double ZakaiProblem::signal_drift_divergence(std::span<const double> y) const {
    const double r2 = squared_norm(y);
    const double q = 1.0 + r2;
    return 0.25 * (static_cast<double>(y.size()) / q - 2.0 * r2 / (q * q));
}

Eigen::VectorXd ZakaiProblem::observation(const Eigen::VectorXd& y) const { return 0.5 * y; }

Eigen::MatrixXd ZakaiProblem::diffusion_covariance() const {
    return Eigen::MatrixXd::Ones(params_.dim, params_.dim);
}

JetForm ZakaiProblem::generator(std::span<const double> u, int beta) const {
    check_point(u, params_.dim);
    check_beta(beta, params_.dim);
    if (beta != kValue) throw std::domain_error("zakai: only the value of the adjoint generator is available");
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(u.data(), params_.dim);
    JetForm form = JetForm::zero(params_.dim);
    form.hess = 0.5 * diffusion_covariance();
    form.grad = -signal_drift(y);
    form.value = -signal_drift_divergence(u);
    return form;
}

double ZakaiProblem::drift_multiplier(const ScenarioPath& path, std::size_t k, std::span<const double> u) const {
    check_point(u, params_.dim);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(u.data(), params_.dim);
    return observation(y).dot(observation(path.signal.col(static_cast<Eigen::Index>(k))));
}

Eigen::VectorXd ZakaiProblem::diffusion_offset(std::span<const double> u, int beta) const {
    check_point(u, params_.dim);
    check_beta(beta, params_.dim);
    return Eigen::VectorXd::Zero(2 * params_.dim);
}

Eigen::VectorXd ZakaiProblem::diffusion_multiplier(std::span<const double> u) const {
    check_point(u, params_.dim);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(u.data(), params_.dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * params_.dim);
    b.head(params_.dim) = observation(y);
    return b;
}

ZakaiProblem::SignalPath ZakaiProblem::simulate_signal(const GaussianPanel& panel, const TimeBasis& basis,
                                                       std::size_t scenario, std::span<const double> times) const {
    const Eigen::Index m = params_.dim;
    if (panel.I() < 2 * m) throw ConfigError("zakai: the panel needs 2m Brownian coordinates");
    const FineGrid fine = refine(times, params_.substeps);
    const auto steps = static_cast<Eigen::Index>(fine.times.size());
    const Eigen::MatrixXd noise = noise_on_grid(*this, panel, basis, scenario, fine.times);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));

    SignalPath path;
    path.times = fine.times;
    path.signal = Eigen::MatrixXd::Zero(m, steps);
    path.observation = Eigen::MatrixXd::Zero(m, steps);
    for (Eigen::Index s = 1; s < steps; ++s) {
        const double dt = fine.times[static_cast<std::size_t>(s)] - fine.times[static_cast<std::size_t>(s - 1)];
        const Eigen::VectorXd y = path.signal.col(s - 1);
        const Eigen::VectorXd dW = noise.col(s).head(m) - noise.col(s - 1).head(m);
        const Eigen::VectorXd dWs = noise.col(s).segment(m, m) - noise.col(s - 1).segment(m, m);
        path.signal.col(s) = y + signal_drift(y) * dt + Eigen::VectorXd::Constant(m, scale * dWs.sum());
        path.observation.col(s) = path.observation.col(s - 1) + observation(y) * dt + dW;
    }
    return path;
}

ScenarioPath ZakaiProblem::scenario_path(const GaussianPanel& panel, const TimeBasis& basis, std::size_t scenario,
                                         std::span<const double> times) const {
    ScenarioPath path = SpdeProblem::scenario_path(panel, basis, scenario, times);
    const SignalPath fine = simulate_signal(panel, basis, scenario, times);
    const FineGrid grid = refine(times, params_.substeps);
    path.signal.resize(params_.dim, static_cast<Eigen::Index>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k)
        path.signal.col(static_cast<Eigen::Index>(k)) = fine.signal.col(static_cast<Eigen::Index>(grid.marks[k]));
    return path;
}

std::vector<ReferenceGrid> ZakaiProblem::reference(const GaussianPanel& panel, const TimeBasis& basis,
                                                   std::span<const std::size_t> scenarios,
                                                   std::span<const double> times, const std::vector<Point>& points,
                                                   int beta) const {
    if (beta != kValue) throw std::domain_error("zakai: the particle reference provides values only");
    const Eigen::Index m = params_.dim;
    const auto P = static_cast<Eigen::Index>(params_.particles);
    const auto Q = static_cast<Eigen::Index>(points.size());
    const FineGrid fine = refine(times, params_.substeps);
    const auto steps = static_cast<Eigen::Index>(fine.times.size());
    const std::uint64_t seed = params_.particle_seed;
    const double h = params_.bandwidth;
    const double spread = std::sqrt(1.0 - h * h);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));

    // Common particle ensemble: positions at every requested time and kappa along the fine path.
    std::vector<Eigen::MatrixXd> positions(times.size(), Eigen::MatrixXd(m, P));
    Eigen::MatrixXd kappa_path(m * std::max<Eigen::Index>(steps - 1, 1), P);
    for (Eigen::Index p = 0; p < P; ++p) {
        Eigen::VectorXd y(m);
        for (Eigen::Index l = 0; l < m; ++l)
            y(l) = spread * counter_normal(seed, static_cast<std::uint64_t>(p), 0, static_cast<std::uint64_t>(l));
        std::size_t next_mark = 0;
        for (Eigen::Index s = 0; s < steps; ++s) {
            while (next_mark < fine.marks.size() && fine.marks[next_mark] == static_cast<std::size_t>(s))
                positions[next_mark++].col(p) = y;
            if (s + 1 == steps) break;
            const double dt = fine.times[static_cast<std::size_t>(s + 1)] - fine.times[static_cast<std::size_t>(s)];
            kappa_path.block(s * m, p, m, 1) = observation(y);
            double z = 0.0;
            for (Eigen::Index l = 0; l < m; ++l)
                z += counter_normal(seed, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s + 1),
                                    static_cast<std::uint64_t>(l));
            y += signal_drift(y) * dt + Eigen::VectorXd::Constant(m, scale * std::sqrt(dt) * z);
        }
    }

    // Log likelihood weights per scenario at every requested time.
    std::vector<Eigen::MatrixXd> weights;  // per scenario: times x P
    weights.reserve(scenarios.size());
    for (std::size_t sc : scenarios) {
        const SignalPath path = simulate_signal(panel, basis, sc, times);
        Eigen::MatrixXd w(static_cast<Eigen::Index>(times.size()), P);
        Eigen::VectorXd log_w = Eigen::VectorXd::Zero(P);
        std::size_t next_mark = 0;
        for (Eigen::Index s = 0; s < steps; ++s) {
            while (next_mark < fine.marks.size() && fine.marks[next_mark] == static_cast<std::size_t>(s))
                w.row(static_cast<Eigen::Index>(next_mark++)) = log_w.array().exp().matrix().transpose();
            if (s + 1 == steps) break;
            const double dt = fine.times[static_cast<std::size_t>(s + 1)] - fine.times[static_cast<std::size_t>(s)];
            const Eigen::VectorXd dZ = path.observation.col(s + 1) - path.observation.col(s);
            const Eigen::MatrixXd kap = kappa_path.middleRows(s * m, m);
            log_w += (kap.transpose() * dZ - 0.5 * dt * kap.colwise().squaredNorm().transpose());
        }
        weights.push_back(std::move(w));
    }

    std::vector<ReferenceGrid> out(scenarios.size());
    for (auto& grid : out) {
        grid.values.resize(static_cast<Eigen::Index>(times.size()), Q);
        grid.standard_errors.resize(static_cast<Eigen::Index>(times.size()), Q);
    }
    const double norm = std::pow(2.0 * std::numbers::pi * h * h, -0.5 * static_cast<double>(m));
    const double Pd = static_cast<double>(P);
    Eigen::MatrixXd kernel(Q, P);
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (Eigen::Index q = 0; q < Q; ++q) {
            const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(points[static_cast<std::size_t>(q)].data(), m);
            kernel.row(q) = (norm * (-(positions[k].colwise() - u).colwise().squaredNorm() / (2.0 * h * h))
                                        .array()
                                        .exp())
                                .matrix();
        }
        const Eigen::MatrixXd kernel_sq = kernel.array().square().matrix();
        for (std::size_t sc = 0; sc < scenarios.size(); ++sc) {
            const Eigen::VectorXd w = weights[sc].row(static_cast<Eigen::Index>(k)).transpose();
            const Eigen::VectorXd mean = kernel * w / Pd;
            const Eigen::VectorXd second = kernel_sq * w.array().square().matrix() / Pd;
            const Eigen::VectorXd var = ((second.array() - mean.array().square()) * Pd / (Pd - 1.0)).max(0.0);
            out[sc].values.row(static_cast<Eigen::Index>(k)) = mean.transpose();
            out[sc].standard_errors.row(static_cast<Eigen::Index>(k)) = (var.array() / Pd).sqrt().matrix().transpose();
        }
    }
    return out;
}

std::unique_ptr<ZakaiProblem> zakai_problem(Eigen::Index dim, double horizon) {
    ZakaiParams params;
    params.dim = dim;
    params.horizon = horizon;
    return std::make_unique<ZakaiProblem>(params);
}

std::unique_ptr<SpdeProblem> make_problem(const ProblemSettings& settings) {
    if (settings.name == "heat") return std::make_unique<HeatProblem>(settings.heat);
    if (settings.name == "hjm") return std::make_unique<HjmProblem>(settings.hjm);
    if (settings.name == "zakai") return std::make_unique<ZakaiProblem>(settings.zakai);
    throw ConfigError("unknown problem '" + settings.name + "'");
}

}  // namespace chaos_spde
