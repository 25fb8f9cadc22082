#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chaos_spde/basis.hpp"
#include "chaos_spde/nets.hpp"
#include "chaos_spde/wick.hpp"

namespace chaos_spde {

/// Derivative selector: kValue for the function itself, l >= 0 for d/du_l.
inline constexpr int kValue = -1;

enum class ReferenceKind { exact, monte_carlo, none };
std::string to_string(ReferenceKind kind);

using Point = std::vector<double>;

/// Scenario data sampled on the training time grid.
struct ScenarioPath {
    std::vector<double> times;
    /// I x times: truncated Brownian coordinates W^{(I,J)}_{t_k}.
    Eigen::MatrixXd noise;
    /// Problem-specific state on the same grid (the hidden signal for filtering), else empty.
    Eigen::MatrixXd signal;
};

/// Reference solution values on a (time x point) grid for one scenario.
struct ReferenceGrid {
    Eigen::MatrixXd values;           // times x points
    Eigen::MatrixXd standard_errors;  // same shape; zero for closed forms
};

/// Semilinear SPDE dX = (A X + F(t,X)) dt + B(t,X) dW with affine coefficients
///   F(t,w,x)(u)   = f0(t,w,u) + f1(t,w,u) x(u)
///   B(t,w,x)v(u)  = b0(u)^T v + x(u) b1(u)^T v,   v in R^I.
/// All actions are pointwise in u, and derivatives are requested through a selector
/// (kValue or a spatial direction).
class SpdeProblem {
public:
    virtual ~SpdeProblem() = default;

    virtual std::string name() const = 0;
    virtual Eigen::Index space_dim() const = 0;
    Eigen::Index output_dim() const { return 1; }
    virtual double horizon() const = 0;
    /// Nonzero prefix of the eigenvalues of Q; all later eigenvalues are zero.
    virtual std::vector<double> eigenvalues() const = 0;
    /// First `count` eigenvalues (zero-padded).
    std::vector<double> padded_eigenvalues(std::size_t count) const;
    std::size_t noise_dim() const { return eigenvalues().size(); }
    virtual int sobolev_order() const = 0;
    /// Weight function w(u) of the state space norm.
    virtual double weight(std::span<const double> u) const = 0;
    virtual ReferenceKind reference_kind() const = 0;

    /// Derivative selectors with their per-point weights c~; derivatives absent from the list
    /// carry zero weight.
    virtual std::vector<std::pair<int, Eigen::VectorXd>> sobolev_weights(const std::vector<Point>& points) const;

    /// i.i.d. spatial samples from the problem's sampling law.
    virtual std::vector<Point> sample_space(std::size_t count, std::uint64_t seed) const = 0;

    virtual double initial(std::span<const double> u, int beta) const = 0;
    /// Jet form of x -> d_beta(A x)(u). Throws std::domain_error when unavailable.
    virtual JetForm generator(std::span<const double> u, int beta) const = 0;

    /// d_beta f0 at grid time index k.
    virtual double drift_offset(const ScenarioPath& path, std::size_t k, std::span<const double> u,
                                int beta) const = 0;
    /// f1 at grid time index k (value only).
    virtual double drift_multiplier(const ScenarioPath& path, std::size_t k, std::span<const double> u) const;
    /// d_beta b0(u), a vector over the noise_dim() nonzero noise coordinates.
    virtual Eigen::VectorXd diffusion_offset(std::span<const double> u, int beta) const = 0;
    /// b1(u) (value only).
    virtual Eigen::VectorXd diffusion_multiplier(std::span<const double> u) const;
    /// True when f1 or b1 is nonzero, i.e. F or B depends on the state.
    virtual bool multiplicative() const { return false; }

    /// Scenario path on `times` (default: Brownian coordinates only).
    virtual ScenarioPath scenario_path(const GaussianPanel& panel, const TimeBasis& basis, std::size_t scenario,
                                       std::span<const double> times) const;

    /// Reference solution of each listed scenario on the (times x points) grid.
    virtual std::vector<ReferenceGrid> reference(const GaussianPanel& panel, const TimeBasis& basis,
                                                 std::span<const std::size_t> scenarios,
                                                 std::span<const double> times, const std::vector<Point>& points,
                                                 int beta) const = 0;
};

// ------------------------------------------------------------ stochastic heat

struct HeatParams {
    Eigen::Index dim = 1;
    double sigma = 6.0;      // width of the initial Gaussian bump
    double amplitude = 10.0;
    double horizon = 1.0;
};

/// dX = Laplacian X dt + b0 dW on L^2(R^m, w) with Gaussian weight, b0(z) = constant function z.
class HeatProblem final : public SpdeProblem {
public:
    explicit HeatProblem(HeatParams params);

    const HeatParams& params() const { return params_; }

    std::string name() const override { return "heat"; }
    Eigen::Index space_dim() const override { return params_.dim; }
    double horizon() const override { return params_.horizon; }
    std::vector<double> eigenvalues() const override { return {1.0}; }
    int sobolev_order() const override { return 0; }
    double weight(std::span<const double> u) const override;
    ReferenceKind reference_kind() const override { return ReferenceKind::exact; }
    std::vector<Point> sample_space(std::size_t count, std::uint64_t seed) const override;
    double initial(std::span<const double> u, int beta) const override;
    JetForm generator(std::span<const double> u, int beta) const override;
    double drift_offset(const ScenarioPath&, std::size_t, std::span<const double>, int) const override { return 0.0; }
    Eigen::VectorXd diffusion_offset(std::span<const double> u, int beta) const override;
    std::vector<ReferenceGrid> reference(const GaussianPanel& panel, const TimeBasis& basis,
                                         std::span<const std::size_t> scenarios, std::span<const double> times,
                                         const std::vector<Point>& points, int beta) const override;

    /// Deterministic part S_t chi0 (Gaussian-Gaussian convolution), or its derivative.
    double semigroup_initial(double t, std::span<const double> u, int beta = kValue) const;

private:
    HeatParams params_;
};

std::unique_ptr<HeatProblem> heat_problem(Eigen::Index dim, double sigma, double horizon);

/// S_t chi0(u) + W^{(I,J)}_t(omega_m).
double heat_reference(const HeatProblem& problem, const GaussianPanel& panel, const TimeBasis& basis,
                      std::size_t scenario, double t, std::span<const double> u);

// ---------------------------------------------------------------- HJM / Vasicek

struct HjmParams {
    double r0 = 4.0;
    double mu = 4.0;
    double kappa = 0.9;
    double sigma = 0.5;
    double horizon = 1.0;
    double tilt = 0.1;        // w(u) = exp(tilt u)
    double max_maturity = 3.0;
};

/// HJM equation for the Vasicek forward curve: A = d/du, F the no-arbitrage drift,
/// B(x)z = sigma exp(-kappa u) z. Sobolev order 1.
class HjmProblem final : public SpdeProblem {
public:
    explicit HjmProblem(HjmParams params);

    const HjmParams& params() const { return params_; }

    std::string name() const override { return "hjm"; }
    Eigen::Index space_dim() const override { return 1; }
    double horizon() const override { return params_.horizon; }
    std::vector<double> eigenvalues() const override { return {1.0}; }
    int sobolev_order() const override { return 1; }
    double weight(std::span<const double> u) const override;
    ReferenceKind reference_kind() const override { return ReferenceKind::exact; }
    /// Value at u = 0 (first point), derivative at every other point.
    std::vector<std::pair<int, Eigen::VectorXd>> sobolev_weights(const std::vector<Point>& points) const override;
    /// u_1 = 0, then i.i.d. from the density proportional to exp(tilt u) on [0, max_maturity].
    std::vector<Point> sample_space(std::size_t count, std::uint64_t seed) const override;
    double initial(std::span<const double> u, int beta) const override;
    JetForm generator(std::span<const double> u, int beta) const override;
    double drift_offset(const ScenarioPath& path, std::size_t k, std::span<const double> u,
                        int beta) const override;
    Eigen::VectorXd diffusion_offset(std::span<const double> u, int beta) const override;
    std::vector<ReferenceGrid> reference(const GaussianPanel& panel, const TimeBasis& basis,
                                         std::span<const std::size_t> scenarios, std::span<const double> times,
                                         const std::vector<Point>& points, int beta) const override;

    /// F(u) = (sigma^2/kappa) e^{-kappa u} (1 - e^{-kappa u}) or its derivative.
    double drift(double u, int beta = kValue) const;

private:
    HjmParams params_;
};

std::unique_ptr<HjmProblem> hjm_problem(double r0, double mu, double kappa, double sigma, double horizon);

/// Forward curve r e^{-kappa u} + (mu/kappa)(1 - e^{-kappa u}) - sigma^2/(2 kappa^2) (1 - e^{-kappa u})^2,
/// or its u-derivative for beta = 0.
double hjm_reference(double short_rate, double mu, double kappa, double sigma, double u, int beta = kValue);

/// Vasicek short rate r_t driven pathwise by the truncated Brownian motion of scenario m:
/// r_t = r0 e^{-kappa t} + (mu/kappa)(1 - e^{-kappa t}) + sigma int_0^t e^{-kappa (t-s)} dW^{(1,J)}_s,
/// with the stochastic integral in closed form against the cosine basis.
double vasicek_short_rate(const HjmParams& params, const GaussianPanel& panel, const TimeBasis& basis,
                          std::size_t scenario, double t);

/// Exact Ornstein-Uhlenbeck transition over dt driven by a standard normal z.
double vasicek_exact_transition(const HjmParams& params, double rate, double dt, double z);

// ------------------------------------------------------------------- Zakai

struct ZakaiParams {
    Eigen::Index dim = 2;          // m = n
    double horizon = 0.5;
    std::size_t substeps = 10;     // Euler substeps per grid interval (signal and particles)
    std::size_t particles = 10'000;
    double bandwidth = 0.25;       // Gaussian kernel bandwidth of the density estimate
    double se_threshold = 0.10;    // relative SE above which a reference value is flagged
    std::uint64_t particle_seed = 0;
};

/// Zakai equation of nonlinear filtering with signal dY = mu(Y) dt + sigma dW~ and observation
/// dZ = kappa(Y) dt + dW. Noise coordinates 1..m are the observation noise W, m+1..2m the
/// signal noise W~. The realised signal starts at Y_0 = 0.
class ZakaiProblem final : public SpdeProblem {
public:
    explicit ZakaiProblem(ZakaiParams params);

    const ZakaiParams& params() const { return params_; }

    std::string name() const override { return "zakai"; }
    Eigen::Index space_dim() const override { return params_.dim; }
    double horizon() const override { return params_.horizon; }
    std::vector<double> eigenvalues() const override;
    int sobolev_order() const override { return 0; }
    double weight(std::span<const double> u) const override;
    ReferenceKind reference_kind() const override { return ReferenceKind::monte_carlo; }
    std::vector<Point> sample_space(std::size_t count, std::uint64_t seed) const override;
    double initial(std::span<const double> u, int beta) const override;
    JetForm generator(std::span<const double> u, int beta) const override;
    double drift_offset(const ScenarioPath&, std::size_t, std::span<const double>, int) const override { return 0.0; }
    double drift_multiplier(const ScenarioPath& path, std::size_t k, std::span<const double> u) const override;
    Eigen::VectorXd diffusion_offset(std::span<const double> u, int beta) const override;
    Eigen::VectorXd diffusion_multiplier(std::span<const double> u) const override;
    bool multiplicative() const override { return true; }
    ScenarioPath scenario_path(const GaussianPanel& panel, const TimeBasis& basis, std::size_t scenario,
                               std::span<const double> times) const override;
    std::vector<ReferenceGrid> reference(const GaussianPanel& panel, const TimeBasis& basis,
                                         std::span<const std::size_t> scenarios, std::span<const double> times,
                                         const std::vector<Point>& points, int beta) const override;

    Eigen::VectorXd signal_drift(const Eigen::VectorXd& y) const;    // mu(y) = 0.25 y / (1 + |y|^2)
    double signal_drift_divergence(std::span<const double> y) const;
    Eigen::VectorXd observation(const Eigen::VectorXd& y) const;     // kappa(y) = 0.5 y
    /// sigma sigma^T (the all-ones matrix for sigma = m^{-1/2} 1).
    Eigen::MatrixXd diffusion_covariance() const;

    /// Signal Y and observation Z on the refined grid (substeps per interval of `times`).
    struct SignalPath {
        std::vector<double> times;
        Eigen::MatrixXd signal;       // m x fine times
        Eigen::MatrixXd observation;  // m x fine times
    };
    SignalPath simulate_signal(const GaussianPanel& panel, const TimeBasis& basis, std::size_t scenario,
                               std::span<const double> times) const;

private:
    ZakaiParams params_;
};

std::unique_ptr<ZakaiProblem> zakai_problem(Eigen::Index dim, double horizon);

/// Standard Gaussian density on R^m.
double gaussian_density(std::span<const double> u);

/// Problem factory by name ("heat", "hjm", "zakai").
struct ProblemSettings {
    std::string name = "heat";
    HeatParams heat;
    HjmParams hjm;
    ZakaiParams zakai;
};
std::unique_ptr<SpdeProblem> make_problem(const ProblemSettings& settings);

}  // namespace chaos_spde
