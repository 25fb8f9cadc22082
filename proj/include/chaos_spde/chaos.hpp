#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chaos_spde/adam.hpp"
#include "chaos_spde/basis.hpp"
#include "chaos_spde/least_squares.hpp"
#include "chaos_spde/nets.hpp"
#include "chaos_spde/spde.hpp"
#include "chaos_spde/wick.hpp"

namespace chaos_spde {

/// Anything that exposes one propagator x_alpha(t, u) per index of an index set, with jets.
class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual const IndexSet& indices() const = 0;
    virtual Eigen::Index space_dim() const = 0;
    /// Jet in u of propagator number k (output channel 0) at (t, u).
    virtual Jet propagator_jet(std::size_t k, double t, std::span<const double> u) const = 0;
};

/// Surrogate defined by a closure; handy for exact expansions and tests.
class FunctionSurrogate final : public Surrogate {
public:
    using JetFunction = std::function<Jet(std::size_t, double, std::span<const double>)>;

    FunctionSurrogate(IndexSet indices, Eigen::Index space_dim, JetFunction jet)
        : indices_(std::move(indices)), dim_(space_dim), jet_(std::move(jet)) {}

    const IndexSet& indices() const override { return indices_; }
    Eigen::Index space_dim() const override { return dim_; }
    Jet propagator_jet(std::size_t k, double t, std::span<const double> u) const override { return jet_(k, t, u); }

private:
    IndexSet indices_;
    Eigen::Index dim_;
    JetFunction jet_;
};

enum class NetKind { deterministic, random_feature };
std::string to_string(NetKind kind);
NetKind parse_net_kind(const std::string& text);

struct ModelSettings {
    NetKind kind = NetKind::random_feature;
    Eigen::Index neurons = 75;
    FeatureLaw law = FeatureLaw::uniform_box;
    double box_radius = 2.0;
    /// Random features only: one frozen hidden layer shared by every propagator.
    bool shared_features = true;
    std::uint64_t seed = 0;
};

/// X^{(I,J,K)}_t(omega)(u) = sum_alpha net_alpha(t, u) xi_alpha(omega).
class ChaosModel final : public Surrogate {
public:
    ChaosModel(IndexSet indices, TimeBasis basis, std::vector<double> eigenvalues, Eigen::Index space_dim,
               Eigen::Index output_dim, const ModelSettings& settings);

    /// Rebuilds a model from stored nets (used by deserialization).
    ChaosModel(IndexSet indices, TimeBasis basis, std::vector<double> eigenvalues, bool shared_features,
               std::vector<DeterministicNet> nets);
    ChaosModel(IndexSet indices, TimeBasis basis, std::vector<double> eigenvalues, bool shared_features,
               std::vector<RandomFeatureNet> nets);

    const IndexSet& indices() const override { return indices_; }
    Eigen::Index space_dim() const override { return space_dim_; }
    Eigen::Index output_dim() const { return output_dim_; }
    Jet propagator_jet(std::size_t k, double t, std::span<const double> u) const override;

    NetKind kind() const { return kind_; }
    bool shared_features() const { return shared_; }
    std::size_t size() const { return indices_.size(); }
    const TimeBasis& basis() const { return basis_; }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    Eigen::Index neurons() const { return layer(0).neurons(); }

    const TanhLayer& layer(std::size_t k) const;
    const std::vector<DeterministicNet>& deterministic_nets() const { return deterministic_; }
    const std::vector<RandomFeatureNet>& random_nets() const { return random_; }

    /// Deterministic nets: all parameters concatenated in index order.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& flat);
    Eigen::Index parameter_count() const;

    /// Random-feature nets with d = 1: readouts as an N x |J| matrix (column per index).
    Eigen::MatrixXd readout_matrix() const;
    void set_readout_matrix(const Eigen::MatrixXd& readouts);

    /// Throws ConfigError if the panel's (I, J) differ from the model's truncation.
    void check_panel(const GaussianPanel& panel) const;

private:
    IndexSet indices_;
    TimeBasis basis_;
    std::vector<double> eigenvalues_;
    Eigen::Index space_dim_ = 1;
    Eigen::Index output_dim_ = 1;
    NetKind kind_ = NetKind::random_feature;
    bool shared_ = true;
    std::vector<DeterministicNet> deterministic_;
    std::vector<RandomFeatureNet> random_;
};

Eigen::VectorXd chaos_eval(const ChaosModel& model, const GaussianPanel& panel, std::size_t m, double t,
                           std::span<const double> u);

/// Partial sums of chaos_eval grouped by chaos order |alpha|.
std::map<std::uint32_t, Eigen::VectorXd> decompose_by_order(const ChaosModel& model, const GaussianPanel& panel,
                                                            std::size_t m, double t, std::span<const double> u);

/// Scenarios, time grid, space samples and Sobolev weights of one experiment.
/// Residual rows are ordered (component, time, point): row = (c * times + k) * points + p.
struct TrainingGrid {
    GaussianPanel panel;
    TimeBasis basis;
    std::vector<double> times;
    std::vector<Point> points;
    /// (derivative selector, weight c~ per point); weights do not depend on scenario or time.
    std::vector<std::pair<int, Eigen::VectorXd>> components;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;

    std::size_t rows() const { return components.size() * times.size() * points.size(); }
    std::size_t row(std::size_t c, std::size_t k, std::size_t p) const {
        return (c * times.size() + k) * points.size() + p;
    }
    void validate() const;
};

/// Uniform time grid t_k = k T / M2 (k = 0..M2), M3 space samples from the problem's law, the
/// problem's Sobolev weights, and the first `train_fraction` of the scenarios as training split.
TrainingGrid make_training_grid(const SpdeProblem& problem, GaussianPanel panel, std::size_t time_steps,
                                std::size_t space_points, std::uint64_t space_seed, double train_fraction = 0.8);

struct SupervisedTargets {
    Eigen::MatrixXd values;           // rows x scenarios
    Eigen::MatrixXd standard_errors;  // same shape, zero for closed-form references
};

/// Reference values d_beta X_{t_k}(omega_m)(u_p) for every residual row and scenario.
SupervisedTargets make_supervised_targets(const SpdeProblem& problem, const TrainingGrid& grid);

struct LossValue {
    double loss = 0.0;
    Eigen::VectorXd gradient;  // deterministic parameters; empty unless requested
};

/// sqrt( sum_{m, c, k, p} c~^2 | d_beta X - d_beta X^{(I,J,K)} |^2 ) over the listed scenarios
/// (default: the training split).
double supervised_loss(const Surrogate& model, const TrainingGrid& grid, const Eigen::MatrixXd& targets,
                       std::span<const std::size_t> scenarios);
double supervised_loss(const Surrogate& model, const TrainingGrid& grid, const Eigen::MatrixXd& targets);

/// Euler-Maruyama residual loss: X^{(I,J,K)}_{t_k} against
/// chi0 + sum_{l<k} (A X^{(I,J,K)}_{t_l} + F_l) dt_l + B_l dW_l, reusing the surrogate at earlier times.
double unsupervised_loss(const Surrogate& model, const TrainingGrid& grid, const SpdeProblem& problem,
                         std::span<const std::size_t> scenarios);
double unsupervised_loss(const Surrogate& model, const TrainingGrid& grid, const SpdeProblem& problem);

/// Loss with its gradient in the deterministic parameter layout of `model`.
LossValue supervised_loss_gradient(const ChaosModel& model, const TrainingGrid& grid,
                                   const Eigen::MatrixXd& targets, std::span<const std::size_t> scenarios);
LossValue unsupervised_loss_gradient(const ChaosModel& model, const TrainingGrid& grid, const SpdeProblem& problem,
                                     std::span<const std::size_t> scenarios);

struct TrainConfig {
    AdamConfig adam;
    std::size_t epochs = 2000;
    std::size_t batch_size = 40;
    double ridge = 1e-8;
    std::uint64_t seed = 0;
    /// Evaluate the test split every this many epochs (0: never).
    std::size_t test_every = 1;
};

struct TraceRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_error = 0.0;  // NaN when the test split is empty or not evaluated
    double wall_time_ms = 0.0;
};

struct TrainResult {
    std::vector<TraceRow> trace;
    /// Least-squares diagnostics (random features only).
    double condition_estimate = 0.0;
    bool ill_conditioned = false;
};

TrainResult train_supervised(ChaosModel& model, const TrainingGrid& grid, const Eigen::MatrixXd& targets,
                             const TrainConfig& config);
TrainResult train_unsupervised(ChaosModel& model, const TrainingGrid& grid, const SpdeProblem& problem,
                               const TrainConfig& config);

}  // namespace chaos_spde
