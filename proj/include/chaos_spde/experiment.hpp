#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chaos_spde/chaos.hpp"
#include "chaos_spde/rates.hpp"
#include "chaos_spde/spde.hpp"

namespace chaos_spde {

enum class TrainingMode { supervised, unsupervised };

struct ExperimentConfig {
    ProblemSettings problem;
    std::optional<std::uint32_t> I;  // default: the problem's number of nonzero eigenvalues
    std::uint32_t J = 5;
    std::vector<std::uint32_t> K{1};
    ModelSettings model;
    std::size_t M1 = 50;
    std::size_t M2 = 20;
    std::size_t M3 = 200;
    TrainingMode mode = TrainingMode::supervised;
    TrainConfig train;
    std::optional<double> learning_rate;  // default: 2e-3 for heat, 5e-4 otherwise
    std::optional<std::uint64_t> seed;
    double train_fraction = 0.8;
    double C_S = 1.0;
    double C_FB = 1.0;
    std::size_t surface_scenarios = 3;

    std::uint32_t brownian_coordinates() const;
    /// Canonical key = value rendering of every setting; the config hash is taken over it.
    std::string canonical() const;
    std::string hash() const;
    std::uint64_t root_seed() const;
    /// Fills derived fields (learning rate, particle seed) and checks ranges. Throws ConfigError.
    void finalize();
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

struct Dataset {
    ExperimentConfig config;
    std::unique_ptr<SpdeProblem> problem;
    TrainingGrid grid;
    std::optional<SupervisedTargets> targets;
};

Dataset build_dataset(const ExperimentConfig& config);
void write_dataset(const Dataset& data, const std::filesystem::path& out);
Dataset read_dataset(const ExperimentConfig& config, const std::filesystem::path& out);

ChaosModel make_model(const ExperimentConfig& config, const SpdeProblem& problem, std::uint32_t K);
TrainResult train_model(ChaosModel& model, const Dataset& data);

/// d_beta X^{(I,J,K)}_t(omega_m)(u).
double predict(const ChaosModel& model, const GaussianPanel& panel, std::size_t m, double t,
               std::span<const double> u, int beta = kValue);

struct Metrics {
    std::uint32_t K = 0;
    double train_error = 0.0;       // relative loss on the training split
    double oos_error = 0.0;         // relative loss on the test split (NaN when empty)
    double reference_error = 0.0;   // relative norm error against the reference at t = T (NaN: none)
    double anchor_error = 0.0;      // mean |X_t(0) - r_t| / |r_t| (HJM only, NaN otherwise)
    double within_band = 0.0;       // share of points with |X - ref| <= 3 SE (Monte-Carlo references)
    std::size_t flagged_points = 0; // reference values whose SE exceeds the configured share
    std::size_t evaluation_points = 0;
};

struct SurfaceRow {
    std::size_t scenario;
    double t;
    Point u;
    double surrogate;
    double reference;
    double reference_se;
};

Metrics evaluate_model(const Dataset& data, const ChaosModel& model, std::uint32_t K,
                       std::vector<SurfaceRow>* surface = nullptr);

/// CLI subcommands; all write into `out`.
void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out);
void cmd_train(const ExperimentConfig& config, const std::filesystem::path& out);
void cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& out);
void cmd_rates(const ExperimentConfig& config, const std::filesystem::path& out);
void cmd_all(const ExperimentConfig& config, const std::filesystem::path& out);

}  // namespace chaos_spde
