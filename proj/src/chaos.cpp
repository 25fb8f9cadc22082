#include "chaos_spde/chaos.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "chaos_spde/errors.hpp"
#include "chaos_spde/rng.hpp"

namespace chaos_spde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
/// Largest stacked least-squares system (rows x columns) assembled for the general solver.
constexpr std::size_t kMaxStackedEntries = 80'000'000;

void add_scaled(JetForm& acc, const JetForm& form, double scale) {
    if (scale == 0.0) return;
    acc.value += scale * form.value;
    acc.grad += scale * form.grad;
    acc.hess += scale * form.hess;
}

/// Problem-side data of the residual r = sum_alpha xi_alpha G_alpha - target over a scenario subset.
struct ResidualSpec {
    const TrainingGrid* grid = nullptr;
    std::vector<std::size_t> scenarios;
    bool unsupervised = false;
    bool multiplicative = false;
    std::vector<JetForm> value_forms;                   // per component
    std::vector<std::vector<JetForm>> generator_forms;  // per component and point
    std::vector<double> steps;                          // t_{k+1} - t_k
    Eigen::VectorXd row_weights;                        // c~ per residual row
    Eigen::MatrixXd targets;                            // rows x scenarios
    std::vector<Eigen::MatrixXd> coefficients;          // per scenario: intervals x points
    Eigen::MatrixXd xi;                                 // scenarios x indices
};

JetForm derivative_form(Eigen::Index dim, int beta) {
    return beta == kValue ? JetForm::evaluation(dim) : JetForm::partial(dim, beta);
}

ResidualSpec common_spec(const IndexSet& indices, Eigen::Index dim, const TrainingGrid& grid,
                         std::span<const std::size_t> scenarios) {
    grid.validate();
    if (indices.I() != grid.panel.I() || indices.J() != grid.panel.J())
        throw ConfigError("truncation of the model does not match the panel");
    ResidualSpec spec;
    spec.grid = &grid;
    spec.scenarios.assign(scenarios.begin(), scenarios.end());
    for (std::size_t m : spec.scenarios)
        if (m >= grid.panel.scenarios()) throw std::out_of_range("scenario outside the panel");
    for (const auto& [beta, w] : grid.components) {
        if (beta < kValue || beta >= dim) throw ConfigError("derivative selector exceeds the space dimension");
        spec.value_forms.push_back(derivative_form(dim, beta));
    }
    for (std::size_t k = 0; k + 1 < grid.times.size(); ++k) spec.steps.push_back(grid.times[k + 1] - grid.times[k]);
    spec.row_weights.resize(static_cast<Eigen::Index>(grid.rows()));
    for (std::size_t c = 0; c < grid.components.size(); ++c)
        for (std::size_t k = 0; k < grid.times.size(); ++k)
            for (std::size_t p = 0; p < grid.points.size(); ++p)
                spec.row_weights(static_cast<Eigen::Index>(grid.row(c, k, p))) =
                    grid.components[c].second(static_cast<Eigen::Index>(p));
    spec.xi = wick_matrix(indices, grid.panel, spec.scenarios);
    return spec;
}

ResidualSpec supervised_spec(const IndexSet& indices, Eigen::Index dim, const TrainingGrid& grid,
                             const Eigen::MatrixXd& targets, std::span<const std::size_t> scenarios) {
    ResidualSpec spec = common_spec(indices, dim, grid, scenarios);
    if (targets.rows() != static_cast<Eigen::Index>(grid.rows()) ||
        targets.cols() != static_cast<Eigen::Index>(grid.panel.scenarios()))
        throw ConfigError("supervised targets do not cover every residual row and scenario");
    spec.targets.resize(targets.rows(), static_cast<Eigen::Index>(spec.scenarios.size()));
    for (std::size_t j = 0; j < spec.scenarios.size(); ++j) {
        const auto col = targets.col(static_cast<Eigen::Index>(spec.scenarios[j]));
        for (Eigen::Index r = 0; r < targets.rows(); ++r)
            if (spec.row_weights(r) != 0.0 && !std::isfinite(col(r)))
                throw ConfigError("missing supervised target for a row with nonzero weight");
        spec.targets.col(static_cast<Eigen::Index>(j)) = col;
    }
    // Rows with zero weight may carry placeholders; keep them out of the arithmetic.
    for (Eigen::Index r = 0; r < spec.targets.rows(); ++r)
        if (spec.row_weights(r) == 0.0) spec.targets.row(r).setZero();
    return spec;
}

ResidualSpec unsupervised_spec(const IndexSet& indices, const TrainingGrid& grid, const SpdeProblem& problem,
                               std::span<const std::size_t> scenarios) {
    const Eigen::Index dim = problem.space_dim();
    ResidualSpec spec = common_spec(indices, dim, grid, scenarios);
    spec.unsupervised = true;
    spec.multiplicative = problem.multiplicative();
    const std::size_t C = grid.components.size();
    const std::size_t K1 = grid.times.size();
    const std::size_t P = grid.points.size();
    const auto noise_dim = std::min<std::size_t>(problem.noise_dim(), grid.panel.I());

    if (spec.multiplicative)
        for (const auto& [beta, w] : grid.components)
            if (beta != kValue && w.cwiseAbs().maxCoeff() > 0.0)
                throw ConfigError("state-dependent drift or diffusion: only value weights are supported "
                                  "in the unsupervised loss");

    spec.generator_forms.assign(C, {});
    std::vector<std::vector<Eigen::VectorXd>> offsets(C);
    std::vector<Eigen::VectorXd> multipliers(P);
    for (std::size_t c = 0; c < C; ++c) {
        const int beta = grid.components[c].first;
        for (std::size_t p = 0; p < P; ++p) {
            try {
                spec.generator_forms[c].push_back(problem.generator(grid.points[p], beta));
            } catch (const std::domain_error& e) {
                throw ConfigError(std::string("problem lacks the generator action: ") + e.what());
            }
            offsets[c].push_back(problem.diffusion_offset(grid.points[p], beta).head(noise_dim));
        }
    }
    if (spec.multiplicative)
        for (std::size_t p = 0; p < P; ++p) multipliers[p] = problem.diffusion_multiplier(grid.points[p]).head(noise_dim);

    spec.targets.resize(static_cast<Eigen::Index>(grid.rows()), static_cast<Eigen::Index>(spec.scenarios.size()));
    for (std::size_t j = 0; j < spec.scenarios.size(); ++j) {
        const ScenarioPath path = problem.scenario_path(grid.panel, grid.basis, spec.scenarios[j], grid.times);
        Eigen::MatrixXd dW(static_cast<Eigen::Index>(noise_dim), static_cast<Eigen::Index>(K1 - 1));
        for (std::size_t k = 0; k + 1 < K1; ++k)
            dW.col(static_cast<Eigen::Index>(k)) =
                (path.noise.col(static_cast<Eigen::Index>(k + 1)) - path.noise.col(static_cast<Eigen::Index>(k)))
                    .head(static_cast<Eigen::Index>(noise_dim));
        for (std::size_t c = 0; c < C; ++c) {
            const int beta = grid.components[c].first;
            for (std::size_t p = 0; p < P; ++p) {
                double acc = problem.initial(grid.points[p], beta);
                for (std::size_t k = 0; k < K1; ++k) {
                    spec.targets(static_cast<Eigen::Index>(grid.row(c, k, p)), static_cast<Eigen::Index>(j)) = acc;
                    if (k + 1 == K1) break;
                    acc += problem.drift_offset(path, k, grid.points[p], beta) * spec.steps[k] +
                           offsets[c][p].dot(dW.col(static_cast<Eigen::Index>(k)));
                }
            }
        }
        if (spec.multiplicative) {
            Eigen::MatrixXd coef(static_cast<Eigen::Index>(K1 - 1), static_cast<Eigen::Index>(P));
            for (std::size_t k = 0; k + 1 < K1; ++k)
                for (std::size_t p = 0; p < P; ++p)
                    coef(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p)) =
                        problem.drift_multiplier(path, k, grid.points[p]) * spec.steps[k] +
                        multipliers[p].dot(dW.col(static_cast<Eigen::Index>(k)));
            spec.coefficients.push_back(std::move(coef));
        }
    }
    return spec;
}

/// Value responses P and generator responses Q (rows x columns) of a surrogate, one column per index.
void surrogate_fields(const Surrogate& model, const ResidualSpec& spec, Eigen::MatrixXd& P, Eigen::MatrixXd& Q) {
    const TrainingGrid& grid = *spec.grid;
    const auto A = static_cast<Eigen::Index>(model.indices().size());
    P.setZero(static_cast<Eigen::Index>(grid.rows()), A);
    Q.setZero(spec.unsupervised ? P.rows() : 0, A);
    for (Eigen::Index a = 0; a < A; ++a)
        for (std::size_t k = 0; k < grid.times.size(); ++k)
            for (std::size_t p = 0; p < grid.points.size(); ++p) {
                const Jet jet = model.propagator_jet(static_cast<std::size_t>(a), grid.times[k], grid.points[p]);
                for (std::size_t c = 0; c < spec.value_forms.size(); ++c) {
                    const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                    P(r, a) = spec.value_forms[c].apply(jet);
                    if (spec.unsupervised) Q(r, a) = spec.generator_forms[c][p].apply(jet);
                }
            }
}

/// Feature responses of a frozen hidden layer, one column per hidden unit.
void feature_fields(const TanhLayer& layer, const ResidualSpec& spec, Eigen::MatrixXd& P, Eigen::MatrixXd& Q) {
    const TrainingGrid& grid = *spec.grid;
    const Eigen::Index N = layer.neurons();
    P.setZero(static_cast<Eigen::Index>(grid.rows()), N);
    Q.setZero(spec.unsupervised ? P.rows() : 0, N);
    for (std::size_t k = 0; k < grid.times.size(); ++k)
        for (std::size_t p = 0; p < grid.points.size(); ++p)
            for (std::size_t c = 0; c < spec.value_forms.size(); ++c) {
                const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                P.row(r) = feature_response(layer, grid.times[k], grid.points[p], spec.value_forms[c]).transpose();
                if (spec.unsupervised)
                    Q.row(r) =
                        feature_response(layer, grid.times[k], grid.points[p], spec.generator_forms[c][p]).transpose();
            }
}

/// G0 = P - sum_{l<k} dt_l Q_l, row blocks per (component, point).
Eigen::MatrixXd base_rows(const ResidualSpec& spec, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd G = P;
    if (!spec.unsupervised) return G;
    const TrainingGrid& grid = *spec.grid;
    Eigen::RowVectorXd running(P.cols());
    for (std::size_t c = 0; c < grid.components.size(); ++c)
        for (std::size_t p = 0; p < grid.points.size(); ++p) {
            running.setZero();
            for (std::size_t k = 0; k < grid.times.size(); ++k) {
                const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                G.row(r) -= running;
                if (k + 1 < grid.times.size()) running += spec.steps[k] * Q.row(r);
            }
        }
    return G;
}

/// Rows sum_{l<k} coef(l, p) X_l for a state-dependent coefficient.
Eigen::MatrixXd multiplier_rows(const ResidualSpec& spec, const Eigen::MatrixXd& coef, const Eigen::MatrixXd& X) {
    const TrainingGrid& grid = *spec.grid;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    Eigen::RowVectorXd running(X.cols());
    for (std::size_t c = 0; c < grid.components.size(); ++c)
        for (std::size_t p = 0; p < grid.points.size(); ++p) {
            running.setZero();
            for (std::size_t k = 0; k < grid.times.size(); ++k) {
                const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                out.row(r) = running;
                if (k + 1 < grid.times.size())
                    running += coef(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p)) * X.row(r);
            }
        }
    return out;
}

/// Adjoint of multiplier_rows: out_l = coef(l, p) sum_{k>l} Y_k.
Eigen::MatrixXd multiplier_rows_adjoint(const ResidualSpec& spec, const Eigen::MatrixXd& coef,
                                        const Eigen::MatrixXd& Y) {
    const TrainingGrid& grid = *spec.grid;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
    Eigen::RowVectorXd tail(Y.cols());
    for (std::size_t c = 0; c < grid.components.size(); ++c)
        for (std::size_t p = 0; p < grid.points.size(); ++p) {
            tail.setZero();
            for (std::size_t k = grid.times.size(); k-- > 0;) {
                const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                if (k + 1 < grid.times.size())
                    out.row(r) = coef(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p)) * tail;
                tail += Y.row(r);
            }
        }
    return out;
}

/// Adjoint of the generator part of base_rows: out_l = -dt_l sum_{k>l} Y_k.
Eigen::MatrixXd base_rows_generator_adjoint(const ResidualSpec& spec, const Eigen::MatrixXd& Y) {
    const TrainingGrid& grid = *spec.grid;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
    Eigen::RowVectorXd tail(Y.cols());
    for (std::size_t c = 0; c < grid.components.size(); ++c)
        for (std::size_t p = 0; p < grid.points.size(); ++p) {
            tail.setZero();
            for (std::size_t k = grid.times.size(); k-- > 0;) {
                const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                if (k + 1 < grid.times.size()) out.row(r) = -spec.steps[k] * tail;
                tail += Y.row(r);
            }
        }
    return out;
}

struct Evaluation {
    double loss = 0.0;
    Eigen::MatrixXd P_adjoint;  // d loss / d P (rows x indices)
    Eigen::MatrixXd Q_adjoint;
};

Evaluation evaluate_residual(const ResidualSpec& spec, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                             bool adjoint) {
    const Eigen::MatrixXd G0 = base_rows(spec, P, Q);
    Eigen::MatrixXd pred = G0 * spec.xi.transpose();
    if (spec.multiplicative) {
        const Eigen::MatrixXd PX = P * spec.xi.transpose();
        for (Eigen::Index j = 0; j < pred.cols(); ++j)
            pred.col(j) -= multiplier_rows(spec, spec.coefficients[static_cast<std::size_t>(j)], PX.col(j));
    }
    const Eigen::MatrixXd diff = pred - spec.targets;
    const Eigen::MatrixXd weighted = spec.row_weights.asDiagonal() * diff;
    Evaluation ev;
    ev.loss = weighted.norm();
    if (!std::isfinite(ev.loss)) throw NumericalError("loss is not finite");
    if (!adjoint) return ev;

    Eigen::MatrixXd rbar = Eigen::MatrixXd::Zero(diff.rows(), diff.cols());
    if (ev.loss > 0.0) rbar = spec.row_weights.array().square().matrix().asDiagonal() * diff / ev.loss;
    const Eigen::MatrixXd G0bar = rbar * spec.xi;
    ev.P_adjoint = G0bar;
    if (spec.unsupervised) ev.Q_adjoint = base_rows_generator_adjoint(spec, G0bar);
    if (spec.multiplicative)
        for (Eigen::Index j = 0; j < rbar.cols(); ++j)
            ev.P_adjoint -= multiplier_rows_adjoint(spec, spec.coefficients[static_cast<std::size_t>(j)], rbar.col(j)) *
                            spec.xi.row(j);
    return ev;
}

double surrogate_loss(const Surrogate& model, const ResidualSpec& spec) {
    Eigen::MatrixXd P, Q;
    surrogate_fields(model, spec, P, Q);
    return evaluate_residual(spec, P, Q, false).loss;
}

LossValue model_loss_gradient(const ChaosModel& model, const ResidualSpec& spec) {
    if (model.kind() != NetKind::deterministic)
        throw std::logic_error("parameter gradients are defined for deterministic nets only");
    Eigen::MatrixXd P, Q;
    surrogate_fields(model, spec, P, Q);
    const Evaluation ev = evaluate_residual(spec, P, Q, true);
    const TrainingGrid& grid = *spec.grid;
    const Eigen::Index per_net = model.deterministic_nets().front().parameter_count();
    const Eigen::Index dim = model.space_dim();
    LossValue out{ev.loss, Eigen::VectorXd::Zero(model.parameter_count())};
    for (std::size_t a = 0; a < model.size(); ++a) {
        auto segment = out.gradient.segment(static_cast<Eigen::Index>(a) * per_net, per_net);
        for (std::size_t k = 0; k < grid.times.size(); ++k)
            for (std::size_t p = 0; p < grid.points.size(); ++p) {
                JetForm form = JetForm::zero(dim);
                bool any = false;
                for (std::size_t c = 0; c < spec.value_forms.size(); ++c) {
                    const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                    const double pb = ev.P_adjoint(r, static_cast<Eigen::Index>(a));
                    if (pb != 0.0) any = true;
                    add_scaled(form, spec.value_forms[c], pb);
                    if (spec.unsupervised) {
                        const double qb = ev.Q_adjoint(r, static_cast<Eigen::Index>(a));
                        if (qb != 0.0) any = true;
                        add_scaled(form, spec.generator_forms[c][p], qb);
                    }
                }
                if (any)
                    accumulate_parameter_gradient(model.layer(a), grid.times[k], grid.points[p], form, 0, 1.0,
                                                  segment);
            }
    }
    return out;
}

void check_model_grid(const ChaosModel& model, const TrainingGrid& grid) {
    model.check_panel(grid.panel);
    if (model.basis().horizon() != grid.basis.horizon())
        throw ConfigError("model and grid disagree on the horizon");
    if (model.output_dim() != 1) throw ConfigError("training supports scalar outputs only");
    for (const Point& u : grid.points)
        if (static_cast<Eigen::Index>(u.size()) != model.space_dim())
            throw ConfigError("space samples do not match the model's input dimension");
}

/// Thin QR compression: returns (R, Q^T b) so that ||B x - b|| = ||R x - Q^T b|| + const.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> compress(const Eigen::MatrixXd& B, const Eigen::VectorXd& b) {
    const Eigen::Index r = std::min(B.rows(), B.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    Eigen::VectorXd qtb = b;
    qtb.applyOnTheLeft(qr.householderQ().adjoint());
    Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    return {std::move(R), qtb.head(r)};
}

LeastSquaresResult solve_stacked(const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& blocks,
                                 double ridge) {
    Eigen::Index rows = 0;
    const Eigen::Index cols = blocks.front().first.cols();
    for (const auto& [B, b] : blocks) rows += B.rows();
    Eigen::MatrixXd design(rows, cols);
    Eigen::MatrixXd rhs(rows, 1);
    Eigen::Index at = 0;
    for (const auto& [B, b] : blocks) {
        design.middleRows(at, B.rows()) = B;
        rhs.middleRows(at, B.rows()) = b;
        at += B.rows();
    }
    return fit_readout_least_squares(design, rhs, ridge);
}

void check_stack_size(std::size_t rows, std::size_t cols) {
    if (rows * cols > kMaxStackedEntries)
        throw ConfigError("stacked least-squares system too large; use shared random features");
}

LeastSquaresResult fit_random_features(ChaosModel& model, const ResidualSpec& spec, double ridge) {
    const auto A = static_cast<Eigen::Index>(model.size());
    const Eigen::Index N = model.neurons();
    const auto M = static_cast<Eigen::Index>(spec.scenarios.size());
    const Eigen::VectorXd& w = spec.row_weights;
    const Eigen::MatrixXd T = w.asDiagonal() * spec.targets;
    LeastSquaresResult result;

    if (model.shared_features()) {
        Eigen::MatrixXd P, Q;
        feature_fields(model.layer(0), spec, P, Q);
        const Eigen::MatrixXd G0 = base_rows(spec, P, Q);
        if (!spec.multiplicative) {
            result = fit_kronecker_least_squares(w.asDiagonal() * G0, spec.xi, T, ridge);
        } else {
            check_stack_size(static_cast<std::size_t>(M * std::min(N, G0.rows())), static_cast<std::size_t>(A * N));
            std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> blocks;
            for (Eigen::Index j = 0; j < M; ++j) {
                const Eigen::MatrixXd G =
                    w.asDiagonal() * (G0 - multiplier_rows(spec, spec.coefficients[static_cast<std::size_t>(j)], P));
                auto [R, rhs] = compress(G, T.col(j));
                Eigen::MatrixXd block(R.rows(), A * N);
                for (Eigen::Index a = 0; a < A; ++a) block.middleCols(a * N, N) = spec.xi(j, a) * R;
                blocks.emplace_back(std::move(block), std::move(rhs));
            }
            result = solve_stacked(blocks, ridge);
            result.solution = Eigen::Map<const Eigen::MatrixXd>(result.solution.data(), N, A).eval();
        }
    } else {
        std::vector<Eigen::MatrixXd> P(static_cast<std::size_t>(A)), G0(static_cast<std::size_t>(A));
        for (Eigen::Index a = 0; a < A; ++a) {
            Eigen::MatrixXd Q;
            feature_fields(model.layer(static_cast<std::size_t>(a)), spec, P[static_cast<std::size_t>(a)], Q);
            G0[static_cast<std::size_t>(a)] = base_rows(spec, P[static_cast<std::size_t>(a)], Q);
        }
        const Eigen::Index S = G0.front().rows();
        check_stack_size(static_cast<std::size_t>(M * std::min(S, A * N)), static_cast<std::size_t>(A * N));
        std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> blocks;
        if (!spec.multiplicative) {
            Eigen::MatrixXd all(S, A * N);
            for (Eigen::Index a = 0; a < A; ++a)
                all.middleCols(a * N, N) = w.asDiagonal() * G0[static_cast<std::size_t>(a)];
            const Eigen::Index r = std::min(S, A * N);
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(all);
            Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
            Eigen::MatrixXd qtT = T;
            qtT.applyOnTheLeft(qr.householderQ().adjoint());
            for (Eigen::Index j = 0; j < M; ++j) {
                Eigen::MatrixXd block = R;
                for (Eigen::Index a = 0; a < A; ++a) block.middleCols(a * N, N) *= spec.xi(j, a);
                blocks.emplace_back(std::move(block), qtT.col(j).head(r));
            }
        } else {
            for (Eigen::Index j = 0; j < M; ++j) {
                Eigen::MatrixXd B(S, A * N);
                for (Eigen::Index a = 0; a < A; ++a) {
                    const auto& Pa = P[static_cast<std::size_t>(a)];
                    B.middleCols(a * N, N) =
                        spec.xi(j, a) * (w.asDiagonal() * (G0[static_cast<std::size_t>(a)] -
                                                           multiplier_rows(spec, spec.coefficients[static_cast<std::size_t>(j)], Pa)));
                }
                blocks.push_back(compress(B, T.col(j)));
            }
        }
        result = solve_stacked(blocks, ridge);
        result.solution = Eigen::Map<const Eigen::MatrixXd>(result.solution.data(), N, A).eval();
    }
    if (!result.solution.allFinite()) throw NumericalError("least-squares readouts are not finite");
    model.set_readout_matrix(result.solution);
    return result;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Shared driver for both losses. `make_spec` builds the residual for a scenario subset.
template <class MakeSpec>
TrainResult train(ChaosModel& model, const TrainingGrid& grid, const TrainConfig& config, MakeSpec make_spec) {
    check_model_grid(model, grid);
    if (grid.train.empty()) throw ConfigError("training split is empty");
    const auto start = Clock::now();
    TrainResult result;
    const bool have_test = !grid.test.empty();

    if (model.kind() == NetKind::random_feature) {
        const ResidualSpec spec = make_spec(std::span<const std::size_t>(grid.train));
        const LeastSquaresResult ls = fit_random_features(model, spec, config.ridge);
        result.condition_estimate = ls.condition_estimate;
        result.ill_conditioned = ls.ill_conditioned;
        TraceRow row;
        row.epoch = 1;
        row.train_loss = surrogate_loss(model, spec);
        row.test_error = have_test ? surrogate_loss(model, make_spec(std::span<const std::size_t>(grid.test))) : kNaN;
        row.wall_time_ms = elapsed_ms(start);
        result.trace.push_back(row);
        return result;
    }

    if (config.batch_size == 0) throw ConfigError("batch size must be positive");
    Eigen::VectorXd params = model.parameters();
    AdamState state = AdamState::zeros(params.size());
    CounterStream stream(config.seed);
    std::vector<std::size_t> order = grid.train;
    const std::size_t batches = (order.size() + config.batch_size - 1) / config.batch_size;
    std::optional<ResidualSpec> test_spec;
    if (have_test && config.test_every > 0) test_spec = make_spec(std::span<const std::size_t>(grid.test));

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[stream.below(i)]);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * config.batch_size;
            const std::size_t hi = std::min(order.size(), lo + config.batch_size);
            const ResidualSpec spec = make_spec(std::span<const std::size_t>(order.data() + lo, hi - lo));
            const LossValue lv = model_loss_gradient(model, spec);
            if (!std::isfinite(lv.loss)) throw NumericalError("training loss diverged");
            adam_step(params, lv.gradient, state, config.adam);
            model.set_parameters(params);
            loss_sum += lv.loss;
        }
        TraceRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(batches);
        row.test_error = (test_spec && epoch % config.test_every == 0) ? surrogate_loss(model, *test_spec) : kNaN;
        row.wall_time_ms = elapsed_ms(start);
        result.trace.push_back(row);
    }
    return result;
}

}  // namespace

// ------------------------------------------------------------------ model

std::string to_string(NetKind kind) {
    return kind == NetKind::deterministic ? "deterministic" : "random_feature";
}

NetKind parse_net_kind(const std::string& text) {
    if (text == "deterministic") return NetKind::deterministic;
    if (text == "random_feature" || text == "random") return NetKind::random_feature;
    throw ConfigError("unknown model kind '" + text + "'");
}

ChaosModel::ChaosModel(IndexSet indices, TimeBasis basis, std::vector<double> eigenvalues, Eigen::Index space_dim,
                       Eigen::Index output_dim, const ModelSettings& settings)
    : indices_(std::move(indices)),
      basis_(basis),
      eigenvalues_(std::move(eigenvalues)),
      space_dim_(space_dim),
      output_dim_(output_dim),
      kind_(settings.kind),
      shared_(settings.kind == NetKind::random_feature && settings.shared_features) {
    if (space_dim < 1 || output_dim < 1 || settings.neurons < 1) throw ConfigError("model sizes must be positive");
    if (basis_.count() != indices_.J()) throw ConfigError("time basis size differs from J");
    if (eigenvalues_.size() < indices_.I()) throw ConfigError("need one eigenvalue per Brownian coordinate");
    for (std::size_t k = 0; k < indices_.size(); ++k) {
        const std::uint64_t seed = counter_hash(settings.seed, shared_ ? 0 : k);
        if (kind_ == NetKind::deterministic)
            deterministic_.push_back(init_deterministic_net(settings.neurons, space_dim, output_dim, seed));
        else
            random_.push_back(
                sample_random_net(settings.neurons, space_dim, output_dim, seed, settings.law, settings.box_radius));
    }
}

ChaosModel::ChaosModel(IndexSet indices, TimeBasis basis, std::vector<double> eigenvalues, bool shared_features,
                       std::vector<DeterministicNet> nets)
    : indices_(std::move(indices)),
      basis_(basis),
      eigenvalues_(std::move(eigenvalues)),
      kind_(NetKind::deterministic),
      shared_(false),
      deterministic_(std::move(nets)) {
    (void)shared_features;
    if (deterministic_.size() != indices_.size()) throw ConfigError("one net per index is required");
    space_dim_ = deterministic_.front().layer().input_dim();
    output_dim_ = deterministic_.front().layer().output_dim();
}

ChaosModel::ChaosModel(IndexSet indices, TimeBasis basis, std::vector<double> eigenvalues, bool shared_features,
                       std::vector<RandomFeatureNet> nets)
    : indices_(std::move(indices)),
      basis_(basis),
      eigenvalues_(std::move(eigenvalues)),
      kind_(NetKind::random_feature),
      shared_(shared_features),
      random_(std::move(nets)) {
    if (random_.size() != indices_.size()) throw ConfigError("one net per index is required");
    space_dim_ = random_.front().layer().input_dim();
    output_dim_ = random_.front().layer().output_dim();
}

const TanhLayer& ChaosModel::layer(std::size_t k) const {
    if (k >= indices_.size()) throw std::out_of_range("propagator index out of range");
    return kind_ == NetKind::deterministic ? deterministic_[k].layer() : random_[k].layer();
}

Jet ChaosModel::propagator_jet(std::size_t k, double t, std::span<const double> u) const {
    return net_jet(layer(k), t, u, 0);
}

Eigen::Index ChaosModel::parameter_count() const {
    if (kind_ != NetKind::deterministic) return 0;
    return static_cast<Eigen::Index>(deterministic_.size()) * deterministic_.front().parameter_count();
}

Eigen::VectorXd ChaosModel::parameters() const {
    if (kind_ != NetKind::deterministic) throw std::logic_error("random-feature models expose readouts only");
    const Eigen::Index per = deterministic_.front().parameter_count();
    Eigen::VectorXd flat(parameter_count());
    for (std::size_t k = 0; k < deterministic_.size(); ++k)
        flat.segment(static_cast<Eigen::Index>(k) * per, per) = deterministic_[k].parameters();
    return flat;
}

void ChaosModel::set_parameters(const Eigen::VectorXd& flat) {
    if (kind_ != NetKind::deterministic) throw std::logic_error("random-feature models expose readouts only");
    if (flat.size() != parameter_count()) throw std::invalid_argument("parameter vector has wrong size");
    const Eigen::Index per = deterministic_.front().parameter_count();
    for (std::size_t k = 0; k < deterministic_.size(); ++k)
        deterministic_[k].set_parameters(flat.segment(static_cast<Eigen::Index>(k) * per, per));
}

Eigen::MatrixXd ChaosModel::readout_matrix() const {
    if (kind_ != NetKind::random_feature) throw std::logic_error("readout matrix is defined for random features");
    Eigen::MatrixXd Y(neurons(), static_cast<Eigen::Index>(random_.size()));
    for (std::size_t k = 0; k < random_.size(); ++k) Y.col(static_cast<Eigen::Index>(k)) = random_[k].readouts().col(0);
    return Y;
}

void ChaosModel::set_readout_matrix(const Eigen::MatrixXd& readouts) {
    if (kind_ != NetKind::random_feature) throw std::logic_error("readout matrix is defined for random features");
    if (output_dim_ != 1 || readouts.rows() != neurons() ||
        readouts.cols() != static_cast<Eigen::Index>(random_.size()))
        throw std::invalid_argument("readout matrix has wrong shape");
    for (std::size_t k = 0; k < random_.size(); ++k) random_[k].set_readouts(readouts.col(static_cast<Eigen::Index>(k)));
}

void ChaosModel::check_panel(const GaussianPanel& panel) const {
    if (panel.I() != indices_.I() || panel.J() != indices_.J())
        throw ConfigError("truncation mismatch: model (I, J) = (" + std::to_string(indices_.I()) + ", " +
                          std::to_string(indices_.J()) + "), panel (" + std::to_string(panel.I()) + ", " +
                          std::to_string(panel.J()) + ")");
}

Eigen::VectorXd chaos_eval(const ChaosModel& model, const GaussianPanel& panel, std::size_t m, double t,
                           std::span<const double> u) {
    model.check_panel(panel);
    if (t < 0.0 || t > model.basis().horizon()) throw std::out_of_range("time outside [0, T]");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model.output_dim());
    for (std::size_t k = 0; k < model.size(); ++k)
        out += net_eval(model.layer(k), t, u) * wick_eval(model.indices()[k], panel, m);
    return out;
}

std::map<std::uint32_t, Eigen::VectorXd> decompose_by_order(const ChaosModel& model, const GaussianPanel& panel,
                                                            std::size_t m, double t, std::span<const double> u) {
    model.check_panel(panel);
    if (t < 0.0 || t > model.basis().horizon()) throw std::out_of_range("time outside [0, T]");
    std::map<std::uint32_t, Eigen::VectorXd> parts;
    for (std::size_t k = 0; k < model.size(); ++k) {
        const auto order = model.indices()[k].order();
        auto [it, inserted] = parts.try_emplace(order, Eigen::VectorXd::Zero(model.output_dim()));
        it->second += net_eval(model.layer(k), t, u) * wick_eval(model.indices()[k], panel, m);
    }
    return parts;
}

// ------------------------------------------------------------------- grid

void TrainingGrid::validate() const {
    if (times.empty()) throw ConfigError("time grid is empty");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0.0 || times[k] > basis.horizon()) throw ConfigError("time grid leaves [0, T]");
        if (k > 0 && !(times[k] > times[k - 1])) throw ConfigError("time grid must be strictly increasing");
    }
    if (points.empty()) throw ConfigError("no space samples");
    if (components.empty()) throw ConfigError("no Sobolev components");
    for (const auto& [beta, w] : components) {
        if (w.size() != static_cast<Eigen::Index>(points.size())) throw ConfigError("weight vector has wrong length");
        if ((w.array() < 0.0).any() || !w.allFinite()) throw ConfigError("weights must be finite and nonnegative");
    }
    std::vector<bool> seen(panel.scenarios(), false);
    for (const auto* split : {&train, &test})
        for (std::size_t m : *split) {
            if (m >= panel.scenarios()) throw ConfigError("split refers to a scenario outside the panel");
            if (seen[m]) throw ConfigError("train and test splits overlap");
            seen[m] = true;
        }
}

TrainingGrid make_training_grid(const SpdeProblem& problem, GaussianPanel panel, std::size_t time_steps,
                                std::size_t space_points, std::uint64_t space_seed, double train_fraction) {
    if (time_steps < 1 || space_points < 1) throw ConfigError("grid sizes must be positive");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train fraction must lie in (0, 1]");
    const double T = problem.horizon();
    TrainingGrid grid{std::move(panel), TimeBasis(T, 1), {}, {}, {}, {}, {}};
    grid.basis = TimeBasis(T, grid.panel.J());
    for (std::size_t k = 0; k <= time_steps; ++k)
        grid.times.push_back(k == time_steps ? T : T * static_cast<double>(k) / static_cast<double>(time_steps));
    grid.points = problem.sample_space(space_points, space_seed);
    grid.components = problem.sobolev_weights(grid.points);
    const std::size_t M = grid.panel.scenarios();
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(M) + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, M);
    for (std::size_t m = 0; m < M; ++m) (m < n_train ? grid.train : grid.test).push_back(m);
    grid.validate();
    return grid;
}

SupervisedTargets make_supervised_targets(const SpdeProblem& problem, const TrainingGrid& grid) {
    grid.validate();
    const auto S = static_cast<Eigen::Index>(grid.rows());
    const auto M = static_cast<Eigen::Index>(grid.panel.scenarios());
    SupervisedTargets out{Eigen::MatrixXd::Zero(S, M), Eigen::MatrixXd::Zero(S, M)};
    std::vector<std::size_t> all(grid.panel.scenarios());
    for (std::size_t m = 0; m < all.size(); ++m) all[m] = m;
    for (std::size_t c = 0; c < grid.components.size(); ++c) {
        const auto refs = problem.reference(grid.panel, grid.basis, all, grid.times, grid.points, grid.components[c].first);
        for (std::size_t m = 0; m < all.size(); ++m)
            for (std::size_t k = 0; k < grid.times.size(); ++k)
                for (std::size_t p = 0; p < grid.points.size(); ++p) {
                    const auto r = static_cast<Eigen::Index>(grid.row(c, k, p));
                    out.values(r, static_cast<Eigen::Index>(m)) =
                        refs[m].values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
                    out.standard_errors(r, static_cast<Eigen::Index>(m)) =
                        refs[m].standard_errors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
                }
    }
    return out;
}

// ----------------------------------------------------------------- losses

double supervised_loss(const Surrogate& model, const TrainingGrid& grid, const Eigen::MatrixXd& targets,
                       std::span<const std::size_t> scenarios) {
    return surrogate_loss(model, supervised_spec(model.indices(), model.space_dim(), grid, targets, scenarios));
}

double supervised_loss(const Surrogate& model, const TrainingGrid& grid, const Eigen::MatrixXd& targets) {
    return supervised_loss(model, grid, targets, grid.train);
}

double unsupervised_loss(const Surrogate& model, const TrainingGrid& grid, const SpdeProblem& problem,
                         std::span<const std::size_t> scenarios) {
    if (model.space_dim() != problem.space_dim()) throw ConfigError("model and problem dimensions differ");
    return surrogate_loss(model, unsupervised_spec(model.indices(), grid, problem, scenarios));
}

double unsupervised_loss(const Surrogate& model, const TrainingGrid& grid, const SpdeProblem& problem) {
    return unsupervised_loss(model, grid, problem, grid.train);
}

LossValue supervised_loss_gradient(const ChaosModel& model, const TrainingGrid& grid,
                                   const Eigen::MatrixXd& targets, std::span<const std::size_t> scenarios) {
    check_model_grid(model, grid);
    return model_loss_gradient(model, supervised_spec(model.indices(), model.space_dim(), grid, targets, scenarios));
}

LossValue unsupervised_loss_gradient(const ChaosModel& model, const TrainingGrid& grid, const SpdeProblem& problem,
                                     std::span<const std::size_t> scenarios) {
    check_model_grid(model, grid);
    return model_loss_gradient(model, unsupervised_spec(model.indices(), grid, problem, scenarios));
}

// --------------------------------------------------------------- training

TrainResult train_supervised(ChaosModel& model, const TrainingGrid& grid, const Eigen::MatrixXd& targets,
                             const TrainConfig& config) {
    return train(model, grid, config, [&](std::span<const std::size_t> scenarios) {
        return supervised_spec(model.indices(), model.space_dim(), grid, targets, scenarios);
    });
}

TrainResult train_unsupervised(ChaosModel& model, const TrainingGrid& grid, const SpdeProblem& problem,
                               const TrainConfig& config) {
    if (model.space_dim() != problem.space_dim()) throw ConfigError("model and problem dimensions differ");
    return train(model, grid, config, [&](std::span<const std::size_t> scenarios) {
        return unsupervised_spec(model.indices(), grid, problem, scenarios);
    });
}

}  // namespace chaos_spde
