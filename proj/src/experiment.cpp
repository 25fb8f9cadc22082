#include "chaos_spde/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "chaos_spde/errors.hpp"
#include "chaos_spde/io.hpp"
#include "chaos_spde/rng.hpp"

namespace chaos_spde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("bad value '" + text + "' for key '" + key + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("bad boolean '" + text + "' for key '" + key + "'");
}

std::vector<std::uint32_t> parse_list(const std::string& key, const std::string& text) {
    std::vector<std::uint32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) throw ConfigError("empty entry in list for key '" + key + "'");
        out.push_back(parse_number<std::uint32_t>(key, item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw ConfigError("empty list for key '" + key + "'");
    return out;
}

std::string fmt(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::filesystem::path model_path(const std::filesystem::path& out, std::uint32_t K) {
    return out / ("model_K" + std::to_string(K) + ".json");
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Surrogate with identically zero propagators, used to normalise losses.
FunctionSurrogate zero_surrogate(const IndexSet& indices, Eigen::Index dim) {
    return FunctionSurrogate(indices, dim, [dim](std::size_t, double, std::span<const double>) {
        return Jet::zero(dim);
    });
}

}  // namespace

// ------------------------------------------------------------------ config

std::uint32_t ExperimentConfig::brownian_coordinates() const {
    if (I) return *I;
    return static_cast<std::uint32_t>(make_problem(problem)->noise_dim());
}

std::uint64_t ExperimentConfig::root_seed() const {
    if (!seed) throw ConfigError("a seed is mandatory (config key 'seed' or --seed)");
    return *seed;
}

void ExperimentConfig::finalize() {
    const std::uint64_t root = root_seed();
    problem.zakai.particle_seed = derive_seed(root, "particles");
    model.seed = derive_seed(root, "net");
    train.seed = derive_seed(root, "batches");
    train.adam.learning_rate = learning_rate.value_or(problem.name == "heat" ? 2e-3 : 5e-4);
    if (J < 1 || brownian_coordinates() < 1) throw ConfigError("I and J must be positive");
    if (M1 < 1 || M2 < 1 || M3 < 1) throw ConfigError("M1, M2, M3 must be positive");
    if (model.neurons < 1) throw ConfigError("neurons must be positive");
    if (train.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(train.ridge >= 0.0)) throw ConfigError("ridge must be nonnegative");
    if (!(train.adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    for (std::uint32_t k : K) index_set_size(brownian_coordinates(), J, k);
    (void)make_problem(problem);
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream o;
    auto d = [](double v) { return format_double(v); };
    o << "problem = " << problem.name << "\n";
    if (problem.name == "heat") {
        o << "heat.dim = " << problem.heat.dim << "\nheat.sigma = " << d(problem.heat.sigma)
          << "\nheat.amplitude = " << d(problem.heat.amplitude) << "\nheat.horizon = " << d(problem.heat.horizon)
          << "\n";
    } else if (problem.name == "hjm") {
        o << "hjm.r0 = " << d(problem.hjm.r0) << "\nhjm.mu = " << d(problem.hjm.mu)
          << "\nhjm.kappa = " << d(problem.hjm.kappa) << "\nhjm.sigma = " << d(problem.hjm.sigma)
          << "\nhjm.horizon = " << d(problem.hjm.horizon) << "\n";
    } else {
        o << "zakai.dim = " << problem.zakai.dim << "\nzakai.horizon = " << d(problem.zakai.horizon)
          << "\nzakai.particles = " << problem.zakai.particles << "\nzakai.substeps = " << problem.zakai.substeps
          << "\nzakai.bandwidth = " << d(problem.zakai.bandwidth)
          << "\nzakai.se_threshold = " << d(problem.zakai.se_threshold) << "\n";
    }
    o << "I = " << brownian_coordinates() << "\nJ = " << J << "\nK = ";
    for (std::size_t i = 0; i < K.size(); ++i) o << (i ? "," : "") << K[i];
    o << "\nmodel = " << to_string(model.kind) << "\nneurons = " << model.neurons
      << "\nfeature_law = " << to_string(model.law) << "\nbox_radius = " << d(model.box_radius)
      << "\nshared_features = " << (model.shared_features ? "true" : "false") << "\nM1 = " << M1 << "\nM2 = " << M2
      << "\nM3 = " << M3 << "\nmode = " << (mode == TrainingMode::supervised ? "supervised" : "unsupervised")
      << "\nepochs = " << train.epochs << "\nbatch_size = " << train.batch_size
      << "\nlearning_rate = " << d(learning_rate.value_or(problem.name == "heat" ? 2e-3 : 5e-4))
      << "\nridge = " << d(train.ridge) << "\ntest_every = " << train.test_every
      << "\ntrain_fraction = " << d(train_fraction) << "\nC_S = " << d(C_S) << "\nC_FB = " << d(C_FB)
      << "\nsurface_scenarios = " << surface_scenarios << "\nseed = " << root_seed() << "\n";
    return o.str();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(canonical())); }

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    const auto kv = parse_key_values(text);
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const auto u64 = [](const std::string& k, const std::string& v) { return parse_number<std::uint64_t>(k, v); };
    const auto u32 = [](const std::string& k, const std::string& v) { return parse_number<std::uint32_t>(k, v); };
    const auto sz = [](const std::string& k, const std::string& v) { return parse_number<std::size_t>(k, v); };
    const auto dbl = [](const std::string& k, const std::string& v) { return parse_number<double>(k, v); };
    const std::map<std::string, Setter> setters{
        {"problem", [&](auto&, auto& v) { c.problem.name = v; }},
        {"seed", [&](auto& k, auto& v) { c.seed = u64(k, v); }},
        {"I", [&](auto& k, auto& v) { c.I = u32(k, v); }},
        {"J", [&](auto& k, auto& v) { c.J = u32(k, v); }},
        {"K", [&](auto& k, auto& v) { c.K = parse_list(k, v); }},
        {"model", [&](auto&, auto& v) { c.model.kind = parse_net_kind(v); }},
        {"neurons", [&](auto& k, auto& v) { c.model.neurons = static_cast<Eigen::Index>(sz(k, v)); }},
        {"feature_law", [&](auto&, auto& v) { c.model.law = parse_feature_law(v); }},
        {"box_radius", [&](auto& k, auto& v) { c.model.box_radius = dbl(k, v); }},
        {"shared_features", [&](auto& k, auto& v) { c.model.shared_features = parse_bool(k, v); }},
        {"M1", [&](auto& k, auto& v) { c.M1 = sz(k, v); }},
        {"M2", [&](auto& k, auto& v) { c.M2 = sz(k, v); }},
        {"M3", [&](auto& k, auto& v) { c.M3 = sz(k, v); }},
        {"mode",
         [&](auto& k, auto& v) {
             if (v == "supervised")
                 c.mode = TrainingMode::supervised;
             else if (v == "unsupervised")
                 c.mode = TrainingMode::unsupervised;
             else
                 throw ConfigError("bad value '" + v + "' for key '" + k + "'");
         }},
        {"epochs", [&](auto& k, auto& v) { c.train.epochs = sz(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { c.train.batch_size = sz(k, v); }},
        {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = dbl(k, v); }},
        {"ridge", [&](auto& k, auto& v) { c.train.ridge = dbl(k, v); }},
        {"test_every", [&](auto& k, auto& v) { c.train.test_every = sz(k, v); }},
        {"train_fraction", [&](auto& k, auto& v) { c.train_fraction = dbl(k, v); }},
        {"C_S", [&](auto& k, auto& v) { c.C_S = dbl(k, v); }},
        {"C_FB", [&](auto& k, auto& v) { c.C_FB = dbl(k, v); }},
        {"surface_scenarios", [&](auto& k, auto& v) { c.surface_scenarios = sz(k, v); }},
        {"heat.dim", [&](auto& k, auto& v) { c.problem.heat.dim = static_cast<Eigen::Index>(sz(k, v)); }},
        {"heat.sigma", [&](auto& k, auto& v) { c.problem.heat.sigma = dbl(k, v); }},
        {"heat.amplitude", [&](auto& k, auto& v) { c.problem.heat.amplitude = dbl(k, v); }},
        {"heat.horizon", [&](auto& k, auto& v) { c.problem.heat.horizon = dbl(k, v); }},
        {"hjm.r0", [&](auto& k, auto& v) { c.problem.hjm.r0 = dbl(k, v); }},
        {"hjm.mu", [&](auto& k, auto& v) { c.problem.hjm.mu = dbl(k, v); }},
        {"hjm.kappa", [&](auto& k, auto& v) { c.problem.hjm.kappa = dbl(k, v); }},
        {"hjm.sigma", [&](auto& k, auto& v) { c.problem.hjm.sigma = dbl(k, v); }},
        {"hjm.horizon", [&](auto& k, auto& v) { c.problem.hjm.horizon = dbl(k, v); }},
        {"zakai.dim", [&](auto& k, auto& v) { c.problem.zakai.dim = static_cast<Eigen::Index>(sz(k, v)); }},
        {"zakai.horizon", [&](auto& k, auto& v) { c.problem.zakai.horizon = dbl(k, v); }},
        {"zakai.particles", [&](auto& k, auto& v) { c.problem.zakai.particles = sz(k, v); }},
        {"zakai.substeps", [&](auto& k, auto& v) { c.problem.zakai.substeps = sz(k, v); }},
        {"zakai.bandwidth", [&](auto& k, auto& v) { c.problem.zakai.bandwidth = dbl(k, v); }},
        {"zakai.se_threshold", [&](auto& k, auto& v) { c.problem.zakai.se_threshold = dbl(k, v); }},
    };
    for (const auto& [key, value] : kv) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(key, value);
    }
    if (c.problem.name != "heat" && c.problem.name != "hjm" && c.problem.name != "zakai")
        throw ConfigError("unknown problem '" + c.problem.name + "'");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    ExperimentConfig c = parse_config(read_text_file(path));
    if (seed_override) c.seed = seed_override;
    c.finalize();
    return c;
}

// ----------------------------------------------------------------- dataset

Dataset build_dataset(const ExperimentConfig& config) {
    Dataset data{config, make_problem(config.problem), {GaussianPanel(1, 1, 1, 0), TimeBasis(1.0, 1), {}, {}, {}, {}, {}}, std::nullopt};
    const std::uint64_t root = config.root_seed();
    GaussianPanel panel(config.brownian_coordinates(), config.J, config.M1, derive_seed(root, "panel"));
    data.grid = make_training_grid(*data.problem, std::move(panel), config.M2, config.M3, derive_seed(root, "space"),
                                   config.train_fraction);
    if (config.mode == TrainingMode::supervised) data.targets = make_supervised_targets(*data.problem, data.grid);
    return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& out) {
    const std::string hash = data.config.hash();
    write_text_file(out / "config.txt", data.config.canonical());
    save_panel(out / "panel.txt", data.grid.panel);
    save_grid(out / "grid.json", data.grid);
    if (data.targets) save_targets(out / "targets", *data.targets, hash);
}

Dataset read_dataset(const ExperimentConfig& config, const std::filesystem::path& out) {
    if (!std::filesystem::exists(out / "panel.txt"))
        throw ConfigError("no dataset in " + out.string() + " (run 'generate' first)");
    const std::string stored = read_text_file(out / "config.txt");
    if (stored != config.canonical()) throw ConfigError("dataset in " + out.string() + " was generated from another config");
    Dataset data{config, make_problem(config.problem), {GaussianPanel(1, 1, 1, 0), TimeBasis(1.0, 1), {}, {}, {}, {}, {}}, std::nullopt};
    data.grid = load_grid(out / "grid.json", load_panel(out / "panel.txt"), data.problem->horizon());
    if (config.mode == TrainingMode::supervised) data.targets = load_targets(out / "targets");
    return data;
}

// ---------------------------------------------------------------- training

ChaosModel make_model(const ExperimentConfig& config, const SpdeProblem& problem, std::uint32_t K) {
    const std::uint32_t I = config.brownian_coordinates();
    return ChaosModel(IndexSet(I, config.J, K), TimeBasis(problem.horizon(), config.J), problem.padded_eigenvalues(I),
                      problem.space_dim(), 1, config.model);
}

TrainResult train_model(ChaosModel& model, const Dataset& data) {
    if (data.config.mode == TrainingMode::supervised) {
        if (!data.targets) throw ConfigError("supervised training needs targets");
        return train_supervised(model, data.grid, data.targets->values, data.config.train);
    }
    return train_unsupervised(model, data.grid, *data.problem, data.config.train);
}

double predict(const ChaosModel& model, const GaussianPanel& panel, std::size_t m, double t,
               std::span<const double> u, int beta) {
    if (beta == kValue) return chaos_eval(model, panel, m, t, u)(0);
    model.check_panel(panel);
    const JetForm form = JetForm::partial(model.space_dim(), beta);
    double out = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k)
        out += form.apply(model.propagator_jet(k, t, u)) * wick_eval(model.indices()[k], panel, m);
    return out;
}

// -------------------------------------------------------------- evaluation

Metrics evaluate_model(const Dataset& data, const ChaosModel& model, std::uint32_t K,
                       std::vector<SurfaceRow>* surface) {
    const TrainingGrid& grid = data.grid;
    const SpdeProblem& problem = *data.problem;
    Metrics metrics;
    metrics.K = K;
    const FunctionSurrogate zero = zero_surrogate(model.indices(), model.space_dim());
    auto relative_loss = [&](std::span<const std::size_t> scenarios) {
        if (scenarios.empty()) return kNaN;
        double num, den;
        if (data.config.mode == TrainingMode::supervised) {
            num = supervised_loss(model, grid, data.targets->values, scenarios);
            den = supervised_loss(zero, grid, data.targets->values, scenarios);
        } else {
            num = unsupervised_loss(model, grid, problem, scenarios);
            den = unsupervised_loss(zero, grid, problem, scenarios);
        }
        return den > 0.0 ? num / den : num;
    };
    metrics.train_error = relative_loss(grid.train);
    metrics.oos_error = relative_loss(grid.test);

    const std::vector<std::size_t>& scenarios = grid.test.empty() ? grid.train : grid.test;
    metrics.reference_error = kNaN;
    metrics.anchor_error = kNaN;
    metrics.within_band = kNaN;
    if (problem.reference_kind() != ReferenceKind::none) {
        const double T = problem.horizon();
        const std::vector<double> final_time{T};
        double num = 0.0, den = 0.0;
        std::size_t within = 0;
        const bool mc = problem.reference_kind() == ReferenceKind::monte_carlo;
        const double threshold = data.config.problem.zakai.se_threshold;
        for (const auto& [beta, weights] : grid.components) {
            const auto refs = problem.reference(grid.panel, grid.basis, scenarios, final_time, grid.points, beta);
            for (std::size_t j = 0; j < scenarios.size(); ++j)
                for (std::size_t p = 0; p < grid.points.size(); ++p) {
                    const double w = weights(static_cast<Eigen::Index>(p));
                    const double ref = refs[j].values(0, static_cast<Eigen::Index>(p));
                    const double se = refs[j].standard_errors(0, static_cast<Eigen::Index>(p));
                    const double x = predict(model, grid.panel, scenarios[j], T, grid.points[p], beta);
                    num += w * w * (x - ref) * (x - ref);
                    den += w * w * ref * ref;
                    if (mc && w > 0.0) {
                        ++metrics.evaluation_points;
                        if (std::abs(x - ref) <= 3.0 * se) ++within;
                        if (se > threshold * std::abs(ref)) ++metrics.flagged_points;
                    }
                }
        }
        metrics.reference_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
        if (mc && metrics.evaluation_points > 0)
            metrics.within_band = static_cast<double>(within) / static_cast<double>(metrics.evaluation_points);
    }

    if (const auto* hjm = dynamic_cast<const HjmProblem*>(&problem)) {
        double sum = 0.0;
        std::size_t count = 0;
        const std::vector<double> origin{0.0};
        for (std::size_t m : scenarios)
            for (double t : grid.times) {
                const double r = vasicek_short_rate(hjm->params(), grid.panel, grid.basis, m, t);
                sum += std::abs(predict(model, grid.panel, m, t, origin) - r) / std::abs(r);
                ++count;
            }
        metrics.anchor_error = sum / static_cast<double>(count);
    }

    if (surface) {
        const std::size_t n = std::min(data.config.surface_scenarios, scenarios.size());
        const std::vector<std::size_t> chosen(scenarios.begin(), scenarios.begin() + static_cast<std::ptrdiff_t>(n));
        std::vector<ReferenceGrid> refs;
        if (problem.reference_kind() != ReferenceKind::none)
            refs = problem.reference(grid.panel, grid.basis, chosen, grid.times, grid.points, kValue);
        for (std::size_t j = 0; j < chosen.size(); ++j)
            for (std::size_t k = 0; k < grid.times.size(); ++k)
                for (std::size_t p = 0; p < grid.points.size(); ++p) {
                    SurfaceRow row{chosen[j], grid.times[k], grid.points[p],
                                   predict(model, grid.panel, chosen[j], grid.times[k], grid.points[p]), kNaN, kNaN};
                    if (!refs.empty()) {
                        row.reference = refs[j].values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
                        row.reference_se =
                            refs[j].standard_errors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
                    }
                    surface->push_back(std::move(row));
                }
    }
    return metrics;
}

// ---------------------------------------------------------------- commands

void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out) {
    write_dataset(build_dataset(config), out);
}

void cmd_train(const ExperimentConfig& config, const std::filesystem::path& out) {
    const Dataset data = read_dataset(config, out);
    const std::string hash = config.hash();
    CsvTable summary({"K", "indices", "train_loss", "test_error", "condition_estimate", "ill_conditioned",
                      "wall_time_ms"},
                     hash);
    for (std::uint32_t K : config.K) {
        ChaosModel model = make_model(config, *data.problem, K);
        const TrainResult result = train_model(model, data);
        save_model(model_path(out, K), model);
        CsvTable trace({"epoch", "train_loss", "test_error", "wall_time_ms"}, hash);
        for (const TraceRow& row : result.trace)
            trace.add_row({std::to_string(row.epoch), fmt(row.train_loss), fmt(row.test_error), fmt(row.wall_time_ms)});
        trace.save(out / ("trace_K" + std::to_string(K) + ".csv"));
        const TraceRow& last = result.trace.back();
        summary.add_row({std::to_string(K), std::to_string(model.size()), fmt(last.train_loss), fmt(last.test_error),
                         model.kind() == NetKind::random_feature ? fmt(result.condition_estimate) : std::string(),
                         result.ill_conditioned ? "true" : "false", fmt(last.wall_time_ms)});
    }
    summary.save(out / "train_summary.csv");
}

void cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& out) {
    const Dataset data = read_dataset(config, out);
    const std::string hash = config.hash();
    CsvTable metrics({"problem", "mode", "model", "I", "J", "K", "neurons", "M1", "M2", "M3", "train_error",
                      "oos_error", "reference_kind", "reference_error", "anchor_error", "within_3se_fraction",
                      "flagged_reference_points", "evaluation_points"},
                     hash);
    CsvTable timing({"K", "evaluate_wall_time_ms"}, hash);
    for (std::uint32_t K : config.K) {
        const auto start = Clock::now();
        const ChaosModel model = load_model(model_path(out, K));
        const std::uint32_t I = config.brownian_coordinates();
        if (model.indices().I() != I || model.indices().J() != config.J || model.indices().K() != K)
            throw ConfigError("model file truncation differs from the config");
        std::vector<SurfaceRow> surface;
        const Metrics m = evaluate_model(data, model, K, &surface);
        const bool mc = data.problem->reference_kind() == ReferenceKind::monte_carlo;
        metrics.add_row({config.problem.name, config.mode == TrainingMode::supervised ? "supervised" : "unsupervised",
                         to_string(config.model.kind), std::to_string(I), std::to_string(config.J), std::to_string(K),
                         std::to_string(config.model.neurons), std::to_string(config.M1), std::to_string(config.M2),
                         std::to_string(config.M3), fmt(m.train_error), fmt(m.oos_error),
                         to_string(data.problem->reference_kind()), fmt(m.reference_error), fmt(m.anchor_error),
                         fmt(m.within_band), mc ? std::to_string(m.flagged_points) : std::string(),
                         mc ? std::to_string(m.evaluation_points) : std::string()});
        std::vector<std::string> header{"scenario", "t"};
        for (Eigen::Index l = 0; l < data.problem->space_dim(); ++l) header.push_back("u" + std::to_string(l + 1));
        header.insert(header.end(), {"surrogate", "reference", "reference_se"});
        CsvTable surf(header, hash);
        for (const SurfaceRow& row : surface) {
            std::vector<std::string> cells{std::to_string(row.scenario), fmt(row.t)};
            for (double v : row.u) cells.push_back(fmt(v));
            cells.insert(cells.end(), {fmt(row.surrogate), fmt(row.reference), fmt(row.reference_se)});
            surf.add_row(std::move(cells));
        }
        surf.save(out / ("surface_K" + std::to_string(K) + ".csv"));
        timing.add_row({std::to_string(K), fmt(elapsed_ms(start))});
    }
    metrics.save(out / "metrics.csv");
    timing.save(out / "timing.csv");
}

void cmd_rates(const ExperimentConfig& config, const std::filesystem::path& out) {
    const auto problem = make_problem(config.problem);
    CsvTable table({"I", "J", "K", "tail_I", "tail_J_partial", "tail_J_bound", "tail_J_within_bound",
                    "tail_J_sup_partial", "k_term", "cardinality", "C_S", "C_FB"},
                   config.hash());
    for (std::uint32_t K : config.K) {
        const RateReport r = rate_report(*problem, config.brownian_coordinates(), config.J, K, config.C_S, config.C_FB);
        table.add_row({std::to_string(r.I), std::to_string(r.J), std::to_string(r.K), fmt(r.tail_I),
                       fmt(r.tail_J.partial_sum), fmt(r.tail_J.analytic_bound), r.tail_J.within_bound ? "true" : "false",
                       fmt(r.tail_J.sup_partial_sum), fmt(r.k_term), std::to_string(r.cardinality), fmt(r.C_S),
                       fmt(r.C_FB)});
    }
    table.save(out / "rates.csv");
}

void cmd_all(const ExperimentConfig& config, const std::filesystem::path& out) {
    cmd_generate(config, out);
    cmd_train(config, out);
    cmd_evaluate(config, out);
    cmd_rates(config, out);
}

}  // namespace chaos_spde
