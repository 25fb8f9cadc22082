#include "chaos_spde/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chaos_spde/errors.hpp"

namespace chaos_spde {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

json layer_to_json(const TanhLayer& layer) {
    auto flat = [](const Eigen::MatrixXd& M) {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(M.size()));
        for (Eigen::Index r = 0; r < M.rows(); ++r)
            for (Eigen::Index c = 0; c < M.cols(); ++c) v.push_back(M(r, c));
        return v;
    };
    return json{{"neurons", layer.neurons()},
                {"input_dim", layer.input_dim()},
                {"output_dim", layer.output_dim()},
                {"activation", "tanh"},
                {"time_weights", flat(layer.time_weights)},
                {"space_weights", flat(layer.space_weights)},
                {"biases", flat(layer.biases)},
                {"readouts", flat(layer.readouts)}};
}

TanhLayer layer_from_json(const json& j) {
    if (j.at("activation").get<std::string>() != "tanh") throw ConfigError("unsupported activation");
    const auto N = j.at("neurons").get<Eigen::Index>();
    const auto m = j.at("input_dim").get<Eigen::Index>();
    const auto d = j.at("output_dim").get<Eigen::Index>();
    TanhLayer layer(N, m, d);
    auto fill = [](const json& src, Eigen::Ref<Eigen::MatrixXd> M) {
        const auto v = src.get<std::vector<double>>();
        if (static_cast<Eigen::Index>(v.size()) != M.size()) throw ConfigError("model array has wrong length");
        std::size_t at = 0;
        for (Eigen::Index r = 0; r < M.rows(); ++r)
            for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) = v[at++];
    };
    fill(j.at("time_weights"), layer.time_weights);
    fill(j.at("space_weights"), layer.space_weights);
    fill(j.at("biases"), layer.biases);
    fill(j.at("readouts"), layer.readouts);
    return layer;
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
        if (!out.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    if (!out) throw ConfigError("write failed for " + path.string());
}

// ------------------------------------------------------------------ models

std::string model_to_string(const ChaosModel& model) {
    json j;
    j["format"] = "chaos_spde.model";
    j["version"] = 1;
    j["I"] = model.indices().I();
    j["J"] = model.indices().J();
    j["K"] = model.indices().K();
    j["horizon"] = model.basis().horizon();
    j["eigenvalues"] = model.eigenvalues();
    j["kind"] = to_string(model.kind());
    j["shared_features"] = model.shared_features();
    json nets = json::array();
    for (std::size_t k = 0; k < model.size(); ++k) {
        json net = layer_to_json(model.layer(k));
        net["index"] = model.indices()[k].to_string();
        if (model.kind() == NetKind::random_feature) {
            const auto& rf = model.random_nets()[k];
            net["frozen"] = true;
            net["law"] = to_string(rf.law());
            net["seed"] = rf.seed();
            net["box_radius"] = rf.box_radius();
        } else {
            net["frozen"] = false;
        }
        nets.push_back(std::move(net));
    }
    j["nets"] = std::move(nets);
    return j.dump(1);
}

ChaosModel model_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "chaos_spde.model") throw ConfigError("not a model file");
        IndexSet indices(j.at("I").get<std::uint32_t>(), j.at("J").get<std::uint32_t>(), j.at("K").get<std::uint32_t>());
        TimeBasis basis(j.at("horizon").get<double>(), indices.J());
        auto eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        const NetKind kind = parse_net_kind(j.at("kind").get<std::string>());
        const bool shared = j.at("shared_features").get<bool>();
        const auto& nets = j.at("nets");
        if (nets.size() != indices.size()) throw ConfigError("model file lists the wrong number of nets");
        for (std::size_t k = 0; k < indices.size(); ++k)
            if (nets[k].at("index").get<std::string>() != indices[k].to_string())
                throw ConfigError("model file index order differs from the enumeration");
        if (kind == NetKind::deterministic) {
            std::vector<DeterministicNet> out;
            for (const auto& n : nets) out.emplace_back(layer_from_json(n));
            return ChaosModel(std::move(indices), basis, std::move(eigenvalues), shared, std::move(out));
        }
        std::vector<RandomFeatureNet> out;
        for (const auto& n : nets)
            out.emplace_back(layer_from_json(n), parse_feature_law(n.at("law").get<std::string>()),
                             n.at("seed").get<std::uint64_t>(), n.at("box_radius").get<double>());
        return ChaosModel(std::move(indices), basis, std::move(eigenvalues), shared, std::move(out));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ChaosModel& model) {
    write_text_file(path, model_to_string(model));
}

ChaosModel load_model(const std::filesystem::path& path) { return model_from_string(read_text_file(path)); }

// ------------------------------------------------------------------- panel

void save_panel(const std::filesystem::path& path, const GaussianPanel& panel) {
    std::ostringstream out;
    out << "seed = " << panel.seed() << "\n"
        << "I = " << panel.I() << "\n"
        << "J = " << panel.J() << "\n"
        << "scenarios = " << panel.scenarios() << "\n"
        << "draws_per_scenario = " << panel.I() * panel.J() << "\n";
    write_text_file(path, out.str());
}

GaussianPanel load_panel(const std::filesystem::path& path) {
    const auto kv = parse_key_values(read_text_file(path));
    auto get = [&](const std::string& key) -> std::uint64_t {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("panel descriptor lacks '" + key + "'");
        std::uint64_t v = 0;
        const auto res = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
        if (res.ec != std::errc() || res.ptr != it->second.data() + it->second.size())
            throw ConfigError("panel descriptor: bad value for '" + key + "'");
        return v;
    };
    return GaussianPanel(static_cast<std::uint32_t>(get("I")), static_cast<std::uint32_t>(get("J")),
                         static_cast<std::size_t>(get("scenarios")), get("seed"));
}

// -------------------------------------------------------------------- grid

void save_grid(const std::filesystem::path& path, const TrainingGrid& grid) {
    json j;
    j["times"] = grid.times;
    j["points"] = grid.points;
    json comps = json::array();
    for (const auto& [beta, w] : grid.components)
        comps.push_back(json{{"beta", beta}, {"weights", std::vector<double>(w.data(), w.data() + w.size())}});
    j["components"] = std::move(comps);
    j["train"] = grid.train;
    j["test"] = grid.test;
    write_text_file(path, j.dump(1));
}

TrainingGrid load_grid(const std::filesystem::path& path, GaussianPanel panel, double horizon) {
    const json j = read_json(path);
    try {
        TrainingGrid grid{std::move(panel), TimeBasis(horizon, 1), {}, {}, {}, {}, {}};
        grid.basis = TimeBasis(horizon, grid.panel.J());
        grid.times = j.at("times").get<std::vector<double>>();
        grid.points = j.at("points").get<std::vector<Point>>();
        for (const auto& c : j.at("components")) {
            const auto w = c.at("weights").get<std::vector<double>>();
            grid.components.emplace_back(c.at("beta").get<int>(),
                                         Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
        }
        grid.train = j.at("train").get<std::vector<std::size_t>>();
        grid.test = j.at("test").get<std::vector<std::size_t>>();
        grid.validate();
        return grid;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ----------------------------------------------------------------- targets

void save_targets(const std::filesystem::path& stem, const SupervisedTargets& targets, const std::string& config_hash) {
    static_assert(std::endian::native == std::endian::little, "target files are little-endian");
    const std::filesystem::path bin = stem.string() + ".bin";
    std::string bytes;
    const auto n = static_cast<std::size_t>(targets.values.size());
    bytes.resize(2 * n * sizeof(double));
    std::memcpy(bytes.data(), targets.values.data(), n * sizeof(double));
    std::memcpy(bytes.data() + n * sizeof(double), targets.standard_errors.data(), n * sizeof(double));
    write_text_file(bin, bytes);
    json j{{"format", "chaos_spde.targets"},
           {"rows", targets.values.rows()},
           {"scenarios", targets.values.cols()},
           {"layout", "float64 little-endian, column-major, values then standard errors"},
           {"data", bin.filename().string()},
           {"config_hash", config_hash}};
    write_text_file(stem.string() + ".json", j.dump(1) + "\n");
}

SupervisedTargets load_targets(const std::filesystem::path& stem) {
    const json j = read_json(stem.string() + ".json");
    Eigen::Index rows = 0, cols = 0;
    try {
        rows = j.at("rows").get<Eigen::Index>();
        cols = j.at("scenarios").get<Eigen::Index>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("targets descriptor: ") + e.what());
    }
    const std::string bytes = read_text_file(stem.string() + ".bin");
    const auto n = static_cast<std::size_t>(rows * cols);
    if (bytes.size() != 2 * n * sizeof(double)) throw ConfigError("targets file has the wrong size");
    SupervisedTargets t{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
    std::memcpy(t.values.data(), bytes.data(), n * sizeof(double));
    std::memcpy(t.standard_errors.data(), bytes.data() + n * sizeof(double), n * sizeof(double));
    return t;
}

// --------------------------------------------------------------------- CSV

CsvTable::CsvTable(std::vector<std::string> header, std::string config_hash)
    : header_(std::move(header)), hash_(std::move(config_hash)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::invalid_argument("CSV row width differs from the header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::ostringstream out;
    out << "config_hash";
    for (const auto& h : header_) out << ',' << h;
    out << '\n';
    for (const auto& row : rows_) {
        out << hash_;
        for (const auto& c : row) out << ',' << c;
        out << '\n';
    }
    return out.str();
}

void CsvTable::save(const std::filesystem::path& path) const { write_text_file(path, str()); }

}  // namespace chaos_spde
