// Command-line driver: generate, train, evaluate, rates, all.
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chaos_spde/errors.hpp"
#include "chaos_spde/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wiener chaos surrogates for semilinear SPDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;

    for (const char* name : {"generate", "train", "evaluate", "rates", "all"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (key = value)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the root seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const chaos_spde::ExperimentConfig config = chaos_spde::load_config(config_path, seed);
        const std::filesystem::path out(out_dir);
        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "generate")
            chaos_spde::cmd_generate(config, out);
        else if (command == "train")
            chaos_spde::cmd_train(config, out);
        else if (command == "evaluate")
            chaos_spde::cmd_evaluate(config, out);
        else if (command == "rates")
            chaos_spde::cmd_rates(config, out);
        else
            chaos_spde::cmd_all(config, out);
    } catch (const chaos_spde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const chaos_spde::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
