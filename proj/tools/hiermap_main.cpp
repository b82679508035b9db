#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "hiermap/config.hpp"
#include "hiermap/errors.hpp"
#include "hiermap/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::string scenario_names() {
    std::string out;
    for (const auto s : hiermap::all_scenarios()) {
        if (!out.empty()) out += ", ";
        out += hiermap::to_string(s);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperparameter estimation experiments for hierarchical linear inverse problems"};
    app.set_version_flag("--version", std::string(hiermap::kVersion));
    app.require_subcommand(1);

    std::string scenario_name;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> replicates;
    std::optional<std::string> profile;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    std::optional<std::size_t> max_evals;
    std::optional<unsigned> threads;

    auto* run = app.add_subcommand("run", "Run a scenario and write CSV, SVG and manifest files");
    run->add_option("scenario", scenario_name, "One of: " + scenario_names())->required();
    run->add_option("--config", config_path, "Run configuration file (keys override the built-in defaults)");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--out", out_dir, "Output directory (default out/<scenario>)");
    run->add_option("--replicates", replicates, "Replicate count")->check(CLI::PositiveNumber);
    run->add_option("--profile", profile, "ci (100 replicates) or full (1000)")
        ->check(CLI::IsMember({"ci", "full"}));
    run->add_option("--grid", grid, "Optimizer grid points per dimension (landscape: grid size)");
    run->add_option("--tol", tol, "Optimizer tolerance on theta");
    run->add_option("--max-evals", max_evals, "Optimizer evaluation budget");
    run->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

    std::string defaults_name;
    auto* defaults = app.add_subcommand("defaults", "Print the built-in configuration of a scenario");
    defaults->add_option("scenario", defaults_name, "One of: " + scenario_names())->required();

    app.add_subcommand("list", "List scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto s : hiermap::all_scenarios()) std::cout << hiermap::to_string(s) << '\n';
            return 0;
        }
        if (app.got_subcommand("defaults")) {
            std::cout << hiermap::default_config_text(hiermap::scenario_from_string(defaults_name));
            return 0;
        }
        const hiermap::Scenario scenario = hiermap::scenario_from_string(scenario_name);
        const hiermap::ConfigDocument user =
            config_path.empty() ? hiermap::ConfigDocument{} : hiermap::ConfigDocument::load(config_path);
        hiermap::RunOverrides ov;
        ov.seed = seed;
        ov.replicates = replicates;
        if (profile) ov.profile = hiermap::profile_from_string(*profile);
        if (out_dir) ov.output_dir = *out_dir;
        ov.grid = grid;
        ov.tol = tol;
        ov.max_evals = max_evals;
        ov.threads = threads;
        const hiermap::RunConfig rc = hiermap::make_run_config(scenario, user, ov);
        const hiermap::RunSummary summary = hiermap::run_scenario(rc);
        for (const auto& d : summary.diagnostics) std::cerr << "warning: " << d << '\n';
        std::cout << "wrote " << summary.files.size() + 1 << " files to " << rc.output_dir.string();
        if (summary.failed_replicates > 0) std::cout << " (" << summary.failed_replicates << " failed replicates)";
        std::cout << '\n';
        return 0;
    } catch (const hiermap::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const hiermap::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const hiermap::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
