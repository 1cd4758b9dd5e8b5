// Command-line front end: run / tune / scaling / lemmas over the mucb library.
// Exit codes: 0 success, 1 bad config or arguments, 2 runtime failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <mucb/commands.hpp>

namespace {

void add_shared_flags(CLI::App* cmd, mucb::CliOverrides& o, std::optional<std::uint64_t>& seed,
                      std::optional<std::int64_t>& reps, std::optional<std::string>& out_dir) {
    cmd->add_option("--seed", seed, "Master seed for replication streams");
    cmd->add_option("--reps", reps, "Replications (runs per instance for scaling)");
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_flag("--paper-scale", o.paper_scale,
                  "Full-size experiment preset instead of the desk-scale default");
    cmd->add_option("--parallelism", o.parallelism,
                    "Worker threads (0 = hardware concurrency)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piecewise-stationary bandit simulator"};
    app.require_subcommand(1);

    mucb::CliOverrides overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> reps;
    std::optional<std::string> out_dir;

    std::string config_path;
    auto* run = app.add_subcommand("run", "Simulate the policies described by a config file");
    run->add_option("config", config_path, "JSON config file")->required();
    add_shared_flags(run, overrides, seed, reps, out_dir);

    double delta = 0.0;
    int segments = 1;
    int arms = 2;
    std::int64_t horizon = 0;
    bool json_only = false;
    auto* tune = app.add_subcommand("tune", "Report detector/schedule parameters for a target "
                                            "change amplitude");
    tune->add_option("--delta", delta, "Smallest change amplitude to detect, in (0, 1]")
        ->required();
    tune->add_option("--segments,-M", segments, "Number of stationary segments")->required();
    tune->add_option("--arms,-K", arms, "Number of arms")->required();
    tune->add_option("--horizon,-T", horizon, "Total number of steps")->required();
    tune->add_flag("--json", json_only, "Print only the JSON report");

    std::string axis;
    std::vector<int> grid;
    auto* scaling = app.add_subcommand("scaling", "Regret growth against segment count (M) or "
                                                  "arm count (K)");
    scaling->add_option("axis", axis, "M (segments) or K (arms)")->required();
    scaling->add_option("--grid", grid, "Grid values for the chosen axis")->delimiter(',');
    add_shared_flags(scaling, overrides, seed, reps, out_dir);

    std::string preset = "all";
    auto* lemmas = app.add_subcommand("lemmas", "Detector validation: false-alarm and "
                                                "detection-delay experiments vs. their bounds");
    lemmas->add_option("preset", preset,
                       "stationary | large-change | near-threshold | all (default)");
    add_shared_flags(lemmas, overrides, seed, reps, out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    overrides.seed = seed;
    overrides.reps = reps;
    overrides.out_dir = out_dir;

    try {
        if (run->parsed()) return mucb::cmd_run(config_path, overrides, std::cout);
        if (tune->parsed())
            return mucb::cmd_tune(delta, segments, arms, horizon, json_only, std::cout);
        if (scaling->parsed()) return mucb::cmd_scaling(axis, grid, overrides, std::cout);
        if (lemmas->parsed()) return mucb::cmd_lemmas(preset, overrides, std::cout);
    } catch (const mucb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
