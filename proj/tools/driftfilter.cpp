#include "driftfilter/asymptotics.hpp"
#include "driftfilter/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace driftfilter;

int main(int argc, char** argv) {
    CLI::App app{"Drift filtering with expert opinions: covariance analysis and log-utility portfolios"};
    std::string experiment;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> step;
    std::optional<std::string> out_dir;
    bool check = false;

    app.add_option("experiment", experiment, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    app.add_option("-c,--config", config_path, "JSON configuration file")->required();
    app.add_option("--seed", seed, "Override the master RNG seed");
    app.add_option("--step", step, "Override the maximal grid step");
    app.add_option("--out", out_dir, "Output directory");
    app.add_flag("--check", check, "Compare results against the config's expected block");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::BadConfig);
    }

    try {
        const ExperimentConfig cfg = load_config(config_path);
        const RunResult result = run(experiment, cfg, RunOptions{seed, step, out_dir, check}, std::cout);
        for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
        return static_cast<int>(result.code);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::BadConfig);
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::IoFailure);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::NumericFailure);
    } catch (const PreconditionError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::NumericFailure);
    }
}
