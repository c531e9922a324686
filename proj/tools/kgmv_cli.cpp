// Command-line front end: kgmv_cli <command> [--config file] [--output dir] [--seed n]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kgmv/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Charged vortex solver for the axisymmetric Klein-Gordon-Maxwell system"};
    std::string command, config_path, output_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "solve | continuation | trial-scan | gradcheck | diagnose | nonexist-demo | export")
        ->required();
    app.add_option("--config", config_path, "sectioned key = value configuration file");
    app.add_option("--output", output_dir, "directory for the report, CSVs and checkpoints");
    app.add_option("--seed", seed, "seed for randomized checks");
    CLI11_PARSE(app, argc, argv);

    try {
        kgmv::RunConfig cfg = config_path.empty() ? kgmv::RunConfig{} : kgmv::load_config(config_path);
        cfg.command = command;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (seed) cfg.seed = *seed;
        cfg.validate();
        return kgmv::run(cfg, std::cout);
    } catch (const kgmv::ConfigError& e) {
        std::cerr << "ConfigError: " << e.what() << "\n";
    } catch (const kgmv::Error& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
    }
    return kgmv::exit_error;
}
