#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"deterministic federated-learning simulator"};
    app.footer("The FEDSIM_SEED environment variable overrides the seed of any parsed config.");
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string checkpoint_path;
    std::string out_csv;
    std::string pattern;
    std::vector<std::string> manifests;

    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "run every config matching a glob pattern");
    sweep->add_option("pattern", pattern, "config file glob pattern (quote it)")->required();
    sweep->add_option("--out", out_dir, "parent output directory")->required();

    auto* compare =
        app.add_subcommand("compare", "tabulate final and best metrics across finished runs");
    compare->add_option("manifests", manifests, "manifest.json paths (two or more)")
        ->expected(-2)
        ->required();

    auto* surface =
        app.add_subcommand("surface", "evaluate the loss surface around a checkpointed model");
    surface->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
    surface->add_option("config", config_path, "experiment config file")->required();
    surface->add_option("--out", out_csv, "output CSV path")->required();

    auto* pdump = app.add_subcommand("partition-dump", "write the client partition as CSV");
    pdump->add_option("config", config_path, "experiment config file")->required();
    pdump->add_option("--out", out_csv, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) return fedsim::cmd_run(config_path, out_dir, std::cout);
        if (app.got_subcommand(sweep)) return fedsim::cmd_sweep(pattern, out_dir, std::cout);
        if (app.got_subcommand(compare)) return fedsim::cmd_compare(manifests, std::cout);
        if (app.got_subcommand(surface)) {
            return fedsim::cmd_surface(checkpoint_path, config_path, out_csv, std::cout);
        }
        if (app.got_subcommand(pdump)) {
            return fedsim::cmd_partition_dump(config_path, out_csv, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fedsim::kExitUsage;
    }
    return fedsim::kExitUsage;
}
