#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using rbridge::cli::Options;

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config_path, "Key-value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "Override one configuration key (KEY=VALUE); repeatable");
    sub->add_option("--seed", o.seed, "Root seed (overrides the config's seed)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-bridge generative modelling: train, simulate, filter and evaluate"};
    app.set_version_flag("--version", std::string(RBRIDGE_VERSION));
    app.require_subcommand(1);
    Options o;

    auto* train = app.add_subcommand("train", "Fit the drift network; writes model.rbrg and loss.csv");
    add_common(train, o);
    train->add_option("--steps", o.steps, "Optimizer steps (overrides train.steps)");

    auto* generate = app.add_subcommand("generate", "Sample with a trained checkpoint; writes samples.csv");
    add_common(generate, o);
    generate->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    generate->add_option("--steps", o.steps, "Grid steps m");
    generate->add_option("--paths", o.paths, "Number of samples n");
    generate->add_option("--mode", o.mode, "learned (default) or deterministic");
    generate->add_option("--against", o.against, "Reference samples CSV; writes metrics.json")
        ->check(CLI::ExistingFile);

    auto* bridge = app.add_subcommand("bridge-sim", "Simulate bridges with an exact drift; writes terminal.csv and "
                                                    "trajectories.ndjson");
    add_common(bridge, o);
    bridge->add_option("--mode", o.mode, "exact-filter, levy-exact, deterministic or anticipative");
    bridge->add_option("--steps", o.steps, "Grid steps m");
    bridge->add_option("--paths", o.paths, "Number of paths");

    auto* evaluate = app.add_subcommand("evaluate", "Two-sample metrics between CSV sample sets; writes report.json");
    add_common(evaluate, o);
    evaluate->add_option("--a", o.a, "First samples CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--b", o.b, "Second samples CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--metric", o.metrics, "energy, mmd or ks; repeatable");
    evaluate->add_option("--permutations", o.permutations, "Permutations for p-values (0 = none)");
    evaluate->add_flag("--split-b", o.split_b, "Also report the metric between the two halves of B");

    auto* diagnose = app.add_subcommand("diagnose", "Posterior entropy and variance along exact-filter paths");
    add_common(diagnose, o);
    diagnose->add_option("--steps", o.steps, "Grid steps m");
    diagnose->add_option("--paths", o.paths, "Number of paths");

    auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
    replay->add_option("--manifest", o.manifest, "manifest.json of the run")->required()->check(CLI::ExistingFile);
    replay->add_option("--out", o.out, "Output directory (default: replay/ next to the manifest)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (replay->parsed()) {
            return rbridge::cli::replay(o);
        }
        o.command = app.get_subcommands().front()->get_name();
        rbridge::cli::run_with_manifest(o);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "rbridge: " << e.what() << "\n";
        return rbridge::cli::exit_code_for(e);
    }
}
