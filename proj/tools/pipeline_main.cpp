#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fgd/errors.hpp"
#include "fgd/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fraudster-group detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::int64_t seed_override = -1;
    bool feature_blind = false;
    bool no_pruning = false;

    const char* stages[] = {"synth",      "build-groups", "train-encoder", "train-hinrnn",
                            "infer",      "classify",     "evaluate",      "report"};
    for (const char* stage : stages) {
        CLI::App* sub = app.add_subcommand(stage);
        sub->add_option("--config", config_path, "path to a key=value config file")->required();
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_flag("--feature-blind", feature_blind,
                      "zero reviewer vectors at the graph-model input");
        sub->add_flag("--no-pruning", no_pruning, "skip deviant-reviewer removal");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        fgd::pipeline::Config cfg = fgd::pipeline::Config::load(config_path);
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (feature_blind) cfg.feature_blind = true;
        if (no_pruning) cfg.no_pruning = true;
        fgd::pipeline::run_stage(app.get_subcommands().front()->get_name(), cfg);
    } catch (const fgd::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fgd::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
