// Experiment driver: synth-gen -> rollout -> build -> train -> tune -> eval,
// plus offline replay. One JSON config file, overridable with --set key=value.
// Exit codes: 0 ok, 2 config error, 3 pipeline/IO error, 4 numeric failure.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stoprag/experiment.hpp"
#include "stoprag/trainer.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    long seed = -1;
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
    cmd->add_option("--set", args.overrides, "override config values, key.path=value");
    cmd->add_option("--seed", args.seed, "override the root seed");
    cmd->add_option("--workers", args.workers, "worker threads for rollout");
}

stoprag::ExperimentConfig make_config(const CommonArgs& args) {
    auto overrides = args.overrides;
    if (args.seed >= 0) overrides.push_back("seed=" + std::to_string(args.seed));
    return stoprag::load_config(args.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Value-based adaptive stopping for iterative retrieval pipelines"};
    app.require_subcommand(1);

    CommonArgs args;
    struct Verb {
        const char* name;
        const char* help;
    };
    const std::vector<Verb> verbs{
        {"synth-gen", "generate synthetic question corpora"},
        {"rollout", "roll out full-horizon trajectories"},
        {"build", "decompose trajectories into filtered datapoints"},
        {"train", "train the two-head Q-network"},
        {"tune", "pick the margin threshold on the validation split"},
        {"eval", "run the stopping policy through the live pipeline"},
        {"replay", "replay the policy over stored trajectories"},
    };
    for (const auto& v : verbs) add_common(app.add_subcommand(v.name, v.help), args);

    CLI11_PARSE(app, argc, argv);
    const std::string verb = app.get_subcommands().front()->get_name();

    try {
        stoprag::ExperimentConfig cfg = make_config(args);
        if (verb == "synth-gen") stoprag::cmd_synth_gen(cfg);
        else if (verb == "rollout") stoprag::cmd_rollout(cfg, args.workers);
        else if (verb == "build") stoprag::cmd_build(cfg);
        else if (verb == "train") stoprag::cmd_train(cfg);
        else if (verb == "tune") stoprag::cmd_tune(cfg);
        else if (verb == "eval") stoprag::cmd_eval(cfg);
        else if (verb == "replay") stoprag::cmd_replay(cfg);
    } catch (const stoprag::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stoprag::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
