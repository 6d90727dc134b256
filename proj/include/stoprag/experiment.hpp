#pragma once

#include <string>
#include <vector>

#include "stoprag/mdp.hpp"

namespace stoprag {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Validated experiment configuration. `raw` holds the fully merged JSON
// (defaults filled in, overrides applied, unknown keys rejected).
struct ExperimentConfig {
    json raw;

    std::uint64_t seed() const;
    std::string data_dir() const;
    bool has_remote() const;
    std::string remote_base_url() const;  // env STOPRAG_PIPELINE_URL wins
    std::vector<std::string> splits() const { return {"train", "val", "test"}; }

    std::string questions_path(const std::string& split) const;
    std::string trajectories_path(const std::string& split) const;
    std::string datapoints_path(const std::string& split) const;
    std::string checkpoint_path(const std::string& id) const;
    std::string report_csv_path() const;
    std::string report_json_path() const;
    std::string threshold_path() const;
    std::string episodes_path(const std::string& split) const;
    std::string eval_summary_path(const std::string& split) const;
    std::string replay_summary_path(const std::string& split) const;
};

// Parses and validates; `overrides` are --set key=value pairs with dot paths
// (values parsed as JSON when possible, else taken as strings).
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
ExperimentConfig config_from_json(json user, const std::vector<std::string>& overrides = {});

// Writes `<artifact>.manifest.json` with the config hash, seed, and digests
// of the input files the artifact was derived from.
void write_manifest(const ExperimentConfig& cfg, const std::string& artifact,
                    const std::string& command, const std::vector<std::string>& inputs);

std::string file_digest(const std::string& path);

// Command bodies shared by the CLI binary and the tests. Exceptions map to
// exit codes in the CLI: ConfigError 2, IO/pipeline 3, NumericError 4.
void cmd_synth_gen(const ExperimentConfig& cfg);
void cmd_rollout(const ExperimentConfig& cfg, int workers = 0);
void cmd_build(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_tune(const ExperimentConfig& cfg);
void cmd_eval(const ExperimentConfig& cfg);
void cmd_replay(const ExperimentConfig& cfg);

}  // namespace stoprag
