#include "stoprag/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stoprag/batch_kernels.hpp"
#include "stoprag/pipeline_http.hpp"
#include "stoprag/policy.hpp"
#include "stoprag/rng.hpp"
#include "stoprag/synth.hpp"
#include "stoprag/trainer.hpp"

namespace stoprag {

namespace fs = std::filesystem;

namespace {

json default_config() {
    return json{
        {"seed", 0},
        {"data_dir", "out"},
        {"env",
         {{"horizon", 5},
          {"hop_weights", json::array({1.0, 1.0, 1.0, 1.0})},
          {"beta", 0.0},
          {"rho", 0.25},
          {"sigma", 0.0},
          {"distractors_per_step", 1},
          {"questions", {{"train", 200}, {"val", 100}, {"test", 100}}}}},
        {"pipeline_remote", {{"base_url", ""}, {"retries", 2}}},
        {"rollout", {{"trials", 8}, {"score", "F1"}, {"retrieve_k", 2}, {"workers", 0}}},
        {"train",
         {{"objective", "QLAMBDA"},
          {"epochs", 3},
          {"batch_size", 128},
          {"hidden", 256},
          {"peak_lr", 1e-3},
          {"warmup_ratio", 0.1},
          {"weight_decay", 0.01},
          {"lambda_start", 1.0},
          {"lambda_end", 0.1},
          {"encoder", {{"type", "hashed_token"}, {"dim", 256}}}}},
        {"policy", {{"grid_min", -1.0}, {"grid_max", 1.0}, {"grid_points", 41}}},
        {"eval", {{"split", "test"}}}};
}

// Recursively overlays user values on the defaults; a key absent from the
// defaults at any level is a config error.
void merge_checked(json& base, const json& user, const std::string& prefix) {
    if (!user.is_object()) throw ConfigError("config section must be an object: " + prefix);
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config key: " + path);
        if (base[it.key()].is_object() && it.key() != "questions") {
            merge_checked(base[it.key()], it.value(), path);
        } else {
            base[it.key()] = it.value();
        }
    }
}

void apply_override(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
    std::string path = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);

    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings allowed
    }

    json* node = &cfg;
    std::istringstream in(path);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(in, key, '.')) keys.push_back(key);
    if (keys.empty()) throw ConfigError("--set has empty key: " + kv);
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        if (!node->contains(keys[i])) throw ConfigError("unknown config key in --set: " + path);
        node = &(*node)[keys[i]];
    }
    if (!node->contains(keys.back())) throw ConfigError("unknown config key in --set: " + path);
    (*node)[keys.back()] = parsed;
}

void validate(const json& cfg) {
    auto require_positive = [](const json& v, const std::string& name) {
        if (!v.is_number() || v.get<double>() <= 0) throw ConfigError(name + " must be positive");
    };
    require_positive(cfg["env"]["horizon"], "env.horizon");
    require_positive(cfg["rollout"]["trials"], "rollout.trials");
    require_positive(cfg["train"]["epochs"], "train.epochs");
    require_positive(cfg["train"]["batch_size"], "train.batch_size");
    require_positive(cfg["train"]["hidden"], "train.hidden");
    if (cfg["policy"]["grid_points"].get<int>() < 2) throw ConfigError("policy.grid_points must be >= 2");
    score_id_from_string(cfg["rollout"]["score"].get<std::string>());
    objective_from_string(cfg["train"]["objective"].get<std::string>());

    SynthSpec spec;
    spec.horizon = cfg["env"]["horizon"].get<int>();
    spec.hop_weights = cfg["env"]["hop_weights"].get<std::vector<double>>();
    spec.beta = cfg["env"]["beta"].get<double>();
    spec.rho = cfg["env"]["rho"].get<double>();
    spec.sigma = cfg["env"]["sigma"].get<double>();
    spec.distractors_per_step = cfg["env"]["distractors_per_step"].get<int>();
    try {
        validate_spec(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("env: ") + e.what());
    }
}

SynthSpec synth_spec_of(const ExperimentConfig& cfg) {
    SynthSpec spec;
    spec.horizon = cfg.raw["env"]["horizon"].get<int>();
    spec.hop_weights = cfg.raw["env"]["hop_weights"].get<std::vector<double>>();
    spec.beta = cfg.raw["env"]["beta"].get<double>();
    spec.rho = cfg.raw["env"]["rho"].get<double>();
    spec.sigma = cfg.raw["env"]["sigma"].get<double>();
    spec.distractors_per_step = cfg.raw["env"]["distractors_per_step"].get<int>();
    spec.seed = derive_seed(cfg.seed(), "env");
    return spec;
}

RolloutOptions rollout_options_of(const ExperimentConfig& cfg) {
    RolloutOptions opt;
    opt.trials = cfg.raw["rollout"]["trials"].get<int>();
    opt.score = score_id_from_string(cfg.raw["rollout"]["score"].get<std::string>());
    opt.retrieve_k = cfg.raw["rollout"]["retrieve_k"].get<int>();
    opt.retries = cfg.raw["pipeline_remote"]["retries"].get<int>();
    return opt;
}

json encoder_spec_of(const ExperimentConfig& cfg) {
    json spec = cfg.raw["train"]["encoder"];
    spec["horizon"] = cfg.raw["env"]["horizon"];
    return spec;
}

TrainConfig train_config_of(const ExperimentConfig& cfg) {
    const json& t = cfg.raw["train"];
    TrainConfig tc;
    tc.objective = objective_from_string(t["objective"].get<std::string>());
    tc.epochs = t["epochs"].get<int>();
    tc.batch_size = t["batch_size"].get<int>();
    tc.hidden = t["hidden"].get<int>();
    tc.peak_lr = t["peak_lr"].get<double>();
    tc.warmup_ratio = t["warmup_ratio"].get<double>();
    tc.weight_decay = t["weight_decay"].get<double>();
    tc.lambda_start = t["lambda_start"].get<double>();
    tc.lambda_end = t["lambda_end"].get<double>();
    tc.seed = derive_seed(cfg.seed(), "train");
    return tc;
}

std::vector<double> grid_of(const ExperimentConfig& cfg) {
    return default_threshold_grid(cfg.raw["policy"]["grid_min"].get<double>(),
                                  cfg.raw["policy"]["grid_max"].get<double>(),
                                  cfg.raw["policy"]["grid_points"].get<int>());
}

std::unique_ptr<PipelineInterface> pipeline_of(const ExperimentConfig& cfg) {
    if (cfg.has_remote()) return std::make_unique<HttpPipeline>(cfg.remote_base_url());
    return synth_pipeline(synth_spec_of(cfg));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

void set_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

}  // namespace

std::uint64_t ExperimentConfig::seed() const { return raw.at("seed").get<std::uint64_t>(); }
std::string ExperimentConfig::data_dir() const { return raw.at("data_dir").get<std::string>(); }

bool ExperimentConfig::has_remote() const { return !remote_base_url().empty(); }

std::string ExperimentConfig::remote_base_url() const {
    if (const char* env = std::getenv("STOPRAG_PIPELINE_URL"); env && *env) return env;
    return raw.at("pipeline_remote").at("base_url").get<std::string>();
}

std::string ExperimentConfig::questions_path(const std::string& split) const {
    return data_dir() + "/questions_" + split + ".jsonl";
}
std::string ExperimentConfig::trajectories_path(const std::string& split) const {
    return data_dir() + "/trajectories_" + split + ".jsonl";
}
std::string ExperimentConfig::datapoints_path(const std::string& split) const {
    return data_dir() + "/dataset_" + split + ".jsonl";
}
std::string ExperimentConfig::checkpoint_path(const std::string& id) const {
    return data_dir() + "/ckpt_" + id + ".json";
}
std::string ExperimentConfig::report_csv_path() const { return data_dir() + "/train_report.csv"; }
std::string ExperimentConfig::report_json_path() const { return data_dir() + "/train_report.json"; }
std::string ExperimentConfig::threshold_path() const { return data_dir() + "/threshold.json"; }
std::string ExperimentConfig::episodes_path(const std::string& split) const {
    return data_dir() + "/episodes_" + split + ".jsonl";
}
std::string ExperimentConfig::eval_summary_path(const std::string& split) const {
    return data_dir() + "/eval_summary_" + split + ".json";
}
std::string ExperimentConfig::replay_summary_path(const std::string& split) const {
    return data_dir() + "/replay_summary_" + split + ".json";
}

ExperimentConfig config_from_json(json user, const std::vector<std::string>& overrides) {
    json cfg = default_config();
    merge_checked(cfg, user, "");
    for (const auto& kv : overrides) apply_override(cfg, kv);
    validate(cfg);
    return ExperimentConfig{std::move(cfg)};
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json user;
    try {
        in >> user;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(std::move(user), overrides);
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot digest missing file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf.str())));
    return out;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& artifact,
                    const std::string& command, const std::vector<std::string>& inputs) {
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.raw.dump())));
    json digests = json::object();
    for (const auto& path : inputs) digests[path] = file_digest(path);
    json manifest{{"artifact", artifact},
                  {"command", command},
                  {"config_hash", hash},
                  {"seed", cfg.seed()},
                  {"inputs", digests}};
    std::ofstream out(artifact + ".manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest for " + artifact);
    out << manifest.dump(2) << "\n";
}

void cmd_synth_gen(const ExperimentConfig& cfg) {
    ensure_dir(cfg.data_dir());
    SynthSpec spec = synth_spec_of(cfg);
    for (const auto& split : cfg.splits()) {
        int count = cfg.raw["env"]["questions"].at(split).get<int>();
        auto questions = gen_questions(spec, count, split + "-");
        write_questions(cfg.questions_path(split), questions);
        write_manifest(cfg, cfg.questions_path(split), "synth-gen", {});
        std::cout << "synth-gen: wrote " << questions.size() << " questions to "
                  << cfg.questions_path(split) << "\n";
    }
}

void cmd_rollout(const ExperimentConfig& cfg, int workers) {
    set_workers(workers > 0 ? workers : cfg.raw["rollout"]["workers"].get<int>());
    auto pipeline_factory = [&cfg]() { return pipeline_of(cfg); };
    EpisodeConfig episode{cfg.raw["env"]["horizon"].get<int>(), 1.0};
    RolloutOptions options = rollout_options_of(cfg);

    for (const auto& split : cfg.splits()) {
        auto questions = read_questions(cfg.questions_path(split));

        // Resume support: keep finished trajectories, only roll missing ids.
        std::unordered_map<std::string, Trajectory> done;
        const std::string out_path = cfg.trajectories_path(split);
        if (fs::exists(out_path))
            for (auto& t : read_trajectories(out_path)) done.emplace(t.trajectory_id, std::move(t));

        std::vector<std::size_t> todo;
        for (std::size_t i = 0; i < questions.size(); ++i)
            if (!done.count(questions[i].id)) todo.push_back(i);

        std::vector<Trajectory> fresh(todo.size());
        std::vector<std::string> failures;
#pragma omp parallel
        {
            auto pipeline = pipeline_factory();
#pragma omp for schedule(dynamic)
            for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(todo.size()); ++j) {
                const QuestionRecord& q = questions[todo[static_cast<std::size_t>(j)]];
                // Seeds split per question id, so worker order cannot matter.
                std::uint64_t seed = derive_seed(cfg.seed(), "rollout", fnv1a64(q.id));
                try {
                    fresh[static_cast<std::size_t>(j)] =
                        rollout(*pipeline, q.question, q.answer, episode, options, seed, q.id);
                } catch (const RolloutError& e) {
#pragma omp critical
                    failures.push_back(q.id + ": " + e.what());
                }
            }
        }
        if (!failures.empty()) {
            for (const auto& f : failures) std::cerr << "rollout failure: " << f << "\n";
            throw PipelineError("rollout: " + std::to_string(failures.size()) + " questions failed in split " + split);
        }

        for (auto& t : fresh) done.emplace(t.trajectory_id, std::move(t));
        std::vector<Trajectory> ordered;
        for (const auto& q : questions)
            if (auto it = done.find(q.id); it != done.end()) ordered.push_back(it->second);
        write_trajectories(out_path, ordered);
        write_manifest(cfg, out_path, "rollout", {cfg.questions_path(split)});
        std::cout << "rollout: " << split << ": " << ordered.size() << " trajectories ("
                  << todo.size() << " new) -> " << out_path << "\n";
    }
}

void cmd_build(const ExperimentConfig& cfg) {
    for (const auto& split : cfg.splits()) {
        if (split == "test") continue;  // test trajectories are replay-only
        auto dataset = build_dataset(read_trajectories(cfg.trajectories_path(split)));
        std::size_t before = dataset.datapoints.size();
        OfflineDataset filtered = filter_dataset(dataset);
        write_datapoints(cfg.datapoints_path(split), filtered.datapoints);
        write_manifest(cfg, cfg.datapoints_path(split), "build", {cfg.trajectories_path(split)});
        std::cout << "build: " << split << ": kept " << filtered.datapoints.size() << " of " << before
                  << " datapoints (dropped " << before - filtered.datapoints.size() << ")\n";
    }
}

void cmd_train(const ExperimentConfig& cfg) {
    OfflineDataset dataset = load_dataset(cfg.trajectories_path("train"), cfg.datapoints_path("train"));
    OfflineDataset valset = load_dataset(cfg.trajectories_path("val"), cfg.datapoints_path("val"));
    auto encoder = make_encoder(encoder_spec_of(cfg));
    TrainResult result = train(dataset, valset, train_config_of(cfg), *encoder, grid_of(cfg));

    json meta{{"objective", cfg.raw["train"]["objective"]},
              {"seed", cfg.seed()},
              {"selected", result.report.selected_checkpoint}};
    for (std::size_t e = 0; e < result.per_epoch.size(); ++e)
        save_checkpoint(cfg.checkpoint_path("epoch" + std::to_string(e)), result.per_epoch[e],
                        encoder_spec_of(cfg), meta);
    save_checkpoint(cfg.checkpoint_path("best"), result.best, encoder_spec_of(cfg), meta);
    write_report_csv(cfg.report_csv_path(), result.report);
    std::ofstream(cfg.report_json_path()) << report_summary(result.report).dump(2) << "\n";

    std::vector<std::string> inputs{cfg.trajectories_path("train"), cfg.datapoints_path("train"),
                                    cfg.trajectories_path("val"), cfg.datapoints_path("val")};
    write_manifest(cfg, cfg.checkpoint_path("best"), "train", inputs);
    write_manifest(cfg, cfg.report_csv_path(), "train", inputs);
    std::cout << "train: selected " << result.report.selected_checkpoint << " (val value "
              << result.report.epochs[static_cast<std::size_t>(result.best_epoch)].val_value << ") -> "
              << cfg.checkpoint_path("best") << "\n";
}

void cmd_tune(const ExperimentConfig& cfg) {
    json encoder_spec;
    QNetworkParams params = load_checkpoint(cfg.checkpoint_path("best"), &encoder_spec);
    auto encoder = make_encoder(encoder_spec);
    OfflineDataset valset = load_dataset(cfg.trajectories_path("val"), cfg.datapoints_path("val"));
    auto [threshold, value] = tune_threshold(params, *encoder, valset, grid_of(cfg));
    std::ofstream(cfg.threshold_path()) << json{{"threshold", threshold}, {"value", value}}.dump(2) << "\n";
    write_manifest(cfg, cfg.threshold_path(), "tune",
                   {cfg.checkpoint_path("best"), cfg.trajectories_path("val"), cfg.datapoints_path("val")});
    std::cout << "tune: threshold " << threshold << " with validation value " << value << "\n";
}

void cmd_eval(const ExperimentConfig& cfg) {
    const std::string split = cfg.raw["eval"]["split"].get<std::string>();
    json encoder_spec;
    QNetworkParams params = load_checkpoint(cfg.checkpoint_path("best"), &encoder_spec);
    auto encoder = make_encoder(encoder_spec);
    json thr = json::parse(std::ifstream(cfg.threshold_path()), nullptr, true);

    PolicyConfig policy;
    policy.threshold = thr.at("threshold").get<double>();
    policy.episode = EpisodeConfig{cfg.raw["env"]["horizon"].get<int>(), 1.0};
    policy.retrieve_k = cfg.raw["rollout"]["retrieve_k"].get<int>();
    policy.retries = cfg.raw["pipeline_remote"]["retries"].get<int>();

    auto pipeline = pipeline_of(cfg);
    auto questions = read_questions(cfg.questions_path(split));
    auto [episodes, summary] =
        evaluate_policy(*pipeline, params, *encoder, policy, questions, derive_seed(cfg.seed(), "eval"));

    std::ofstream episodes_out(cfg.episodes_path(split));
    for (const auto& ep : episodes) episodes_out << to_json(ep).dump() << "\n";
    std::ofstream(cfg.eval_summary_path(split)) << to_json(summary).dump(2) << "\n";
    write_manifest(cfg, cfg.eval_summary_path(split), "eval",
                   {cfg.checkpoint_path("best"), cfg.threshold_path(), cfg.questions_path(split)});
    std::cout << "eval: " << split << ": em " << summary.em << " f1 " << summary.f1 << " acc "
              << summary.acc << " precision " << summary.retrieval_precision << " recall "
              << summary.retrieval_recall << " steps " << summary.mean_steps << "\n";
}

void cmd_replay(const ExperimentConfig& cfg) {
    const std::string split = cfg.raw["eval"]["split"].get<std::string>();
    json encoder_spec;
    QNetworkParams params = load_checkpoint(cfg.checkpoint_path("best"), &encoder_spec);
    auto encoder = make_encoder(encoder_spec);
    json thr = json::parse(std::ifstream(cfg.threshold_path()), nullptr, true);
    const double threshold = thr.at("threshold").get<double>();

    OfflineDataset dataset = build_dataset(read_trajectories(cfg.trajectories_path(split)));
    double value = replay_policy_value(params, *encoder, dataset, threshold);

    double clairvoyant = 0.0, steps = 0.0;
    for (const auto& traj : dataset.trajectories) {
        clairvoyant += clairvoyant_best(traj);
        steps += static_cast<double>(replay_episode(traj, params, *encoder, threshold).first);
    }
    clairvoyant /= static_cast<double>(dataset.trajectories.size());
    steps /= static_cast<double>(dataset.trajectories.size());
    auto [fixed_t, fixed_value] = best_fixed_stop(dataset);

    json out{{"split", split},          {"threshold", threshold},
             {"mean_achieved", value},  {"mean_clairvoyant", clairvoyant},
             {"mean_stop_t", steps},    {"best_fixed_t", fixed_t},
             {"best_fixed_value", fixed_value}};
    std::ofstream(cfg.replay_summary_path(split)) << out.dump(2) << "\n";
    write_manifest(cfg, cfg.replay_summary_path(split), "replay",
                   {cfg.checkpoint_path("best"), cfg.threshold_path(), cfg.trajectories_path(split)});
    std::cout << "replay: " << split << ": achieved " << value << " vs clairvoyant " << clairvoyant
              << " (best fixed stop t=" << fixed_t << " at " << fixed_value << ")\n";
}

}  // namespace stoprag
