#include "stoprag/dataset.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "stoprag/rng.hpp"

namespace stoprag {

namespace {

template <typename Fn>
auto with_retries(int retries, const TraceState& at, Fn&& fn) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const PipelineError& e) {
            if (attempt >= retries) throw RolloutError(std::string("pipeline failed: ") + e.what(), at);
        }
    }
}

}  // namespace

EvidenceStep execute_iteration(PipelineInterface& pipeline, const TraceState& state, int retrieve_k,
                               int retries, std::uint64_t seed) {
    EvidenceStep step;
    step.query = with_retries(retries, state, [&] {
        return pipeline.generate_query(state, derive_seed(seed, "query"));
    });
    step.documents = with_retries(retries, state, [&] {
        return pipeline.retrieve(step.query, retrieve_k, derive_seed(seed, "retrieve"));
    });
    step.intermediate_answer = with_retries(retries, state, [&] {
        return pipeline.generate_intermediate_answer(step.query, step.documents,
                                                     derive_seed(seed, "answer"));
    });
    return step;
}

Trajectory rollout(PipelineInterface& pipeline, const std::string& question, const std::string& gold,
                   const EpisodeConfig& config, const RolloutOptions& options, std::uint64_t seed,
                   const std::string& trajectory_id) {
    if (config.horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
    if (options.trials < 1) throw std::invalid_argument("rollout: trials must be >= 1");

    Trajectory traj;
    traj.trajectory_id = trajectory_id.empty() ? "traj-" + std::to_string(seed) : trajectory_id;
    traj.seed = seed;
    traj.question = question;
    traj.gold_answer = gold;
    traj.horizon = config.horizon;

    TraceState state;
    state.question = question;
    state.gold_answer = gold;

    AnswerSampler sampler = [&pipeline, retries = options.retries](const TraceState& s, int trial,
                                                                   std::uint64_t trial_seed) {
        return with_retries(retries, s, [&] { return pipeline.sample_answer(s, trial, trial_seed); });
    };

    std::vector<double> stop_rewards;
    for (int t = 1; t <= config.horizon; ++t) {
        EvidenceStep step = execute_iteration(pipeline, state, options.retrieve_k, options.retries,
                                              derive_seed(seed, "step", static_cast<std::uint64_t>(t)));
        traj.steps.push_back(step);
        state.steps.push_back(std::move(step));
        state.t = t;
        if (t <= config.horizon - 1) {
            stop_rewards.push_back(estimate_reward(state, sampler, options.trials, options.score,
                                                   derive_seed(seed, "reward", static_cast<std::uint64_t>(t))));
        }
    }
    // r(s_{T-1}, CONT): answer quality conditioned on the full state s_T.
    double final_cont = estimate_reward(state, sampler, options.trials, options.score,
                                        derive_seed(seed, "reward", static_cast<std::uint64_t>(config.horizon)));
    traj.rewards = RewardTable(config.horizon, std::move(stop_rewards), final_cont);
    validate_trajectory(traj);
    return traj;
}

std::vector<OfflineDatapoint> decompose(const Trajectory& trajectory, std::size_t traj_index) {
    validate_trajectory(trajectory);
    std::vector<OfflineDatapoint> out;
    out.reserve(static_cast<std::size_t>(trajectory.horizon - 1));
    for (int t = 1; t <= trajectory.horizon - 1; ++t) {
        OfflineDatapoint d;
        d.trajectory_id = trajectory.trajectory_id;
        d.traj_index = traj_index;
        d.t = t;
        d.r_stop = trajectory.rewards.stop(t);
        d.is_last_decision = (t == trajectory.horizon - 1);
        out.push_back(std::move(d));
    }
    return out;
}

OfflineDataset build_dataset(std::vector<Trajectory> trajectories) {
    OfflineDataset ds;
    ds.trajectories = std::move(trajectories);
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        auto points = decompose(ds.trajectories[i], i);
        ds.datapoints.insert(ds.datapoints.end(), points.begin(), points.end());
    }
    return ds;
}

OfflineDataset filter_dataset(const OfflineDataset& dataset) {
    OfflineDataset out;
    out.trajectories = dataset.trajectories;
    for (const auto& d : dataset.datapoints) {
        const Trajectory& traj = dataset.trajectories.at(d.traj_index);
        if (d.r_stop == 0.0) {
            // Qhat^(T-t)(s_t, CONT): max over later stop rewards and the
            // final continue reward, computable from the table alone.
            double best = traj.rewards.final_cont();
            for (int k = d.t + 1; k <= traj.horizon - 1; ++k)
                best = std::max(best, traj.rewards.stop(k));
            if (best == 0.0) continue;
        }
        out.datapoints.push_back(d);
    }
    return out;
}

std::vector<QuestionRecord> read_questions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open question file: " + path);
    std::vector<QuestionRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        QuestionRecord q;
        q.id = j.at("id").get<std::string>();
        q.question = j.at("question").get<std::string>();
        q.answer = j.at("answer").get<std::string>();
        if (j.contains("gold_doc_ids")) q.gold_doc_ids = j["gold_doc_ids"].get<std::vector<std::string>>();
        out.push_back(std::move(q));
    }
    return out;
}

void write_questions(const std::string& path, const std::vector<QuestionRecord>& questions) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write question file: " + path);
    for (const auto& q : questions) {
        json j{{"id", q.id}, {"question", q.question}, {"answer", q.answer}};
        if (!q.gold_doc_ids.empty()) j["gold_doc_ids"] = q.gold_doc_ids;
        out << j.dump() << "\n";
    }
}

json to_json(const OfflineDatapoint& d) {
    return json{{"trajectory_id", d.trajectory_id},
                {"t", d.t},
                {"r_stop", d.r_stop},
                {"is_last_decision", d.is_last_decision}};
}

OfflineDatapoint datapoint_from_json(const json& j) {
    OfflineDatapoint d;
    d.trajectory_id = j.at("trajectory_id").get<std::string>();
    d.t = j.at("t").get<int>();
    d.r_stop = j.at("r_stop").get<double>();
    d.is_last_decision = j.at("is_last_decision").get<bool>();
    return d;
}

void write_datapoints(const std::string& path, const std::vector<OfflineDatapoint>& datapoints) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write datapoint file: " + path);
    for (const auto& d : datapoints) out << to_json(d).dump() << "\n";
}

OfflineDataset load_dataset(const std::string& trajectories_path, const std::string& datapoints_path) {
    OfflineDataset ds;
    ds.trajectories = read_trajectories(trajectories_path);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) index[ds.trajectories[i].trajectory_id] = i;

    std::ifstream in(datapoints_path);
    if (!in) throw std::runtime_error("cannot open datapoint file: " + datapoints_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        OfflineDatapoint d = datapoint_from_json(json::parse(line));
        auto it = index.find(d.trajectory_id);
        if (it == index.end())
            throw std::runtime_error("datapoint references unknown trajectory: " + d.trajectory_id);
        d.traj_index = it->second;
        const Trajectory& traj = ds.trajectories[it->second];
        if (d.t < 1 || d.t > traj.horizon - 1)
            throw std::invalid_argument("datapoint t outside 1..T-1");
        if (d.r_stop != traj.rewards.stop(d.t))
            throw std::invalid_argument("datapoint r_stop does not match its trajectory");
        ds.datapoints.push_back(std::move(d));
    }
    return ds;
}

}  // namespace stoprag
