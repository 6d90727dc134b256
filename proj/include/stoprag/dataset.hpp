#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stoprag/mdp.hpp"
#include "stoprag/scoring.hpp"

namespace stoprag {

// One iterative-retrieval backend. Implementations are stochastic but must be
// deterministic functions of their arguments including the seed.
class PipelineInterface {
public:
    virtual ~PipelineInterface() = default;
    virtual std::string generate_query(const TraceState& state, std::uint64_t seed) = 0;
    virtual std::vector<Document> retrieve(const std::string& query, int k, std::uint64_t seed) = 0;
    virtual std::string generate_intermediate_answer(const std::string& query,
                                                     const std::vector<Document>& documents,
                                                     std::uint64_t seed) = 0;
    // Final-answer sampler: prediction for trial `trial` conditioned on state.
    virtual std::string sample_answer(const TraceState& state, int trial, std::uint64_t seed) = 0;
};

struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rollout failure carrying the partial trace for diagnostics.
struct RolloutError : std::runtime_error {
    RolloutError(const std::string& msg, TraceState partial)
        : std::runtime_error(msg), partial_trace(std::move(partial)) {}
    TraceState partial_trace;
};

struct RolloutOptions {
    int trials = 8;              // N answer trials per reward estimate
    ScoreId score = ScoreId::F1; // S
    int retrieve_k = 2;          // documents fetched per iteration
    int retries = 2;             // extra attempts per pipeline call
};

// Runs one pipeline iteration (query, retrieve, intermediate answer) on top of
// `state` and returns the new evidence step. Shared by rollout and the live
// policy loop. `seed` must already be specific to (trajectory, step).
EvidenceStep execute_iteration(PipelineInterface& pipeline, const TraceState& state, int retrieve_k,
                               int retries, std::uint64_t seed);

// Full-horizon rollout that never stops early. Stop rewards for t = 1..T-1
// and the final continue reward are estimated via N answer trials and frozen
// into the trajectory.
Trajectory rollout(PipelineInterface& pipeline, const std::string& question, const std::string& gold,
                   const EpisodeConfig& config, const RolloutOptions& options, std::uint64_t seed,
                   const std::string& trajectory_id = "");

// One training datapoint: a prefix state with its immediate stop reward,
// linked back to its parent trajectory for successor lookups.
struct OfflineDatapoint {
    std::string trajectory_id;
    std::size_t traj_index = 0;  // position within OfflineDataset::trajectories
    int t = 0;
    double r_stop = 0.0;
    bool is_last_decision = false;
};

struct OfflineDataset {
    std::vector<Trajectory> trajectories;
    std::vector<OfflineDatapoint> datapoints;
};

// Prefix decomposition of one trajectory: exactly T-1 datapoints, t = 1..T-1.
std::vector<OfflineDatapoint> decompose(const Trajectory& trajectory, std::size_t traj_index = 0);

OfflineDataset build_dataset(std::vector<Trajectory> trajectories);

// Drops datapoints with r(s_t, STOP) == 0 and Qhat^(T-t)(s_t, CONT) == 0,
// i.e. states whose entire remaining reward landscape is exactly zero.
OfflineDataset filter_dataset(const OfflineDataset& dataset);

// Question corpus records: {id, question, answer, gold_doc_ids?}.
struct QuestionRecord {
    std::string id;
    std::string question;
    std::string answer;
    std::vector<std::string> gold_doc_ids;
};

std::vector<QuestionRecord> read_questions(const std::string& path);
void write_questions(const std::string& path, const std::vector<QuestionRecord>& questions);

json to_json(const OfflineDatapoint& d);
OfflineDatapoint datapoint_from_json(const json& j);

// Datapoint JSONL plus the trajectory file they reference.
void write_datapoints(const std::string& path, const std::vector<OfflineDatapoint>& datapoints);
// Rebuilds an OfflineDataset from trajectories and stored datapoints,
// re-linking traj_index by trajectory_id.
OfflineDataset load_dataset(const std::string& trajectories_path, const std::string& datapoints_path);

}  // namespace stoprag
