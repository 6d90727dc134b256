#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace stoprag {

using json = nlohmann::json;

// The two actions of the stopping MDP. Stop transitions deterministically to
// the absorbing terminal state; Cont runs one more retrieval iteration.
enum class Action { Stop, Cont };

inline const char* to_string(Action a) { return a == Action::Stop ? "STOP" : "CONT"; }

struct Document {
    std::string doc_id;
    std::string content;
    double score = 0.0;
};

// One retrieval iteration: generated query, retrieved documents, and the
// intermediate answer produced from them.
struct EvidenceStep {
    std::string query;
    std::vector<Document> documents;
    std::string intermediate_answer;
};

// Partial interaction record: the MDP state s_t. The gold answer is carried
// for reward computation only; encoders must never read it.
struct TraceState {
    std::string question;
    std::optional<std::string> gold_answer;
    std::vector<EvidenceStep> steps;
    int t = 0;  // invariant: t == steps.size()
};

struct EpisodeConfig {
    int horizon = 10;       // T
    double discount = 1.0;  // fixed to 1 for all closed-form targets
};

// Stop rewards r(s_t, STOP) for t = 1..T-1 plus the final continue reward
// r(s_{T-1}, CONT). All values live in [0, 1].
class RewardTable {
public:
    RewardTable() = default;
    RewardTable(int horizon, std::vector<double> stop_rewards, double final_cont);

    int horizon() const { return horizon_; }
    // r(s_t, STOP), valid for t in 1..T-1.
    double stop(int t) const;
    double final_cont() const { return final_cont_; }
    const std::vector<double>& stop_rewards() const { return stop_; }

    bool operator==(const RewardTable&) const = default;

private:
    int horizon_ = 0;
    std::vector<double> stop_;  // stop_[t-1] = r(s_t, STOP)
    double final_cont_ = 0.0;
};

// A full-length rollout: exactly T evidence steps plus estimated rewards.
struct Trajectory {
    std::string trajectory_id;
    std::uint64_t seed = 0;
    std::string question;
    std::optional<std::string> gold_answer;
    int horizon = 0;
    std::vector<EvidenceStep> steps;  // length exactly horizon
    RewardTable rewards;
};

// First t evidence steps of the trajectory as a state. Throws
// std::out_of_range unless 0 <= t <= T.
TraceState make_prefix(const Trajectory& traj, int t);

// True iff the episode has stopped or the state sits at the horizon.
bool is_terminal(const TraceState& state, const EpisodeConfig& config, bool stopped);

// Throws std::invalid_argument when a trajectory violates its invariants
// (step count, reward completeness, reward range).
void validate_trajectory(const Trajectory& traj);

// JSON (de)serialization following the trajectory JSONL record schema.
json to_json(const Document& d);
json to_json(const EvidenceStep& s);
json to_json(const TraceState& s);
json to_json(const Trajectory& t);
Document document_from_json(const json& j);
EvidenceStep evidence_step_from_json(const json& j);
TraceState trace_state_from_json(const json& j);
Trajectory trajectory_from_json(const json& j);

std::vector<Trajectory> read_trajectories(const std::string& path);
void write_trajectories(const std::string& path, const std::vector<Trajectory>& trajs);

}  // namespace stoprag
