#include "stoprag/mdp.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace stoprag {

RewardTable::RewardTable(int horizon, std::vector<double> stop_rewards, double final_cont)
    : horizon_(horizon), stop_(std::move(stop_rewards)), final_cont_(final_cont) {
    if (horizon_ < 1) throw std::invalid_argument("RewardTable: horizon must be >= 1");
    if (static_cast<int>(stop_.size()) != horizon_ - 1)
        throw std::invalid_argument("RewardTable: need exactly T-1 stop rewards");
    for (double r : stop_)
        if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("RewardTable: stop reward outside [0,1]");
    if (!(final_cont_ >= 0.0 && final_cont_ <= 1.0))
        throw std::invalid_argument("RewardTable: final cont reward outside [0,1]");
}

double RewardTable::stop(int t) const {
    if (t < 1 || t > horizon_ - 1) throw std::out_of_range("RewardTable::stop: t outside 1..T-1");
    return stop_[static_cast<std::size_t>(t - 1)];
}

TraceState make_prefix(const Trajectory& traj, int t) {
    if (t < 0 || t > traj.horizon) throw std::out_of_range("make_prefix: t outside 0..T");
    TraceState s;
    s.question = traj.question;
    s.gold_answer = traj.gold_answer;
    s.steps.assign(traj.steps.begin(), traj.steps.begin() + t);
    s.t = t;
    return s;
}

bool is_terminal(const TraceState& state, const EpisodeConfig& config, bool stopped) {
    return stopped || state.t == config.horizon;
}

void validate_trajectory(const Trajectory& traj) {
    if (traj.horizon < 1) throw std::invalid_argument("trajectory: horizon must be >= 1");
    if (static_cast<int>(traj.steps.size()) != traj.horizon)
        throw std::invalid_argument("trajectory: step count must equal horizon");
    if (traj.rewards.horizon() != traj.horizon)
        throw std::invalid_argument("trajectory: reward table horizon mismatch");
    for (const auto& step : traj.steps)
        for (const auto& doc : step.documents)
            if (!std::isfinite(doc.score)) throw std::invalid_argument("trajectory: non-finite document score");
}

json to_json(const Document& d) {
    return json{{"doc_id", d.doc_id}, {"content", d.content}, {"score", d.score}};
}

json to_json(const EvidenceStep& s) {
    json docs = json::array();
    for (const auto& d : s.documents) docs.push_back(to_json(d));
    return json{{"query", s.query}, {"documents", docs}, {"intermediate_answer", s.intermediate_answer}};
}

json to_json(const TraceState& s) {
    json steps = json::array();
    for (const auto& st : s.steps) steps.push_back(to_json(st));
    json j{{"question", s.question}, {"steps", steps}, {"t", s.t}};
    j["gold_answer"] = s.gold_answer ? json(*s.gold_answer) : json(nullptr);
    return j;
}

json to_json(const Trajectory& t) {
    json steps = json::array();
    for (const auto& st : t.steps) steps.push_back(to_json(st));
    json stop = json::object();
    for (int i = 1; i <= t.horizon - 1; ++i) stop[std::to_string(i)] = t.rewards.stop(i);
    json j{{"trajectory_id", t.trajectory_id},
           {"seed", t.seed},
           {"question", t.question},
           {"horizon", t.horizon},
           {"steps", steps},
           {"rewards", json{{"stop", stop}, {"final_cont", t.rewards.final_cont()}}}};
    j["gold_answer"] = t.gold_answer ? json(*t.gold_answer) : json(nullptr);
    return j;
}

Document document_from_json(const json& j) {
    return Document{j.at("doc_id").get<std::string>(), j.at("content").get<std::string>(),
                    j.at("score").get<double>()};
}

EvidenceStep evidence_step_from_json(const json& j) {
    EvidenceStep s;
    s.query = j.at("query").get<std::string>();
    for (const auto& d : j.at("documents")) s.documents.push_back(document_from_json(d));
    s.intermediate_answer = j.at("intermediate_answer").get<std::string>();
    return s;
}

TraceState trace_state_from_json(const json& j) {
    TraceState s;
    s.question = j.at("question").get<std::string>();
    if (!j.at("gold_answer").is_null()) s.gold_answer = j.at("gold_answer").get<std::string>();
    for (const auto& st : j.at("steps")) s.steps.push_back(evidence_step_from_json(st));
    s.t = j.at("t").get<int>();
    if (s.t != static_cast<int>(s.steps.size()))
        throw std::invalid_argument("trace state: t does not match step count");
    return s;
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory t;
    t.trajectory_id = j.at("trajectory_id").get<std::string>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.question = j.at("question").get<std::string>();
    if (!j.at("gold_answer").is_null()) t.gold_answer = j.at("gold_answer").get<std::string>();
    t.horizon = j.at("horizon").get<int>();
    for (const auto& st : j.at("steps")) t.steps.push_back(evidence_step_from_json(st));

    const json& rj = j.at("rewards");
    std::vector<double> stop(static_cast<std::size_t>(t.horizon - 1), 0.0);
    const json& sj = rj.at("stop");
    if (static_cast<int>(sj.size()) != t.horizon - 1)
        throw std::invalid_argument("trajectory: reward table must cover exactly t=1..T-1");
    for (auto it = sj.begin(); it != sj.end(); ++it) {
        int t_idx = std::stoi(it.key());
        if (t_idx < 1 || t_idx > t.horizon - 1)
            throw std::invalid_argument("trajectory: stop reward key outside 1..T-1");
        stop[static_cast<std::size_t>(t_idx - 1)] = it.value().get<double>();
    }
    t.rewards = RewardTable(t.horizon, std::move(stop), rj.at("final_cont").get<double>());
    validate_trajectory(t);
    return t;
}

std::vector<Trajectory> read_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(trajectory_from_json(json::parse(line)));
    }
    return out;
}

void write_trajectories(const std::string& path, const std::vector<Trajectory>& trajs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
    for (const auto& t : trajs) out << to_json(t).dump() << "\n";
}

}  // namespace stoprag
