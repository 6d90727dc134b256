#pragma once

#include <string>
#include <vector>

#include "stoprag/dataset.hpp"
#include "stoprag/encoder.hpp"
#include "stoprag/qnet.hpp"

namespace stoprag {

struct PolicyConfig {
    double threshold = 0.0;  // margin threshold tau
    EpisodeConfig episode;   // horizon must match training
    int retrieve_k = 2;
    int retries = 2;
};

struct DecisionRecord {
    int t = 0;
    double q_stop = 0.0;
    double q_cont = 0.0;
    Action action = Action::Cont;
};

struct EpisodeResult {
    std::string question_id;
    std::string final_answer;
    int stop_t = 0;
    std::vector<DecisionRecord> decisions;
    std::vector<std::vector<std::string>> doc_ids_per_step;
};

// STOP iff q_stop - q_cont > tau (strict; equality continues).
Action decide(const QNetworkParams& params, const Encoder& encoder, const TraceState& state, double tau);

// Live episode: run iterations, consult decide after each of t = 1..T-1, stop
// on the margin rule or at the horizon, then generate the final answer from
// the accumulated trace (one sampler trial, fixed seed).
EpisodeResult run_episode(PipelineInterface& pipeline, const QNetworkParams& params,
                          const Encoder& encoder, const PolicyConfig& cfg, const std::string& question,
                          std::uint64_t seed, const std::string& question_id = "");

// Offline analog over a stored trajectory: returns the stopping step and the
// credited reward (r(s_t, STOP) at the first margin hit, else final cont).
std::pair<int, double> replay_episode(const Trajectory& trajectory, const QNetworkParams& params,
                                      const Encoder& encoder, double tau);

struct EvalSummary {
    double em = 0.0;
    double f1 = 0.0;
    double acc = 0.0;
    double retrieval_precision = 0.0;
    double retrieval_recall = 0.0;
    double mean_steps = 0.0;
    int count = 0;
    int retrieval_count = 0;  // questions with gold document ids
};

// Runs one episode per question and aggregates answer metrics, document
// retrieval precision/recall, and the average number of iterations executed.
std::pair<std::vector<EpisodeResult>, EvalSummary> evaluate_policy(
    PipelineInterface& pipeline, const QNetworkParams& params, const Encoder& encoder,
    const PolicyConfig& cfg, const std::vector<QuestionRecord>& questions, std::uint64_t seed);

json to_json(const EpisodeResult& r);
json to_json(const EvalSummary& s);

}  // namespace stoprag
