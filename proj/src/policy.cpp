#include "stoprag/policy.hpp"

#include <set>
#include <stdexcept>

#include "stoprag/rng.hpp"
#include "stoprag/scoring.hpp"

namespace stoprag {

Action decide(const QNetworkParams& params, const Encoder& encoder, const TraceState& state, double tau) {
    ActionValues q = forward(params, encoder.encode(state));
    return q.q_stop - q.q_cont > tau ? Action::Stop : Action::Cont;
}

EpisodeResult run_episode(PipelineInterface& pipeline, const QNetworkParams& params,
                          const Encoder& encoder, const PolicyConfig& cfg, const std::string& question,
                          std::uint64_t seed, const std::string& question_id) {
    const int T = cfg.episode.horizon;
    if (T < 1) throw std::invalid_argument("run_episode: horizon must be >= 1");

    EpisodeResult result;
    result.question_id = question_id;

    TraceState state;
    state.question = question;

    for (int t = 1; t <= T; ++t) {
        EvidenceStep step = execute_iteration(pipeline, state, cfg.retrieve_k, cfg.retries,
                                              derive_seed(seed, "step", static_cast<std::uint64_t>(t)));
        std::vector<std::string> ids;
        for (const auto& d : step.documents) ids.push_back(d.doc_id);
        result.doc_ids_per_step.push_back(std::move(ids));
        state.steps.push_back(std::move(step));
        state.t = t;

        if (t <= T - 1) {
            ActionValues q = forward(params, encoder.encode(state));
            Action action = q.q_stop - q.q_cont > cfg.threshold ? Action::Stop : Action::Cont;
            result.decisions.push_back(DecisionRecord{t, q.q_stop, q.q_cont, action});
            if (action == Action::Stop) break;
        }
    }

    result.stop_t = state.t;
    result.final_answer = pipeline.sample_answer(state, 0, derive_seed(seed, "final"));
    return result;
}

std::pair<int, double> replay_episode(const Trajectory& trajectory, const QNetworkParams& params,
                                      const Encoder& encoder, double tau) {
    validate_trajectory(trajectory);
    for (int t = 1; t <= trajectory.horizon - 1; ++t) {
        ActionValues q = forward(params, encoder.encode(make_prefix(trajectory, t)));
        if (q.q_stop - q.q_cont > tau) return {t, trajectory.rewards.stop(t)};
    }
    return {trajectory.horizon, trajectory.rewards.final_cont()};
}

std::pair<std::vector<EpisodeResult>, EvalSummary> evaluate_policy(
    PipelineInterface& pipeline, const QNetworkParams& params, const Encoder& encoder,
    const PolicyConfig& cfg, const std::vector<QuestionRecord>& questions, std::uint64_t seed) {
    if (questions.empty()) throw std::invalid_argument("evaluate_policy: no questions");

    std::vector<EpisodeResult> episodes;
    episodes.reserve(questions.size());
    EvalSummary summary;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const QuestionRecord& q = questions[i];
        EpisodeResult ep = run_episode(pipeline, params, encoder, cfg, q.question,
                                       derive_seed(seed, "episode", fnv1a64(q.id)), q.id);
        summary.em += exact_match(ep.final_answer, q.answer);
        summary.f1 += f1_score(ep.final_answer, q.answer);
        summary.acc += accuracy_contains(ep.final_answer, q.answer);
        summary.mean_steps += static_cast<double>(ep.stop_t);
        if (!q.gold_doc_ids.empty()) {
            std::vector<std::string> retrieved;
            for (const auto& step_ids : ep.doc_ids_per_step)
                retrieved.insert(retrieved.end(), step_ids.begin(), step_ids.end());
            auto [precision, recall] =
                retrieval_metrics(retrieved, std::set<std::string>(q.gold_doc_ids.begin(), q.gold_doc_ids.end()));
            summary.retrieval_precision += precision;
            summary.retrieval_recall += recall;
            ++summary.retrieval_count;
        }
        ++summary.count;
        episodes.push_back(std::move(ep));
    }

    summary.em /= summary.count;
    summary.f1 /= summary.count;
    summary.acc /= summary.count;
    summary.mean_steps /= summary.count;
    if (summary.retrieval_count > 0) {
        summary.retrieval_precision /= summary.retrieval_count;
        summary.retrieval_recall /= summary.retrieval_count;
    }
    return {std::move(episodes), summary};
}

json to_json(const EpisodeResult& r) {
    json decisions = json::array();
    for (const auto& d : r.decisions)
        decisions.push_back(json{{"t", d.t},
                                 {"q_stop", d.q_stop},
                                 {"q_cont", d.q_cont},
                                 {"action", to_string(d.action)}});
    return json{{"question_id", r.question_id},
                {"final_answer", r.final_answer},
                {"stop_t", r.stop_t},
                {"decisions", decisions},
                {"doc_ids_per_step", r.doc_ids_per_step}};
}

json to_json(const EvalSummary& s) {
    return json{{"em", s.em},
                {"f1", s.f1},
                {"acc", s.acc},
                {"retrieval_precision", s.retrieval_precision},
                {"retrieval_recall", s.retrieval_recall},
                {"mean_steps", s.mean_steps},
                {"count", s.count},
                {"retrieval_count", s.retrieval_count}};
}

}  // namespace stoprag
