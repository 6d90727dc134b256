#include "stoprag/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stoprag/rng.hpp"

namespace stoprag {

void validate_spec(const SynthSpec& spec) {
    if (spec.horizon < 1) throw std::invalid_argument("SynthSpec: horizon must be >= 1");
    if (!(spec.beta >= 0.0 && spec.beta < 1.0)) throw std::invalid_argument("SynthSpec: beta outside [0,1)");
    if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw std::invalid_argument("SynthSpec: rho outside [0,1]");
    if (!(spec.sigma >= 0.0)) throw std::invalid_argument("SynthSpec: sigma must be >= 0");
    if (spec.hop_weights.empty() || static_cast<int>(spec.hop_weights.size()) > spec.horizon)
        throw std::invalid_argument("SynthSpec: hop_weights must cover 1..h_max with h_max <= horizon");
    double total = 0.0;
    for (double w : spec.hop_weights) {
        if (w < 0.0) throw std::invalid_argument("SynthSpec: negative hop weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("SynthSpec: hop weights sum to zero");
    if (spec.distractors_per_step < 0) throw std::invalid_argument("SynthSpec: negative distractor count");
}

int hop_for(const SynthSpec& spec, const std::string& qid) {
    double total = 0.0;
    for (double w : spec.hop_weights) total += w;
    Rng rng(derive_seed(spec.seed, "hop", fnv1a64(qid)));
    double u = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.hop_weights.size(); ++i) {
        acc += spec.hop_weights[i];
        if (u < acc) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(spec.hop_weights.size());
}

double intended_reward(const SynthSpec& spec, int t, int h) {
    if (t < h) return spec.beta * static_cast<double>(t) / static_cast<double>(h);
    return std::max(0.0, 1.0 - spec.rho * static_cast<double>(t - h));
}

std::string synth_question_text(const std::string& qid) { return "synthetic question " + qid; }
std::string synth_gold_answer(const std::string& qid) { return "goldentity " + qid; }

namespace {

std::string qid_from_question(const std::string& question) {
    auto pos = question.rfind(' ');
    if (pos == std::string::npos || pos + 1 >= question.size())
        throw PipelineError("synth pipeline: malformed question: " + question);
    return question.substr(pos + 1);
}

struct QueryParts {
    std::string qid;
    int t = 0;
};

QueryParts parse_query(const std::string& query) {
    std::istringstream in(query);
    std::string verb, qid, step;
    in >> verb >> qid >> step;
    if (verb != "lookup" || step.rfind("step", 0) != 0)
        throw PipelineError("synth pipeline: malformed query: " + query);
    return {qid, std::stoi(step.substr(4))};
}

std::string maybe_corrupt(const std::string& content, double sigma, Rng& rng) {
    if (sigma <= 0.0) return content;
    std::istringstream in(content);
    std::ostringstream out;
    std::string tok;
    bool first = true;
    while (in >> tok) {
        if (!first) out << ' ';
        first = false;
        if (rng.next_double() < sigma)
            out << "noise" << rng.next_below(1000000);
        else
            out << tok;
    }
    return out.str();
}

class SynthPipeline : public PipelineInterface {
public:
    explicit SynthPipeline(SynthSpec spec) : spec_(std::move(spec)) { validate_spec(spec_); }

    std::string generate_query(const TraceState& state, std::uint64_t) override {
        std::string qid = qid_from_question(state.question);
        return "lookup " + qid + " step" + std::to_string(state.t + 1);
    }

    std::vector<Document> retrieve(const std::string& query, int k, std::uint64_t seed) override {
        QueryParts q = parse_query(query);
        int h = hop_for(spec_, q.qid);
        Rng rng(derive_seed(spec_.seed, "corrupt", hash_combine(fnv1a64(q.qid), seed)));

        std::vector<Document> docs;
        std::ostringstream content;
        content << "evidence " << q.qid << " step" << q.t << " hops" << h << ' '
                << (q.t >= h ? "done" : "pending");
        docs.push_back(Document{q.qid + ".d" + std::to_string(q.t),
                                maybe_corrupt(content.str(), spec_.sigma, rng), 1.0});
        int extra = std::min(std::max(k - 1, 0), spec_.distractors_per_step);
        for (int j = 0; j < extra; ++j) {
            std::ostringstream d;
            d << "distractor " << q.qid << " step" << q.t << " filler" << rng.next_below(1000);
            docs.push_back(Document{q.qid + ".x" + std::to_string(q.t) + "." + std::to_string(j),
                                    maybe_corrupt(d.str(), spec_.sigma, rng),
                                    1.0 / static_cast<double>(j + 2)});
        }
        return docs;
    }

    std::string generate_intermediate_answer(const std::string& query, const std::vector<Document>&,
                                             std::uint64_t) override {
        QueryParts q = parse_query(query);
        return "partial " + q.qid + " step" + std::to_string(q.t);
    }

    std::string sample_answer(const TraceState& state, int trial, std::uint64_t seed) override {
        std::string qid = qid_from_question(state.question);
        int h = hop_for(spec_, qid);
        double p = intended_reward(spec_, state.t, h);
        bool correct;
        if (spec_.sigma <= 0.0) {
            // Rate-matched deterministic trials: among any first N trials
            // exactly floor(N*p) are correct (Bresenham scheme). The epsilon
            // guards p values that are exact rationals in intent but sit just
            // below them in floating point.
            const double eps = 1e-9;
            double lo = std::floor(static_cast<double>(trial) * p + eps);
            double hi = std::floor(static_cast<double>(trial + 1) * p + eps);
            correct = hi > lo;
        } else {
            Rng rng(derive_seed(seed, "bernoulli", static_cast<std::uint64_t>(trial)));
            correct = rng.next_double() < p;
        }
        if (correct) return synth_gold_answer(qid);
        return "wronganswer trial" + std::to_string(trial);
    }

private:
    SynthSpec spec_;
};

}  // namespace

std::unique_ptr<PipelineInterface> synth_pipeline(const SynthSpec& spec) {
    return std::make_unique<SynthPipeline>(spec);
}

std::vector<QuestionRecord> gen_questions(const SynthSpec& spec, int count,
                                          const std::string& id_prefix) {
    validate_spec(spec);
    if (count < 0) throw std::invalid_argument("gen_questions: negative count");
    std::vector<QuestionRecord> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%06d", i);
        QuestionRecord q;
        q.id = id_prefix + buf;
        q.question = synth_question_text(q.id);
        q.answer = synth_gold_answer(q.id);
        int h = hop_for(spec, q.id);
        for (int t = 1; t <= h; ++t) q.gold_doc_ids.push_back(q.id + ".d" + std::to_string(t));
        out.push_back(std::move(q));
    }
    return out;
}

TabularSpec random_tabular(Rng& rng, int max_horizon, int max_chains) {
    TabularSpec spec;
    spec.horizon = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::max(1, max_horizon - 1))));
    int chains = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_chains)));
    for (int h = 0; h < chains; ++h) {
        std::vector<double> stops;
        for (int t = 1; t <= spec.horizon - 1; ++t) stops.push_back(rng.next_double());
        spec.r_stop.push_back(std::move(stops));
        spec.r_cont_final.push_back(rng.next_double());
    }
    return spec;
}

QTable backward_induction(const TabularSpec& spec) {
    if (spec.horizon < 2) throw std::invalid_argument("backward_induction: horizon must be >= 2");
    QTable table;
    table.horizon = spec.horizon;
    table.values.resize(spec.r_cont_final.size());
    for (std::size_t h = 0; h < spec.r_cont_final.size(); ++h) {
        if (static_cast<int>(spec.r_stop[h].size()) != spec.horizon - 1)
            throw std::invalid_argument("backward_induction: r_stop row size must be T-1");
        std::vector<ActionValues> q(static_cast<std::size_t>(spec.horizon - 1));
        for (int t = spec.horizon - 1; t >= 1; --t) {
            ActionValues& v = q[static_cast<std::size_t>(t - 1)];
            v.q_stop = spec.r_stop[h][static_cast<std::size_t>(t - 1)];
            if (t == spec.horizon - 1)
                v.q_cont = spec.r_cont_final[h];
            else
                v.q_cont = q[static_cast<std::size_t>(t)].max();
        }
        table.values[h] = std::move(q);
    }
    return table;
}

Trajectory trajectory_from_tabular(const TabularSpec& spec, int h, const std::string& id) {
    if (h < 1 || h > spec.num_chains()) throw std::out_of_range("trajectory_from_tabular: bad chain index");
    Trajectory traj;
    traj.trajectory_id = id;
    traj.seed = 0;
    traj.question = "tabular question chain" + std::to_string(h);
    traj.gold_answer = "chain" + std::to_string(h);
    traj.horizon = spec.horizon;
    for (int t = 1; t <= spec.horizon; ++t) {
        EvidenceStep step;
        step.query = "tabular step" + std::to_string(t);
        std::ostringstream content;
        content << "state t" << t << " chain" << h;
        step.documents.push_back(Document{"tab." + std::to_string(h) + "." + std::to_string(t),
                                          content.str(), 1.0});
        step.intermediate_answer = "partial";
        traj.steps.push_back(std::move(step));
    }
    traj.rewards = RewardTable(spec.horizon, spec.r_stop[static_cast<std::size_t>(h - 1)],
                               spec.r_cont_final[static_cast<std::size_t>(h - 1)]);
    return traj;
}

double clairvoyant_best(const Trajectory& trajectory) {
    double best = trajectory.rewards.final_cont();
    for (int t = 1; t <= trajectory.horizon - 1; ++t)
        best = std::max(best, trajectory.rewards.stop(t));
    return best;
}

std::pair<int, double> best_fixed_stop(const OfflineDataset& dataset) {
    if (dataset.trajectories.empty()) throw std::invalid_argument("best_fixed_stop: empty dataset");
    const int T = dataset.trajectories.front().horizon;
    for (const auto& traj : dataset.trajectories)
        if (traj.horizon != T) throw std::invalid_argument("best_fixed_stop: mixed horizons");

    int best_t = 1;
    double best_mean = -1.0;
    for (int t = 1; t <= T; ++t) {
        double total = 0.0;
        for (const auto& traj : dataset.trajectories)
            total += t <= T - 1 ? traj.rewards.stop(t) : traj.rewards.final_cont();
        double mean = total / static_cast<double>(dataset.trajectories.size());
        if (mean > best_mean) {
            best_mean = mean;
            best_t = t;
        }
    }
    return {best_t, best_mean};
}

}  // namespace stoprag
