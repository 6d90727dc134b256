#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stoprag/dataset.hpp"
#include "stoprag/rng.hpp"
#include "stoprag/targets.hpp"

namespace stoprag {

// Synthetic iterative-retrieval family. An episode needs h hops of evidence;
// stopping before the h-th hop pays a scaled base reward, stopping at the hop
// pays 1, and each extra iteration past it decays the reward by rho
// (distracting evidence). sigma corrupts document tokens and switches the
// answer sampler from rate-matched deterministic trials to Bernoulli trials.
struct SynthSpec {
    int horizon = 5;
    std::vector<double> hop_weights;  // over h = 1..horizon; normalized internally
    double beta = 0.0;                // pre-hop base level, in [0,1)
    double rho = 0.25;                // post-hop per-step decay, in [0,1]
    double sigma = 0.0;               // observation noise, >= 0
    int distractors_per_step = 1;
    std::uint64_t seed = 0;
};

void validate_spec(const SynthSpec& spec);

// Hop requirement of a question, a deterministic function of (spec.seed, qid).
int hop_for(const SynthSpec& spec, const std::string& qid);

// Analytic answer quality after t iterations when h hops are required.
double intended_reward(const SynthSpec& spec, int t, int h);

std::string synth_question_text(const std::string& qid);
std::string synth_gold_answer(const std::string& qid);

std::unique_ptr<PipelineInterface> synth_pipeline(const SynthSpec& spec);

// Question corpus with gold document ids ({qid}.d1 .. {qid}.dh).
std::vector<QuestionRecord> gen_questions(const SynthSpec& spec, int count,
                                          const std::string& id_prefix);

// Fully observed finite MDP over states (t, h) with deterministic transitions.
struct TabularSpec {
    int horizon = 3;
    // r_stop[h-1][t-1] = r((t,h), STOP) for t = 1..T-1
    std::vector<std::vector<double>> r_stop;
    // r_cont_final[h-1] = r((T-1,h), CONT)
    std::vector<double> r_cont_final;
    int num_chains() const { return static_cast<int>(r_cont_final.size()); }
};

TabularSpec random_tabular(Rng& rng, int max_horizon, int max_chains = 4);

// Q* computed by backward recursion: Q*(t,STOP) = r_stop, Q*(T-1,CONT) =
// r_cont_final, Q*(t,CONT) = max_a' Q*(t+1,a').
struct QTable {
    int horizon = 0;
    // values[h-1][t-1] for t = 1..T-1
    std::vector<std::vector<ActionValues>> values;
};

QTable backward_induction(const TabularSpec& spec);

// Materializes chain h of a tabular spec as a trajectory whose documents
// carry one-hot-able (t, h) indicator tokens.
Trajectory trajectory_from_tabular(const TabularSpec& spec, int h, const std::string& id);

// Per-trajectory upper bound over all stopping times.
double clairvoyant_best(const Trajectory& trajectory);

// Best single stopping step for the whole dataset: stopping at t credits
// r(s_t, STOP), t = T credits the final continue reward. Ties break toward
// the smallest t.
std::pair<int, double> best_fixed_stop(const OfflineDataset& dataset);

}  // namespace stoprag
