#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "stoprag/mdp.hpp"

namespace stoprag {

enum class ScoreId { EM, F1, ACC };

ScoreId score_id_from_string(const std::string& name);
const char* to_string(ScoreId id);

// SQuAD-style normalization: lowercase, punctuation treated as a token
// separator, articles (a/an/the) dropped, whitespace split.
std::vector<std::string> normalize_answer(const std::string& text);

// 1 iff the normalized token sequences are identical.
double exact_match(const std::string& pred, const std::string& gold);

// Token-multiset F1. Both sides normalizing to empty scores 1; a single
// empty side or zero overlap scores 0.
double f1_score(const std::string& pred, const std::string& gold);

// 1 iff the normalized gold tokens occur as a contiguous subsequence of the
// normalized prediction tokens.
double accuracy_contains(const std::string& pred, const std::string& gold);

double score(ScoreId id, const std::string& pred, const std::string& gold);

// Document-level precision/recall. Retrieved ids are deduplicated
// (first-occurrence order) before computing. Empty gold set is invalid.
std::pair<double, double> retrieval_metrics(const std::vector<std::string>& retrieved_ids,
                                            const std::set<std::string>& gold_ids);

// Draws prediction i for a state; must be deterministic in (state, trial, seed).
using AnswerSampler = std::function<std::string(const TraceState&, int trial, std::uint64_t seed)>;

// Mean of S over N independent answer trials against the state's gold answer.
double estimate_reward(const TraceState& state, const AnswerSampler& sampler, int trials,
                       ScoreId score_fn, std::uint64_t seed);

}  // namespace stoprag
