#include "stoprag/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

#include "stoprag/rng.hpp"

namespace stoprag {

ScoreId score_id_from_string(const std::string& name) {
    if (name == "EM") return ScoreId::EM;
    if (name == "F1") return ScoreId::F1;
    if (name == "ACC") return ScoreId::ACC;
    throw std::invalid_argument("unknown score function: " + name);
}

const char* to_string(ScoreId id) {
    switch (id) {
        case ScoreId::EM: return "EM";
        case ScoreId::F1: return "F1";
        case ScoreId::ACC: return "ACC";
    }
    return "?";
}

std::vector<std::string> normalize_answer(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    std::erase_if(tokens, [](const std::string& t) { return t == "a" || t == "an" || t == "the"; });
    return tokens;
}

double exact_match(const std::string& pred, const std::string& gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1.0 : 0.0;
}

double f1_score(const std::string& pred, const std::string& gold) {
    auto p = normalize_answer(pred);
    auto g = normalize_answer(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;

    std::unordered_map<std::string, int> gold_counts;
    for (const auto& t : g) ++gold_counts[t];
    int overlap = 0;
    for (const auto& t : p) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

double accuracy_contains(const std::string& pred, const std::string& gold) {
    auto p = normalize_answer(pred);
    auto g = normalize_answer(gold);
    if (g.empty()) return 1.0;  // degenerate: empty needle is contained
    if (g.size() > p.size()) return 0.0;
    auto it = std::search(p.begin(), p.end(), g.begin(), g.end());
    return it != p.end() ? 1.0 : 0.0;
}

double score(ScoreId id, const std::string& pred, const std::string& gold) {
    switch (id) {
        case ScoreId::EM: return exact_match(pred, gold);
        case ScoreId::F1: return f1_score(pred, gold);
        case ScoreId::ACC: return accuracy_contains(pred, gold);
    }
    throw std::invalid_argument("bad ScoreId");
}

std::pair<double, double> retrieval_metrics(const std::vector<std::string>& retrieved_ids,
                                            const std::set<std::string>& gold_ids) {
    if (gold_ids.empty()) throw std::invalid_argument("retrieval_metrics: empty gold set");
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (const auto& id : retrieved_ids)
        if (seen.insert(id).second) unique.push_back(id);

    std::size_t hits = 0;
    for (const auto& id : unique)
        if (gold_ids.count(id)) ++hits;

    double precision = unique.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(unique.size());
    double recall = static_cast<double>(hits) / static_cast<double>(gold_ids.size());
    return {precision, recall};
}

double estimate_reward(const TraceState& state, const AnswerSampler& sampler, int trials,
                       ScoreId score_fn, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("estimate_reward: trials must be >= 1");
    if (!state.gold_answer) throw std::invalid_argument("estimate_reward: state has no gold answer");
    double total = 0.0;
    for (int i = 0; i < trials; ++i) {
        std::string pred = sampler(state, i, derive_seed(seed, "trial", static_cast<std::uint64_t>(i)));
        total += score(score_fn, pred, *state.gold_answer);
    }
    return total / static_cast<double>(trials);
}

}  // namespace stoprag
