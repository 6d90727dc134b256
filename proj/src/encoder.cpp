#include "stoprag/encoder.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "stoprag/rng.hpp"

namespace stoprag {

namespace {

void tokenize_into(const std::string& text, std::vector<std::string>& out) {
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
}

}  // namespace

HashedTokenEncoder::HashedTokenEncoder(int dim, int horizon) : dim_(dim), horizon_(horizon) {
    if (dim_ < 2) throw std::invalid_argument("HashedTokenEncoder: dim must be >= 2");
    if (horizon_ < 1) throw std::invalid_argument("HashedTokenEncoder: horizon must be >= 1");
}

FeatureVector HashedTokenEncoder::encode(const TraceState& state) const {
    FeatureVector x(static_cast<std::size_t>(dim_), 0.0);
    const std::size_t buckets = static_cast<std::size_t>(dim_ - 1);

    std::vector<std::string> tokens;
    tokenize_into(state.question, tokens);
    for (const auto& tok : tokens)
        x[(fnv1a64("q:" + tok)) % buckets] += 1.0;

    tokens.clear();
    for (const auto& step : state.steps)
        for (const auto& doc : step.documents) tokenize_into(doc.content, tokens);
    for (const auto& tok : tokens)
        x[(fnv1a64("d:" + tok)) % buckets] += 1.0;

    double norm_sq = 0.0;
    for (std::size_t i = 0; i < buckets; ++i) norm_sq += x[i] * x[i];
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t i = 0; i < buckets; ++i) x[i] *= inv;
    }
    x[buckets] = static_cast<double>(state.t) / static_cast<double>(horizon_);
    return x;
}

json HashedTokenEncoder::spec() const {
    return json{{"type", "hashed_token"}, {"dim", dim_}, {"horizon", horizon_}};
}

PassthroughEncoder::PassthroughEncoder(int horizon) : horizon_(horizon) {
    if (horizon_ < 1) throw std::invalid_argument("PassthroughEncoder: horizon must be >= 1");
}

FeatureVector PassthroughEncoder::encode(const TraceState& state) const {
    FeatureVector x(static_cast<std::size_t>(dim()), 0.0);
    const std::size_t T = static_cast<std::size_t>(horizon_);

    std::vector<std::string> tokens;
    for (const auto& step : state.steps)
        for (const auto& doc : step.documents) tokenize_into(doc.content, tokens);

    double done = 0.0, total = 0.0;
    for (const auto& tok : tokens) {
        if (tok.rfind("hops", 0) == 0 && tok.size() > 4) {
            int h = 0;
            for (std::size_t i = 4; i < tok.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(tok[i]))) { h = 0; break; }
                h = h * 10 + (tok[i] - '0');
            }
            if (h >= 1 && h <= horizon_) x[static_cast<std::size_t>(h - 1)] += 1.0;
        } else if (tok == "done") {
            done += 1.0;
            total += 1.0;
        } else if (tok == "pending") {
            total += 1.0;
        }
    }

    double hist_sq = 0.0;
    for (std::size_t i = 0; i < T; ++i) hist_sq += x[i] * x[i];
    if (hist_sq > 0.0) {
        double inv = 1.0 / std::sqrt(hist_sq);
        for (std::size_t i = 0; i < T; ++i) x[i] *= inv;
    }
    if (state.t >= 1 && state.t <= horizon_) x[T + static_cast<std::size_t>(state.t - 1)] = 1.0;
    x[2 * T] = total > 0.0 ? done / total : 0.0;
    x[2 * T + 1] = static_cast<double>(state.t) / static_cast<double>(horizon_);
    return x;
}

json PassthroughEncoder::spec() const {
    return json{{"type", "synthetic_passthrough"}, {"horizon", horizon_}};
}

std::unique_ptr<Encoder> make_encoder(const json& spec) {
    const std::string type = spec.at("type").get<std::string>();
    if (type == "hashed_token")
        return std::make_unique<HashedTokenEncoder>(spec.at("dim").get<int>(), spec.at("horizon").get<int>());
    if (type == "synthetic_passthrough")
        return std::make_unique<PassthroughEncoder>(spec.at("horizon").get<int>());
    throw std::invalid_argument("unknown encoder type: " + type);
}

}  // namespace stoprag
