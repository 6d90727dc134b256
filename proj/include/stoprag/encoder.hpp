#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stoprag/mdp.hpp"

namespace stoprag {

using FeatureVector = std::vector<double>;

// Maps a trace state to a fixed-width feature vector. Implementations must be
// deterministic and must not read the gold answer, intermediate queries, or
// intermediate answers.
class Encoder {
public:
    virtual ~Encoder() = default;
    virtual int dim() const = 0;
    virtual FeatureVector encode(const TraceState& state) const = 0;
    virtual json spec() const = 0;
};

// Feature-hashing bag of words over the question and all retrieved document
// contents. Question and document tokens hash into the same bucket array but
// with distinct segment salts. Buckets are L2-normalized, then t/T is
// appended as the last feature.
class HashedTokenEncoder : public Encoder {
public:
    HashedTokenEncoder(int dim, int horizon);
    int dim() const override { return dim_; }
    FeatureVector encode(const TraceState& state) const override;
    json spec() const override;

private:
    int dim_;
    int horizon_;
};

// Reads the structured indicator tokens emitted by the synthetic pipeline
// ("hops<k>", "done"/"pending") instead of hashing free text. Layout:
// [hop histogram (T), one-hot t (T), done fraction, t/T].
class PassthroughEncoder : public Encoder {
public:
    explicit PassthroughEncoder(int horizon);
    int dim() const override { return 2 * horizon_ + 2; }
    FeatureVector encode(const TraceState& state) const override;
    json spec() const override;

private:
    int horizon_;
};

std::unique_ptr<Encoder> make_encoder(const json& spec);

}  // namespace stoprag
