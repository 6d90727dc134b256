#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stoprag/encoder.hpp"
#include "stoprag/targets.hpp"

namespace stoprag {

// One prediction head: a D -> H -> 1 feed-forward map with rectifier hidden
// units and a linear scalar output.
struct HeadParams {
    std::vector<double> w1;  // H x D, row-major
    std::vector<double> b1;  // H
    std::vector<double> w2;  // H
    double b2 = 0.0;
};

// Two-head value network. The heads share the input features but have
// disjoint parameters.
struct QNetworkParams {
    int dim = 0;
    int hidden = 0;
    HeadParams stop;
    HeadParams cont;
};

QNetworkParams init_params(int dim, int hidden, std::uint64_t seed);
void zero_head(HeadParams& head);

// Mutable views over all parameter arrays of one network, in a fixed order.
// Shared by the optimizer, gradient buffers, and checkpoint code.
std::vector<std::span<double>> param_spans(QNetworkParams& p);
std::vector<std::span<const double>> param_spans(const QNetworkParams& p);

ActionValues forward(const QNetworkParams& params, const FeatureVector& x);
// Forward pass of one head, recording hidden activations for backprop.
double head_forward(const HeadParams& head, const FeatureVector& x, std::vector<double>* hidden);

// Sum over the batch of squared errors on both heads.
double loss(const QNetworkParams& params, const std::vector<const FeatureVector*>& xs,
            const std::vector<TargetPair>& targets);

// Gradient buffer with the same shape as the parameters.
struct QNetworkGrad {
    QNetworkParams g;  // reuses the parameter layout; values are gradients
    explicit QNetworkGrad(const QNetworkParams& like);
    void zero();
    void add(const QNetworkGrad& other);
};

// Exact analytic gradient of `loss`; targets are constants (stop-gradient).
QNetworkGrad gradient(const QNetworkParams& params, const std::vector<const FeatureVector*>& xs,
                      const std::vector<TargetPair>& targets);

// Adam moments plus the step counter for bias correction.
struct AdamState {
    QNetworkParams m;
    QNetworkParams v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    explicit AdamState(const QNetworkParams& like);
};

// One AdamW update with decoupled weight decay.
void optimizer_step(AdamState& opt, QNetworkParams& params, const QNetworkGrad& grad, double lr,
                    double weight_decay);

// end + (start-end) * (1 + cos(pi * step / total)) / 2.
double cosine_value(long step, long total, double start, double end);

struct LambdaSchedule {
    double start = 1.0;
    double end = 0.1;
    long total = 1;
    double value(long step) const { return cosine_value(step, total, start, end); }
};

// Linear warmup over the first warmup_steps, then cosine decay peak -> 0.
struct LrSchedule {
    double peak = 1e-3;
    long total = 1;
    long warmup_steps = 0;
    double value(long step) const;
};

json checkpoint_to_json(const QNetworkParams& params, const json& encoder_spec,
                        const json& training_meta);
QNetworkParams checkpoint_from_json(const json& j, json* encoder_spec = nullptr,
                                    json* training_meta = nullptr);
void save_checkpoint(const std::string& path, const QNetworkParams& params,
                     const json& encoder_spec, const json& training_meta);
QNetworkParams load_checkpoint(const std::string& path, json* encoder_spec = nullptr,
                               json* training_meta = nullptr);

}  // namespace stoprag
