#include "stoprag/batch_kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "stoprag/targets.hpp"

namespace stoprag {

namespace {

constexpr std::size_t kGradBlock = 32;

}  // namespace

FeatureTable build_feature_table(const std::vector<Trajectory>& trajectories, const Encoder& encoder,
                                 bool parallel) {
    FeatureTable table;
    table.prefix.resize(trajectories.size());
    for (std::size_t i = 0; i < trajectories.size(); ++i)
        table.prefix[i].resize(static_cast<std::size_t>(std::max(0, trajectories[i].horizon - 1)));

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(trajectories.size()); ++i) {
        const Trajectory& traj = trajectories[static_cast<std::size_t>(i)];
        for (int t = 1; t <= traj.horizon - 1; ++t)
            table.prefix[static_cast<std::size_t>(i)][static_cast<std::size_t>(t - 1)] =
                encoder.encode(make_prefix(traj, t));
    }
    return table;
}

std::vector<TargetPair> batch_targets(const OfflineDataset& dataset, const std::vector<BatchItemRef>& items,
                                      Objective objective, double lambda, const QNetworkParams& params,
                                      const FeatureTable& features, bool parallel) {
    std::vector<TargetPair> out(items.size());

#pragma omp parallel for schedule(dynamic, 16) if (parallel)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(items.size()); ++idx) {
        const BatchItemRef& item = items[static_cast<std::size_t>(idx)];
        const Trajectory& traj = dataset.trajectories[item.traj];
        FrozenEvaluator frozen = [&](const TraceState& s) {
            return forward(params, features.at(item.traj, s.t));
        };
        TargetPair pair;
        switch (objective) {
            case Objective::QLambda:
                pair.target_stop = q_lambda_target(traj, item.t, Action::Stop, lambda, frozen);
                pair.target_cont = q_lambda_target(traj, item.t, Action::Cont, lambda, frozen);
                break;
            case Objective::MonteCarlo:
                pair.target_stop = mc_target(traj, item.t, Action::Stop);
                pair.target_cont = mc_target(traj, item.t, Action::Cont);
                break;
            case Objective::QZero:
                pair.target_stop = q0_target(traj, item.t, Action::Stop, frozen);
                pair.target_cont = q0_target(traj, item.t, Action::Cont, frozen);
                break;
            case Objective::Binary:
                pair.target_stop = static_cast<double>(binary_label(traj, item.t));
                pair.target_cont = 0.0;
                break;
        }
        out[static_cast<std::size_t>(idx)] = pair;
    }
    return out;
}

namespace {

void check_batch(const std::vector<const FeatureVector*>& xs, const std::vector<TargetPair>& targets) {
    if (xs.empty()) throw std::invalid_argument("batch kernel: empty batch");
    if (xs.size() != targets.size()) throw std::invalid_argument("batch kernel: batch size mismatch");
}

// Squared-error contribution of one example, accumulated into grad.
double accumulate_sq(const QNetworkParams& params, const FeatureVector& x, const TargetPair& target,
                     QNetworkGrad& grad, std::vector<double>& hidden) {
    double ys = head_forward(params.stop, x, &hidden);
    double ds = ys - target.target_stop;
    {
        const std::size_t H = params.stop.b1.size(), D = x.size();
        double dy = 2.0 * ds;
        grad.g.stop.b2 += dy;
        for (std::size_t j = 0; j < H; ++j) {
            grad.g.stop.w2[j] += dy * hidden[j];
            if (hidden[j] > 0.0) {
                double dpre = dy * params.stop.w2[j];
                grad.g.stop.b1[j] += dpre;
                double* row = grad.g.stop.w1.data() + j * D;
                for (std::size_t i = 0; i < D; ++i) row[i] += dpre * x[i];
            }
        }
    }
    double yc = head_forward(params.cont, x, &hidden);
    double dc = yc - target.target_cont;
    {
        const std::size_t H = params.cont.b1.size(), D = x.size();
        double dy = 2.0 * dc;
        grad.g.cont.b2 += dy;
        for (std::size_t j = 0; j < H; ++j) {
            grad.g.cont.w2[j] += dy * hidden[j];
            if (hidden[j] > 0.0) {
                double dpre = dy * params.cont.w2[j];
                grad.g.cont.b1[j] += dpre;
                double* row = grad.g.cont.w1.data() + j * D;
                for (std::size_t i = 0; i < D; ++i) row[i] += dpre * x[i];
            }
        }
    }
    return ds * ds + dc * dc;
}

// Stable BCE on the stop-head logit; label is target_stop.
double accumulate_bce(const QNetworkParams& params, const FeatureVector& x, const TargetPair& target,
                      QNetworkGrad& grad, std::vector<double>& hidden) {
    double z = head_forward(params.stop, x, &hidden);
    double y = target.target_stop;
    double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    double sig = 1.0 / (1.0 + std::exp(-z));
    double dy = sig - y;
    const std::size_t H = params.stop.b1.size(), D = x.size();
    grad.g.stop.b2 += dy;
    for (std::size_t j = 0; j < H; ++j) {
        grad.g.stop.w2[j] += dy * hidden[j];
        if (hidden[j] > 0.0) {
            double dpre = dy * params.stop.w2[j];
            grad.g.stop.b1[j] += dpre;
            double* row = grad.g.stop.w1.data() + j * D;
            for (std::size_t i = 0; i < D; ++i) row[i] += dpre * x[i];
        }
    }
    return loss;
}

template <typename AccumulateFn>
std::pair<double, QNetworkGrad> blocked_reduce(const QNetworkParams& params,
                                               const std::vector<const FeatureVector*>& xs,
                                               const std::vector<TargetPair>& targets, bool parallel,
                                               AccumulateFn accumulate) {
    check_batch(xs, targets);
    const std::size_t n = xs.size();
    const std::size_t blocks = (n + kGradBlock - 1) / kGradBlock;

    std::vector<QNetworkGrad> partial_grads(blocks, QNetworkGrad(params));
    std::vector<double> partial_losses(blocks, 0.0);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        std::vector<double> hidden;
        const std::size_t begin = static_cast<std::size_t>(b) * kGradBlock;
        const std::size_t end = std::min(begin + kGradBlock, n);
        double local = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            local += accumulate(params, *xs[i], targets[i], partial_grads[static_cast<std::size_t>(b)], hidden);
        partial_losses[static_cast<std::size_t>(b)] = local;
    }

    // Block partials combine in index order regardless of thread count.
    double total = 0.0;
    QNetworkGrad grad(params);
    for (std::size_t b = 0; b < blocks; ++b) {
        total += partial_losses[b];
        grad.add(partial_grads[b]);
    }
    return {total, std::move(grad)};
}

}  // namespace

std::pair<double, QNetworkGrad> batch_loss_grad(const QNetworkParams& params,
                                                const std::vector<const FeatureVector*>& xs,
                                                const std::vector<TargetPair>& targets, bool parallel) {
    return blocked_reduce(params, xs, targets, parallel, accumulate_sq);
}

std::pair<double, QNetworkGrad> batch_bce_loss_grad(const QNetworkParams& params,
                                                    const std::vector<const FeatureVector*>& xs,
                                                    const std::vector<TargetPair>& targets, bool parallel) {
    return blocked_reduce(params, xs, targets, parallel, accumulate_bce);
}

std::vector<std::vector<double>> batch_margins(const QNetworkParams& params, const FeatureTable& features,
                                               bool parallel) {
    std::vector<std::vector<double>> margins(features.prefix.size());
    for (std::size_t i = 0; i < features.prefix.size(); ++i) margins[i].resize(features.prefix[i].size());

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(features.prefix.size()); ++i) {
        for (std::size_t k = 0; k < features.prefix[static_cast<std::size_t>(i)].size(); ++k) {
            ActionValues q = forward(params, features.prefix[static_cast<std::size_t>(i)][k]);
            margins[static_cast<std::size_t>(i)][k] = q.q_stop - q.q_cont;
        }
    }
    return margins;
}

}  // namespace stoprag
