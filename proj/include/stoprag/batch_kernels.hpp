#pragma once

#include <cstddef>
#include <vector>

#include "stoprag/dataset.hpp"
#include "stoprag/encoder.hpp"
#include "stoprag/qnet.hpp"

namespace stoprag {

// Precomputed features of every decision state: prefix[traj][t-1] for
// t = 1..T-1. All batch kernels read states through this table.
struct FeatureTable {
    std::vector<std::vector<FeatureVector>> prefix;

    const FeatureVector& at(std::size_t traj, int t) const {
        return prefix[traj][static_cast<std::size_t>(t - 1)];
    }
};

FeatureTable build_feature_table(const std::vector<Trajectory>& trajectories, const Encoder& encoder,
                                 bool parallel = true);

struct BatchItemRef {
    std::size_t traj = 0;
    int t = 0;
};

// Learning targets for a batch of datapoints. Frozen successor evaluations
// come from `params` over the feature table (single snapshot, no gradient).
// For the BINARY objective target_stop carries the 0/1 label.
// Serial and parallel paths produce bit-identical results; the parallel path
// fans out over items (each output slot is written independently).
std::vector<TargetPair> batch_targets(const OfflineDataset& dataset, const std::vector<BatchItemRef>& items,
                                      Objective objective, double lambda, const QNetworkParams& params,
                                      const FeatureTable& features, bool parallel);

// Summed squared-error loss and its gradient over a batch. Work is split into
// fixed-size blocks; block partials are reduced in index order, so results do
// not depend on the thread count.
std::pair<double, QNetworkGrad> batch_loss_grad(const QNetworkParams& params,
                                                const std::vector<const FeatureVector*>& xs,
                                                const std::vector<TargetPair>& targets, bool parallel);

// Binary-cross-entropy counterpart for the BINARY objective: a sigmoid on the
// stop-head logit against the 0/1 label in target_stop; the cont head is
// untouched.
std::pair<double, QNetworkGrad> batch_bce_loss_grad(const QNetworkParams& params,
                                                    const std::vector<const FeatureVector*>& xs,
                                                    const std::vector<TargetPair>& targets, bool parallel);

// Margin q_stop - q_cont at every decision state of every trajectory;
// margins[traj][t-1] for t = 1..T-1.
std::vector<std::vector<double>> batch_margins(const QNetworkParams& params, const FeatureTable& features,
                                               bool parallel);

}  // namespace stoprag
