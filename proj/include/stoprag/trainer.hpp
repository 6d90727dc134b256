#pragma once

#include <string>
#include <vector>

#include "stoprag/batch_kernels.hpp"
#include "stoprag/dataset.hpp"
#include "stoprag/encoder.hpp"
#include "stoprag/qnet.hpp"

namespace stoprag {

// Non-finite loss or other numeric breakdown during training.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    Objective objective = Objective::QLambda;
    int epochs = 3;
    int batch_size = 128;
    int hidden = 256;
    double peak_lr = 1e-3;
    double warmup_ratio = 0.1;
    double weight_decay = 0.01;
    double lambda_start = 1.0;
    double lambda_end = 0.1;
    std::uint64_t seed = 0;
    bool parallel = true;
};

struct StepRecord {
    long step = 0;
    double loss = 0.0;
    double lambda = 0.0;
    double lr = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    double val_value = 0.0;
    double val_threshold = 0.0;
    std::string checkpoint_id;
};

struct TrainReport {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    std::string selected_checkpoint;
};

struct TrainResult {
    QNetworkParams best;
    int best_epoch = 0;
    std::vector<QNetworkParams> per_epoch;
    TrainReport report;
};

// Offline training on frozen Q(lambda)-style targets. Per batch: evaluate the
// current network on successor states under stop-gradient, build targets for
// the configured objective at the current lambda, take one optimizer step on
// the summed loss, then advance the lambda and learning-rate schedules (one
// schedule tick per optimizer step). Checkpoint selection replays the margin
// policy on the validation set with a per-checkpoint tuned threshold.
TrainResult train(const OfflineDataset& dataset, const OfflineDataset& valset, const TrainConfig& cfg,
                  const Encoder& encoder, const std::vector<double>& threshold_grid);

// Mean credited reward of the margin policy replayed over stored
// trajectories: first t with margin > threshold credits r(s_t, STOP),
// otherwise the final continue reward.
double replay_policy_value(const QNetworkParams& params, const Encoder& encoder,
                           const OfflineDataset& dataset, double threshold);

// Grid point maximizing replay_policy_value; ties break toward the smallest
// threshold.
std::pair<double, double> tune_threshold(const QNetworkParams& params, const Encoder& encoder,
                                         const OfflineDataset& valset, const std::vector<double>& grid);

std::vector<double> default_threshold_grid(double lo = -1.0, double hi = 1.0, int points = 41);

void write_report_csv(const std::string& path, const TrainReport& report);
json report_summary(const TrainReport& report);

}  // namespace stoprag
