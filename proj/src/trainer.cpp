#include "stoprag/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "stoprag/rng.hpp"

namespace stoprag {

namespace {

double replay_value_from_margins(const OfflineDataset& dataset,
                                 const std::vector<std::vector<double>>& margins, double threshold) {
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
        const Trajectory& traj = dataset.trajectories[i];
        double credited = traj.rewards.final_cont();
        for (int t = 1; t <= traj.horizon - 1; ++t) {
            if (margins[i][static_cast<std::size_t>(t - 1)] > threshold) {
                credited = traj.rewards.stop(t);
                break;
            }
        }
        total += credited;
    }
    return total / static_cast<double>(dataset.trajectories.size());
}

}  // namespace

TrainResult train(const OfflineDataset& dataset, const OfflineDataset& valset, const TrainConfig& cfg,
                  const Encoder& encoder, const std::vector<double>& threshold_grid) {
    if (dataset.datapoints.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("train: bad epoch/batch config");

    FeatureTable features = build_feature_table(dataset.trajectories, encoder, cfg.parallel);
    FeatureTable val_features = build_feature_table(valset.trajectories, encoder, cfg.parallel);

    QNetworkParams params = init_params(encoder.dim(), cfg.hidden, cfg.seed);
    if (cfg.objective == Objective::Binary) zero_head(params.cont);
    AdamState opt(params);

    const std::size_t n = dataset.datapoints.size();
    const long steps_per_epoch =
        static_cast<long>((n + static_cast<std::size_t>(cfg.batch_size) - 1) / static_cast<std::size_t>(cfg.batch_size));
    const long total_steps = steps_per_epoch * cfg.epochs;
    const long schedule_total = std::max<long>(1, total_steps - 1);
    LambdaSchedule lambda_sched{cfg.lambda_start, cfg.lambda_end, schedule_total};
    LrSchedule lr_sched{cfg.peak_lr, schedule_total,
                        std::lround(cfg.warmup_ratio * static_cast<double>(total_steps))};

    TrainResult result;
    result.report.steps.reserve(static_cast<std::size_t>(total_steps));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    long step = 0;
    double best_value = -1.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        for (long b = 0; b < steps_per_epoch; ++b) {
            std::vector<BatchItemRef> items;
            std::vector<const FeatureVector*> xs;
            const std::size_t begin = static_cast<std::size_t>(b) * static_cast<std::size_t>(cfg.batch_size);
            const std::size_t end = std::min(begin + static_cast<std::size_t>(cfg.batch_size), n);
            for (std::size_t i = begin; i < end; ++i) {
                const OfflineDatapoint& d = dataset.datapoints[order[i]];
                items.push_back(BatchItemRef{d.traj_index, d.t});
                xs.push_back(&features.at(d.traj_index, d.t));
            }

            const double lambda = lambda_sched.value(step);
            const double lr = lr_sched.value(step);

            // Frozen successor evaluations use the current parameters; the
            // optimizer step below sees them only as constants.
            std::vector<TargetPair> targets =
                batch_targets(dataset, items, cfg.objective, lambda, params, features, cfg.parallel);

            auto [loss_value, grad] = cfg.objective == Objective::Binary
                                          ? batch_bce_loss_grad(params, xs, targets, cfg.parallel)
                                          : batch_loss_grad(params, xs, targets, cfg.parallel);
            if (!std::isfinite(loss_value))
                throw NumericError("train: non-finite loss at step " + std::to_string(step));

            if (cfg.objective == Objective::Binary) zero_head(grad.g.cont);
            optimizer_step(opt, params, grad, lr, cfg.weight_decay);

            result.report.steps.push_back(StepRecord{step, loss_value, lambda, lr});
            ++step;
        }

        result.per_epoch.push_back(params);
        EpochRecord record;
        record.epoch = epoch;
        record.checkpoint_id = "epoch" + std::to_string(epoch);
        if (!valset.trajectories.empty()) {
            auto margins = batch_margins(params, val_features, cfg.parallel);
            double thr_best = threshold_grid.empty() ? 0.0 : threshold_grid.front();
            double val_best = -1.0;
            for (double thr : threshold_grid) {
                double value = replay_value_from_margins(valset, margins, thr);
                if (value > val_best) {
                    val_best = value;
                    thr_best = thr;
                }
            }
            record.val_value = val_best;
            record.val_threshold = thr_best;
        }
        result.report.epochs.push_back(record);

        // Strict improvement required, so ties keep the earliest checkpoint.
        if (record.val_value > best_value) {
            best_value = record.val_value;
            result.best = params;
            result.best_epoch = epoch;
            result.report.selected_checkpoint = record.checkpoint_id;
        }
    }
    return result;
}

double replay_policy_value(const QNetworkParams& params, const Encoder& encoder,
                           const OfflineDataset& dataset, double threshold) {
    if (dataset.trajectories.empty()) throw std::invalid_argument("replay_policy_value: empty dataset");
    FeatureTable features = build_feature_table(dataset.trajectories, encoder, false);
    auto margins = batch_margins(params, features, false);
    return replay_value_from_margins(dataset, margins, threshold);
}

std::pair<double, double> tune_threshold(const QNetworkParams& params, const Encoder& encoder,
                                         const OfflineDataset& valset, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("tune_threshold: empty grid");
    if (valset.trajectories.empty()) throw std::invalid_argument("tune_threshold: empty validation set");
    FeatureTable features = build_feature_table(valset.trajectories, encoder, false);
    auto margins = batch_margins(params, features, false);

    double best_thr = grid.front();
    double best_value = -1.0;
    for (double thr : grid) {
        double value = replay_value_from_margins(valset, margins, thr);
        if (value > best_value) {
            best_value = value;
            best_thr = thr;
        }
    }
    return {best_thr, best_value};
}

std::vector<double> default_threshold_grid(double lo, double hi, int points) {
    if (points < 2) throw std::invalid_argument("default_threshold_grid: need at least 2 points");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    return grid;
}

void write_report_csv(const std::string& path, const TrainReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "step,loss,lambda,lr\n";
    out.precision(17);
    for (const auto& s : report.steps)
        out << s.step << ',' << s.loss << ',' << s.lambda << ',' << s.lr << "\n";
}

json report_summary(const TrainReport& report) {
    json epochs = json::array();
    for (const auto& e : report.epochs)
        epochs.push_back(json{{"epoch", e.epoch},
                              {"val_value", e.val_value},
                              {"val_threshold", e.val_threshold},
                              {"checkpoint", e.checkpoint_id}});
    json j{{"total_steps", report.steps.size()},
           {"selected_checkpoint", report.selected_checkpoint},
           {"epochs", epochs}};
    if (!report.steps.empty()) {
        j["final_loss"] = report.steps.back().loss;
        j["lambda_first"] = report.steps.front().lambda;
        j["lambda_last"] = report.steps.back().lambda;
    }
    return j;
}

}  // namespace stoprag
