// Compares the serial reference paths against the OpenMP batch kernels on a
// synthetic workload: feature encoding, target construction, and loss/grad.
//
//   ./stoprag_bench [trajectories] [dim] [hidden] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stoprag/batch_kernels.hpp"
#include "stoprag/rng.hpp"
#include "stoprag/synth.hpp"
#include "stoprag/trainer.hpp"

using namespace stoprag;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename Fn>
double time_best_ms(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const int n_traj = argc > 1 ? std::atoi(argv[1]) : 512;
    const int dim = argc > 2 ? std::atoi(argv[2]) : 256;
    const int hidden = argc > 3 ? std::atoi(argv[3]) : 128;
    const int repeats = argc > 4 ? std::atoi(argv[4]) : 5;

    SynthSpec spec;
    spec.horizon = 5;
    spec.hop_weights = {1, 1, 1, 1};
    spec.rho = 0.25;
    spec.seed = 7;
    auto pipeline = synth_pipeline(spec);

    std::vector<Trajectory> trajs;
    for (int i = 0; i < n_traj; ++i) {
        std::string qid = "bench-" + std::to_string(i);
        trajs.push_back(rollout(*pipeline, synth_question_text(qid), synth_gold_answer(qid),
                                EpisodeConfig{spec.horizon, 1.0}, RolloutOptions{}, derive_seed(7, "b", i), qid));
    }
    OfflineDataset dataset = build_dataset(std::move(trajs));

    HashedTokenEncoder encoder(dim, spec.horizon);
    QNetworkParams params = init_params(dim, hidden, 11);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("workload: %d trajectories, %zu datapoints, D=%d, H=%d\n", n_traj,
                dataset.datapoints.size(), dim, hidden);

    double enc_serial = time_best_ms(repeats, [&] { build_feature_table(dataset.trajectories, encoder, false); });
    double enc_par = time_best_ms(repeats, [&] { build_feature_table(dataset.trajectories, encoder, true); });
    std::printf("%-22s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", "encode features",
                enc_serial, enc_par, enc_serial / enc_par);

    FeatureTable features = build_feature_table(dataset.trajectories, encoder, true);
    std::vector<BatchItemRef> items;
    std::vector<const FeatureVector*> xs;
    for (const auto& d : dataset.datapoints) {
        items.push_back(BatchItemRef{d.traj_index, d.t});
        xs.push_back(&features.at(d.traj_index, d.t));
    }

    double tgt_serial = time_best_ms(repeats, [&] {
        batch_targets(dataset, items, Objective::QLambda, 0.6, params, features, false);
    });
    double tgt_par = time_best_ms(repeats, [&] {
        batch_targets(dataset, items, Objective::QLambda, 0.6, params, features, true);
    });
    std::printf("%-22s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", "q-lambda targets",
                tgt_serial, tgt_par, tgt_serial / tgt_par);

    auto targets = batch_targets(dataset, items, Objective::QLambda, 0.6, params, features, true);
    double grad_serial = time_best_ms(repeats, [&] { batch_loss_grad(params, xs, targets, false); });
    double grad_par = time_best_ms(repeats, [&] { batch_loss_grad(params, xs, targets, true); });
    std::printf("%-22s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", "loss + gradient",
                grad_serial, grad_par, grad_serial / grad_par);

    // Reference ops from qnet; slower path retained for testing.
    double ref = time_best_ms(repeats, [&] {
        loss(params, xs, targets);
        gradient(params, xs, targets);
    });
    std::printf("%-22s serial %8.2f ms (two passes)\n", "reference loss+grad", ref);
    return 0;
}
