#pragma once

#include <functional>

#include "stoprag/mdp.hpp"

namespace stoprag {

struct ActionValues {
    double q_stop = 0.0;
    double q_cont = 0.0;
    double max() const { return q_stop > q_cont ? q_stop : q_cont; }
};

// Network evaluation under a stop-gradient contract: values come from a single
// parameter snapshot and contribute nothing to any gradient path. An empty
// function means "no evaluator available".
using FrozenEvaluator = std::function<ActionValues(const TraceState&)>;

struct TargetPair {
    double target_stop = 0.0;
    double target_cont = 0.0;
};

enum class Objective { QLambda, MonteCarlo, QZero, Binary };

Objective objective_from_string(const std::string& name);
const char* to_string(Objective o);

// n-step backup specialized to the STOP/CONT tree, discount fixed to 1:
//   STOP: r(s_t, STOP) for every n.
//   CONT, n < T-t: max over realized stop rewards r(s_{t+1..t+n-1}, STOP) and
//                  both frozen values at s_{t+n}.
//   CONT, n = T-t: max over r(s_{t+1..T-1}, STOP) and r(s_{T-1}, CONT).
// Requires 1 <= t <= T-1 and 1 <= n <= T-t; the frozen evaluator is required
// only for the bootstrapped CONT case.
double n_step_target(const Trajectory& traj, int t, Action a, int n, const FrozenEvaluator& frozen);

// Forward-view Q(lambda): (1-l) sum_{n=1}^{T-t-1} l^{n-1} Qhat^(n)
//                          + l^{T-t-1} Qhat^(T-t), collapsing to
// r(s_{T-1}, CONT) at the last decision step. lambda must lie in [0,1].
double q_lambda_target(const Trajectory& traj, int t, Action a, double lambda,
                       const FrozenEvaluator& frozen);

// Monte Carlo target: the n = T-t backup; needs no network.
double mc_target(const Trajectory& traj, int t, Action a);

// One-step TD target: the n = 1 backup (equals q_lambda at lambda = 0).
double q0_target(const Trajectory& traj, int t, Action a, const FrozenEvaluator& frozen);

// 1 iff the Monte Carlo stop estimate is >= the continue estimate.
int binary_label(const Trajectory& traj, int t);

// Literal recursion Qhat^(0) = frozen, Qhat^(n) = r + gamma * max_a'
// Qhat^(n-1)(s', a'), evaluated over the trajectory's sampled transitions.
// Supports general discount in (0,1] and n = 0; with gamma = 1 it must agree
// with n_step_target. Kept independent of the closed forms above.
double recursive_backup_oracle(const Trajectory& traj, int t, Action a, int n,
                               const FrozenEvaluator& frozen, double discount);

}  // namespace stoprag
