#include "stoprag/targets.hpp"

#include <stdexcept>

namespace stoprag {

namespace {

void check_decision_step(const Trajectory& traj, int t) {
    if (t < 1 || t > traj.horizon - 1)
        throw std::out_of_range("target: t must lie in 1..T-1");
}

}  // namespace

Objective objective_from_string(const std::string& name) {
    if (name == "QLAMBDA") return Objective::QLambda;
    if (name == "MC") return Objective::MonteCarlo;
    if (name == "Q0") return Objective::QZero;
    if (name == "BINARY") return Objective::Binary;
    throw std::invalid_argument("unknown objective: " + name);
}

const char* to_string(Objective o) {
    switch (o) {
        case Objective::QLambda: return "QLAMBDA";
        case Objective::MonteCarlo: return "MC";
        case Objective::QZero: return "Q0";
        case Objective::Binary: return "BINARY";
    }
    return "?";
}

double n_step_target(const Trajectory& traj, int t, Action a, int n, const FrozenEvaluator& frozen) {
    check_decision_step(traj, t);
    const int T = traj.horizon;
    if (n < 1 || n > T - t) throw std::out_of_range("n_step_target: n must lie in 1..T-t");

    if (a == Action::Stop) return traj.rewards.stop(t);

    if (n == T - t) {
        double best = traj.rewards.final_cont();
        for (int k = 1; k <= T - t - 1; ++k) best = std::max(best, traj.rewards.stop(t + k));
        return best;
    }

    if (!frozen) throw std::invalid_argument("n_step_target: bootstrapped CONT target needs a frozen evaluator");
    ActionValues tail = frozen(make_prefix(traj, t + n));
    double best = tail.max();
    for (int k = 1; k <= n - 1; ++k) best = std::max(best, traj.rewards.stop(t + k));
    return best;
}

double q_lambda_target(const Trajectory& traj, int t, Action a, double lambda,
                       const FrozenEvaluator& frozen) {
    check_decision_step(traj, t);
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::out_of_range("q_lambda_target: lambda outside [0,1]");
    const int T = traj.horizon;

    if (a == Action::Stop) return traj.rewards.stop(t);
    if (t == T - 1) return traj.rewards.final_cont();

    // weight starts at lambda^0 == 1, also at lambda == 0, so the n=1 term
    // always carries (1-lambda) and the tail term lambda^{T-t-1}.
    double total = 0.0;
    double weight = 1.0;
    for (int n = 1; n <= T - t - 1; ++n) {
        total += (1.0 - lambda) * weight * n_step_target(traj, t, a, n, frozen);
        weight *= lambda;
    }
    total += weight * n_step_target(traj, t, a, T - t, frozen);
    return total;
}

double mc_target(const Trajectory& traj, int t, Action a) {
    check_decision_step(traj, t);
    if (a == Action::Stop) return traj.rewards.stop(t);
    const int T = traj.horizon;
    double best = traj.rewards.final_cont();
    for (int k = 1; k <= T - t - 1; ++k) best = std::max(best, traj.rewards.stop(t + k));
    return best;
}

double q0_target(const Trajectory& traj, int t, Action a, const FrozenEvaluator& frozen) {
    return n_step_target(traj, t, a, 1, frozen);
}

int binary_label(const Trajectory& traj, int t) {
    return mc_target(traj, t, Action::Stop) >= mc_target(traj, t, Action::Cont) ? 1 : 0;
}

namespace {

// r(s_u, a) over the trajectory: CONT pays 0 except at the last decision step.
double step_reward(const Trajectory& traj, int u, Action a) {
    if (a == Action::Stop) return traj.rewards.stop(u);
    return u == traj.horizon - 1 ? traj.rewards.final_cont() : 0.0;
}

// Qhat^(m)(s_u, a) along the sampled chain. Terminal successors (TERM after
// STOP, or s_T) carry value 0 at every depth.
double backup(const Trajectory& traj, int u, Action a, int m, const FrozenEvaluator& frozen,
              double gamma) {
    if (m == 0) {
        if (!frozen) throw std::invalid_argument("recursive_backup_oracle: frozen evaluator required at depth 0");
        ActionValues v = frozen(make_prefix(traj, u));
        return a == Action::Stop ? v.q_stop : v.q_cont;
    }
    double r = step_reward(traj, u, a);
    if (a == Action::Stop) return r;  // successor is the absorbing terminal state
    int next = u + 1;
    if (next >= traj.horizon) return r;  // s_T is terminal
    double stop_tail = backup(traj, next, Action::Stop, m - 1, frozen, gamma);
    double cont_tail = backup(traj, next, Action::Cont, m - 1, frozen, gamma);
    return r + gamma * std::max(stop_tail, cont_tail);
}

}  // namespace

double recursive_backup_oracle(const Trajectory& traj, int t, Action a, int n,
                               const FrozenEvaluator& frozen, double discount) {
    check_decision_step(traj, t);
    if (n < 0 || n > traj.horizon - t) throw std::out_of_range("recursive_backup_oracle: n must lie in 0..T-t");
    if (!(discount > 0.0 && discount <= 1.0))
        throw std::out_of_range("recursive_backup_oracle: discount must lie in (0,1]");
    return backup(traj, t, a, n, frozen, discount);
}

}  // namespace stoprag
