#pragma once

#include <array>
#include <deque>
#include <optional>

#include "dpd/learner.hpp"
#include "dpd/mdp.hpp"

namespace dpd {

struct DpdConfig {
    double alpha = 1.0;           // confidence level on the value gap
    int distill_window = 1000;    // most recent peer transitions considered
    int distill_batch = 64;
    double distill_lr = 1e-4;
    int distill_updates_per_iter = 1;
    double weight_clip_min = std::exp(-5.0);
    double weight_clip_max = std::exp(5.0);
    bool xi_normalization = true;  // scale xi by its running std before exp
    DistanceMetric distance = DistanceMetric::squared_error;

    void validate() const;
};

struct DistillStats {
    bool skipped = false;  // peer window too small; recorded, not an error
    double mean_xi = 0.0;
    double mean_weight = 0.0;
    double loss = 0.0;
    double fraction_positive_xi = 0.0;
    long clamped_weights = 0;  // clamped or non-finite before clamping
};

struct IterationStats {
    CollectStats collect1, collect2;
    LossStats rl1, rl2;
    DistillStats distill1, distill2;
};

// w_i = clamp(exp(alpha * xi_hat_i), wmin, wmax); non-finite inputs clamp to
// the ceiling and count as clamped.
Eigen::VectorXd distill_weights(const Eigen::VectorXd& xi_hat, double alpha, double w_min,
                                double w_max, long* clamped = nullptr);

// Hard-indicator objective of the disadvantageous distillation, the alpha ->
// infinity mask shape: mean over states of D(a_self, a_peer) * [xi > 0].
double indicator_distill_loss(Learner& self, Learner& peer,
                              const std::vector<Eigen::VectorXd>& states,
                              const std::vector<double>& values_self,
                              const std::vector<double>& values_peer, DistanceMetric metric);

// (value_estimate_l1(s), value_estimate_l2(s)) per probe state.
std::vector<std::pair<double, double>> diagnostics_qvalues(
    Learner& l1, Learner& l2, const std::vector<Eigen::VectorXd>& probe_states);

// ||act(l1, s) - act(l2, s)||_2 per probe state, deterministic actions.
std::vector<double> diagnostics_action_distance(
    Learner& l1, Learner& l2, const std::vector<Eigen::VectorXd>& probe_states);

// The alternating dual-distillation loop: per iteration each learner collects,
// runs its own RL objective, then takes distillation steps toward its peer at
// the peer's recent states, weighted by exp(alpha * xi). Strictly sequential;
// the orchestrator owns the distillation optimizers and the xi running scale.
class DpdOrchestrator {
public:
    DpdOrchestrator(Learner& l1, Learner& l2, ContinuousEnv& env1, ContinuousEnv& env2,
                    DpdConfig cfg, uint64_t distill_seed);

    // Algorithm: collect(l1), rl(l1), distill(l1 <- l2), then the mirror.
    IterationStats iterate(int collect_steps_per_learner);

    // One distillation step for learner `self_index` (0 or 1) against its
    // peer; peer parameters are treated as frozen constants.
    DistillStats distill_update(int self_index);

    Learner& learner(int i) { return i == 0 ? l1_ : l2_; }
    const DpdConfig& config() const { return cfg_; }

private:
    struct DirectionState {
        std::optional<Optimizer> opt;
        Rng sample_rng{0};
        std::deque<std::array<double, 3>> xi_batches;  // (n, sum, sumsq) of recent batches
        double pooled_std(double n_new, double sum_new, double sumsq_new);
    };

    Learner& l1_;
    Learner& l2_;
    ContinuousEnv& env1_;
    ContinuousEnv& env2_;
    DpdConfig cfg_;
    DirectionState dir_[2];
};

}  // namespace dpd
