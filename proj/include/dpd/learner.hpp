#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dpd/env.hpp"
#include "dpd/net.hpp"
#include "dpd/replay.hpp"

namespace dpd {

struct LossStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    long updates = 0;
};

struct CollectStats {
    int steps = 0;
    int episodes_finished = 0;
};

// Uniform surface over the two learner families. A learner is single-owner
// mutable state; the dual-distillation loop reads its peer exclusively
// through this interface.
class Learner {
public:
    virtual ~Learner() = default;

    virtual const EnvSpec& env_spec() const = 0;

    // Deterministic policy action, plus exploration (noise or sampling) when
    // explore is set. Always within the action bounds.
    virtual Eigen::VectorXd act(const Eigen::VectorXd& observation, bool explore) = 0;

    // The state value used for the peer-advantage signal: Q(s, mu(s)) for the
    // deterministic-actor family, the V-network output for the on-policy one.
    virtual double value_estimate(const Eigen::VectorXd& state) = 0;

    // Runs exactly n_steps environment steps, storing transitions with
    // increasing insert_index. The learner must keep being paired with the
    // same environment instance between calls.
    virtual CollectStats collect(ContinuousEnv& env, int n_steps) = 0;

    // One round of the family's own RL objective over collected data.
    virtual LossStats rl_update() = 0;

    // Recency-ordered transition storage, the distillation window source.
    virtual const ReplayBuffer& buffer() const = 0;

    // The network producing the (mean) action; the distillation step trains it.
    virtual Network& policy_mean_net() = 0;
    virtual const Network& policy_mean_net() const = 0;

    virtual void save(const std::string& path) const = 0;
    virtual void load(const std::string& path) = 0;

    // construction seed; distillation derives per-direction sample streams
    // from it so that swapping the two learners mirrors exactly
    virtual uint64_t seed() const = 0;

    long total_env_steps() const { return total_env_steps_; }
    const std::vector<double>& episode_returns() const { return episode_returns_; }

    // mean over the last `window` finished episodes, NaN-free: 0 when empty
    double mean_recent_return(size_t window = 10) const {
        if (episode_returns_.empty()) return 0.0;
        const size_t n = std::min(window, episode_returns_.size());
        double s = 0.0;
        for (size_t i = episode_returns_.size() - n; i < episode_returns_.size(); ++i)
            s += episode_returns_[i];
        return s / static_cast<double>(n);
    }

protected:
    long total_env_steps_ = 0;
    std::vector<double> episode_returns_;
};

}  // namespace dpd
