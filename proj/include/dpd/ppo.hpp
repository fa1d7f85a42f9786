#pragma once

#include "dpd/learner.hpp"

namespace dpd {

struct PpoConfig {
    std::vector<int> policy_hidden = {64, 64};
    std::vector<int> value_hidden = {64, 64, 64};
    double policy_lr = 3e-4;
    double value_lr = 1e-3;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip = 0.2;
    int epochs = 10;
    int minibatch = 64;
    int rollout_steps = 2048;
    double init_action_std_frac = 0.5;  // initial sigma as a fraction of the half-range
    size_t ring_capacity = 4096;        // recency window storage for distillation
    double final_layer_scale = 1e-2;

    void validate() const;
};

// Generalized advantage estimation over a (possibly multi-episode) segment.
// done masks the bootstrap, done-or-truncated cuts the credit recursion.
struct GaeResult {
    Eigen::VectorXd advantages;             // raw
    Eigen::VectorXd normalized_advantages;  // zero mean, unit variance
    Eigen::VectorXd returns;                // advantages + values
};
GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const Eigen::VectorXd& next_values, const std::vector<bool>& done,
                      const std::vector<bool>& truncated, double gamma, double lambda);

// Clipped-surrogate on-policy learner with a diagonal-Gaussian policy
// (trainable state-independent log-std) and a separate V network.
class PpoLearner : public Learner {
public:
    PpoLearner(const EnvSpec& spec, const PpoConfig& cfg, uint64_t seed);

    const EnvSpec& env_spec() const override { return spec_; }
    Eigen::VectorXd act(const Eigen::VectorXd& observation, bool explore) override;
    double value_estimate(const Eigen::VectorXd& state) override;
    CollectStats collect(ContinuousEnv& env, int n_steps) override;
    LossStats rl_update() override;
    const ReplayBuffer& buffer() const override { return ring_; }
    Network& policy_mean_net() override { return policy_; }
    const Network& policy_mean_net() const override { return policy_; }
    void save(const std::string& path) const override;
    void load(const std::string& path) override;
    uint64_t seed() const override { return seed_; }

    const Eigen::VectorXd& log_std() const { return log_std_; }
    int rollout_size() const { return static_cast<int>(ro_rewards_.size()); }

private:
    Eigen::VectorXd clamp_action(Eigen::VectorXd a) const;
    double log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean) const;

    EnvSpec spec_;
    PpoConfig cfg_;
    uint64_t seed_ = 0;
    Rng rng_;
    Network policy_, value_;
    Optimizer policy_opt_, value_opt_;
    Eigen::VectorXd log_std_;
    // manual Adam state for the log-std vector
    Eigen::VectorXd std_m_, std_v_;
    long std_t_ = 0;

    ReplayBuffer ring_;

    // rollout buffers (cleared by rl_update)
    std::vector<Eigen::VectorXd> ro_obs_, ro_actions_, ro_next_obs_;
    std::vector<double> ro_rewards_, ro_logp_;
    std::vector<bool> ro_done_, ro_truncated_;

    Eigen::VectorXd obs_;
    double episode_return_ = 0.0;
    bool episode_active_ = false;
    bool env_seeded_ = false;
    uint64_t env_seed_ = 0;
};

}  // namespace dpd
