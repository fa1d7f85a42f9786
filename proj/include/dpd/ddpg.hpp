#pragma once

#include <memory>
#include <span>

#include "dpd/learner.hpp"

namespace dpd {

struct DdpgConfig {
    std::vector<int> actor_hidden = {64, 64};
    std::vector<int> critic_hidden = {64, 64, 64};
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double gamma = 0.99;
    double tau = 5e-3;  // soft target blend
    size_t buffer_capacity = 100000;
    int batch_size = 64;
    double noise_std_frac = 0.1;  // exploration noise as a fraction of the half-range
    int warmup_steps = 1000;      // uniform random actions while the buffer fills
    int update_every = 1;         // gradient updates per this many env steps
    double final_layer_scale = 1e-2;

    void validate() const;
};

// Deterministic actor-critic with target networks and uniform replay.
class DdpgLearner : public Learner {
public:
    DdpgLearner(const EnvSpec& spec, const DdpgConfig& cfg, uint64_t seed);

    const EnvSpec& env_spec() const override { return spec_; }
    Eigen::VectorXd act(const Eigen::VectorXd& observation, bool explore) override;
    double value_estimate(const Eigen::VectorXd& state) override;
    CollectStats collect(ContinuousEnv& env, int n_steps) override;
    LossStats rl_update() override;
    const ReplayBuffer& buffer() const override { return buffer_; }
    Network& policy_mean_net() override { return actor_; }
    const Network& policy_mean_net() const override { return actor_; }
    void save(const std::string& path) const override;
    void load(const std::string& path) override;
    uint64_t seed() const override { return seed_; }

    // One gradient update on an explicit batch (the testable unit of
    // rl_update). Throws std::logic_error on an empty batch.
    LossStats update_batch(std::span<const Transition* const> batch);

    Network& critic() { return critic_; }
    const Network& critic() const { return critic_; }
    const Network& target_actor() const { return target_actor_; }
    const Network& target_critic() const { return target_critic_; }
    double tau() const { return cfg_.tau; }
    void set_tau(double tau) { cfg_.tau = tau; }

private:
    Eigen::VectorXd clamp_action(Eigen::VectorXd a) const;
    void soft_update(Network& target, const Network& online, double tau);

    EnvSpec spec_;
    DdpgConfig cfg_;
    uint64_t seed_ = 0;
    Rng rng_;
    Network actor_, critic_, target_actor_, target_critic_;
    Optimizer actor_opt_, critic_opt_;
    ReplayBuffer buffer_;
    Eigen::VectorXd noise_std_;

    // episode bookkeeping across collect() calls
    Eigen::VectorXd obs_;
    double episode_return_ = 0.0;
    bool episode_active_ = false;
    bool env_seeded_ = false;
    uint64_t env_seed_ = 0;
    long steps_since_update_ = 0;
};

}  // namespace dpd
