#include "dpd/ddpg.hpp"

#include <stdexcept>

#include "dpd/snapshot.hpp"

namespace dpd {

void DdpgConfig::validate() const {
    if (actor_lr <= 0 || critic_lr <= 0) throw std::invalid_argument("DdpgConfig: bad lr");
    if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("DdpgConfig: gamma in [0,1)");
    if (!(tau > 0 && tau <= 1)) throw std::invalid_argument("DdpgConfig: tau in (0,1]");
    if (batch_size < 1 || buffer_capacity < static_cast<size_t>(batch_size))
        throw std::invalid_argument("DdpgConfig: batch/buffer sizes");
    if (update_every < 1) throw std::invalid_argument("DdpgConfig: update_every < 1");
}

namespace {

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> sizes;
    sizes.push_back(in);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

}  // namespace

DdpgLearner::DdpgLearner(const EnvSpec& spec, const DdpgConfig& cfg, uint64_t seed)
    : spec_(spec),
      cfg_(cfg),
      seed_(seed),
      rng_(derive_seed(seed, 0)),
      actor_(Network::random_init(with_io(spec.observation_dim, cfg.actor_hidden, spec.action_dim),
                                  HiddenActivation::relu, OutputActivation::bounded, rng_,
                                  cfg.final_layer_scale, spec.action_low, spec.action_high)),
      critic_(Network::random_init(
          with_io(spec.observation_dim + spec.action_dim, cfg.critic_hidden, 1),
          HiddenActivation::relu, OutputActivation::identity, rng_)),
      target_actor_(actor_),
      target_critic_(critic_),
      actor_opt_(OptimizerKind::adam, cfg.actor_lr),
      critic_opt_(OptimizerKind::adam, cfg.critic_lr),
      buffer_(cfg.buffer_capacity),
      env_seed_(derive_seed(seed, 1)) {
    spec_.validate();
    cfg_.validate();
    noise_std_ = cfg.noise_std_frac * 0.5 * (spec.action_high - spec.action_low);
}

Eigen::VectorXd DdpgLearner::clamp_action(Eigen::VectorXd a) const {
    return a.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
}

Eigen::VectorXd DdpgLearner::act(const Eigen::VectorXd& observation, bool explore) {
    Eigen::VectorXd a = actor_.forward(observation);
    if (explore) {
        for (int i = 0; i < a.size(); ++i) a[i] += rng_.normal(0.0, noise_std_[i]);
    }
    return clamp_action(std::move(a));
}

double DdpgLearner::value_estimate(const Eigen::VectorXd& state) {
    Eigen::VectorXd sa(spec_.observation_dim + spec_.action_dim);
    sa << state, actor_.forward(state);
    return critic_.forward(sa)[0];
}

CollectStats DdpgLearner::collect(ContinuousEnv& env, int n_steps) {
    CollectStats stats;
    for (int i = 0; i < n_steps; ++i) {
        if (!episode_active_) {
            obs_ = env_seeded_ ? env.reset() : env.reset(env_seed_);
            env_seeded_ = true;
            episode_active_ = true;
            episode_return_ = 0.0;
        }
        Eigen::VectorXd action;
        if (total_env_steps_ < cfg_.warmup_steps) {
            action.resize(spec_.action_dim);
            for (int d = 0; d < action.size(); ++d)
                action[d] = rng_.uniform(spec_.action_low[d], spec_.action_high[d]);
        } else {
            action = act(obs_, /*explore=*/true);
        }
        const StepResult r = env.step(action);

        Transition t;
        t.state = obs_;
        t.action = action;
        t.reward = r.reward;
        t.next_state = r.next_observation;
        t.done = r.done;
        t.truncated = r.truncated;
        buffer_.push(std::move(t));

        episode_return_ += r.reward;
        obs_ = r.next_observation;
        ++total_env_steps_;
        ++steps_since_update_;
        ++stats.steps;
        if (r.done || r.truncated) {
            episode_returns_.push_back(episode_return_);
            episode_active_ = false;
            ++stats.episodes_finished;
        }
    }
    return stats;
}

LossStats DdpgLearner::update_batch(std::span<const Transition* const> batch) {
    if (batch.empty()) throw std::logic_error("DdpgLearner::update_batch: empty batch");
    const int b = static_cast<int>(batch.size());
    const int od = spec_.observation_dim, ad = spec_.action_dim;

    Eigen::MatrixXd s(od, b), a(ad, b), s2(od, b);
    Eigen::VectorXd reward(b), bootstrap_mask(b);
    for (int i = 0; i < b; ++i) {
        s.col(i) = batch[i]->state;
        a.col(i) = batch[i]->action;
        s2.col(i) = batch[i]->next_state;
        reward[i] = batch[i]->reward;
        // truncation is not a terminal state: keep bootstrapping there
        bootstrap_mask[i] = batch[i]->done ? 0.0 : 1.0;
    }

    // critic regression to r + gamma (1-done) Q'(s', mu'(s'))
    Eigen::MatrixXd sa2(od + ad, b);
    sa2 << s2, target_actor_.forward_batch(s2);
    const Eigen::VectorXd q_next = target_critic_.forward_batch(sa2).row(0).transpose();
    const Eigen::VectorXd y =
        reward + cfg_.gamma * bootstrap_mask.cwiseProduct(q_next);

    Eigen::MatrixXd sa(od + ad, b);
    sa << s, a;
    const Eigen::VectorXd q = critic_.forward_batch(sa).row(0).transpose();
    const Eigen::VectorXd td = q - y;
    const double critic_loss = td.squaredNorm() / b;
    Eigen::MatrixXd critic_upstream = (2.0 / b) * td.transpose();
    critic_opt_.step(critic_, critic_.backward(sa, critic_upstream));

    // actor ascent on Q(s, mu(s)): loss = -mean Q
    Eigen::MatrixXd mu = actor_.forward_batch(s);
    Eigen::MatrixXd sa_pi(od + ad, b);
    sa_pi << s, mu;
    const double actor_loss = -critic_.forward_batch(sa_pi).mean();
    Eigen::MatrixXd dq_input;
    critic_.backward(sa_pi, Eigen::MatrixXd::Constant(1, b, -1.0 / b), &dq_input);
    const Eigen::MatrixXd upstream_mu = dq_input.bottomRows(ad);
    actor_opt_.step(actor_, actor_.backward(s, upstream_mu));

    soft_update(target_actor_, actor_, cfg_.tau);
    soft_update(target_critic_, critic_, cfg_.tau);

    return {actor_loss, critic_loss, 1};
}

LossStats DdpgLearner::rl_update() {
    LossStats total;
    if (buffer_.size() < static_cast<size_t>(cfg_.batch_size) ||
        total_env_steps_ < cfg_.warmup_steps) {
        steps_since_update_ = 0;
        return total;
    }
    const long n_updates = steps_since_update_ / cfg_.update_every;
    steps_since_update_ -= n_updates * cfg_.update_every;
    for (long u = 0; u < n_updates; ++u) {
        auto batch = buffer_.sample(cfg_.batch_size, rng_);
        const LossStats one = update_batch(batch);
        total.policy_loss += one.policy_loss;
        total.value_loss += one.value_loss;
        ++total.updates;
    }
    if (total.updates > 0) {
        total.policy_loss /= total.updates;
        total.value_loss /= total.updates;
    }
    return total;
}

void DdpgLearner::soft_update(Network& target, const Network& online, double tau) {
    for (int l = 0; l < target.n_layers(); ++l) {
        target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
        target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
    }
}

void DdpgLearner::save(const std::string& path) const {
    SnapshotWriter w;
    w.add_meta("kind", "ddpg");
    w.add_network("actor", actor_);
    w.add_network("critic", critic_);
    w.add_network("target_actor", target_actor_);
    w.add_network("target_critic", target_critic_);
    w.add_array("actor_opt", actor_opt_.serialize_state());
    w.add_array("critic_opt", critic_opt_.serialize_state());
    w.write(path);
}

void DdpgLearner::load(const std::string& path) {
    SnapshotReader r(path);
    if (r.meta("kind") != "ddpg")
        throw std::runtime_error("DdpgLearner::load: snapshot kind mismatch in " + path);
    actor_ = r.network("actor");
    critic_ = r.network("critic");
    target_actor_ = r.network("target_actor");
    target_critic_ = r.network("target_critic");
    // optimizer moments restore only after shapes exist; a fresh optimizer
    // would also be sound, this keeps resumed runs exact
    actor_opt_ = Optimizer(OptimizerKind::adam, cfg_.actor_lr);
    critic_opt_ = Optimizer(OptimizerKind::adam, cfg_.critic_lr);
    const auto a_state = r.array("actor_opt");
    const auto c_state = r.array("critic_opt");
    if (a_state.size() > 2) {
        actor_opt_.step(actor_, GradientSet::zeros_like(actor_));  // allocate moments
        critic_opt_.step(critic_, GradientSet::zeros_like(critic_));
        actor_opt_.restore_state(a_state);
        critic_opt_.restore_state(c_state);
    }
}

}  // namespace dpd
