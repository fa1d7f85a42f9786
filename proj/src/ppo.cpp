#include "dpd/ppo.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dpd/snapshot.hpp"

namespace dpd {

void PpoConfig::validate() const {
    if (policy_lr <= 0 || value_lr <= 0) throw std::invalid_argument("PpoConfig: bad lr");
    if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("PpoConfig: gamma in [0,1)");
    if (!(gae_lambda >= 0 && gae_lambda <= 1))
        throw std::invalid_argument("PpoConfig: lambda in [0,1]");
    if (clip <= 0) throw std::invalid_argument("PpoConfig: clip must be positive");
    if (epochs < 1 || minibatch < 1 || rollout_steps < 1)
        throw std::invalid_argument("PpoConfig: epoch/minibatch/rollout sizes");
}

GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const Eigen::VectorXd& next_values, const std::vector<bool>& done,
                      const std::vector<bool>& truncated, double gamma, double lambda) {
    const long n = rewards.size();
    if (values.size() != n || next_values.size() != n ||
        static_cast<long>(done.size()) != n || static_cast<long>(truncated.size()) != n)
        throw std::invalid_argument("compute_gae: length mismatch");

    GaeResult out;
    out.advantages.resize(n);
    double tail = 0.0;
    for (long t = n - 1; t >= 0; --t) {
        const double bootstrap = done[t] ? 0.0 : 1.0;
        const double carry = (done[t] || truncated[t]) ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * bootstrap * next_values[t] - values[t];
        tail = delta + gamma * lambda * carry * tail;
        out.advantages[t] = tail;
    }
    out.returns = out.advantages + values;

    const double mean = out.advantages.mean();
    const double stddev =
        std::sqrt((out.advantages.array() - mean).square().sum() / std::max<long>(n - 1, 1));
    out.normalized_advantages = (out.advantages.array() - mean) / (stddev + 1e-8);
    return out;
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

PpoLearner::PpoLearner(const EnvSpec& spec, const PpoConfig& cfg, uint64_t seed)
    : spec_(spec),
      cfg_(cfg),
      seed_(seed),
      rng_(derive_seed(seed, 0)),
      policy_(Network::random_init(with_io(spec.observation_dim, cfg.policy_hidden, spec.action_dim),
                                   HiddenActivation::tanh, OutputActivation::bounded, rng_,
                                   cfg.final_layer_scale, spec.action_low, spec.action_high)),
      value_(Network::random_init(with_io(spec.observation_dim, cfg.value_hidden, 1),
                                  HiddenActivation::tanh, OutputActivation::identity, rng_)),
      policy_opt_(OptimizerKind::adam, cfg.policy_lr),
      value_opt_(OptimizerKind::adam, cfg.value_lr),
      ring_(cfg.ring_capacity),
      env_seed_(derive_seed(seed, 1)) {
    spec_.validate();
    cfg_.validate();
    log_std_ = (cfg.init_action_std_frac * 0.5 * (spec.action_high - spec.action_low))
                   .array()
                   .log();
    std_m_ = Eigen::VectorXd::Zero(spec.action_dim);
    std_v_ = Eigen::VectorXd::Zero(spec.action_dim);
}

Eigen::VectorXd PpoLearner::clamp_action(Eigen::VectorXd a) const {
    return a.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
}

double PpoLearner::log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean) const {
    double lp = -0.5 * spec_.action_dim * std::log(2.0 * M_PI);
    for (int d = 0; d < spec_.action_dim; ++d) {
        const double z = (action[d] - mean[d]) / std::exp(log_std_[d]);
        lp -= 0.5 * z * z + log_std_[d];
    }
    return lp;
}

Eigen::VectorXd PpoLearner::act(const Eigen::VectorXd& observation, bool explore) {
    Eigen::VectorXd a = policy_.forward(observation);
    if (explore) {
        for (int d = 0; d < a.size(); ++d) a[d] += std::exp(log_std_[d]) * rng_.normal();
    }
    return clamp_action(std::move(a));
}

double PpoLearner::value_estimate(const Eigen::VectorXd& state) {
    return value_.forward(state)[0];
}

CollectStats PpoLearner::collect(ContinuousEnv& env, int n_steps) {
    CollectStats stats;
    for (int i = 0; i < n_steps; ++i) {
        if (!episode_active_) {
            obs_ = env_seeded_ ? env.reset() : env.reset(env_seed_);
            env_seeded_ = true;
            episode_active_ = true;
            episode_return_ = 0.0;
        }
        const Eigen::VectorXd mean = policy_.forward(obs_);
        Eigen::VectorXd raw = mean;
        for (int d = 0; d < raw.size(); ++d) raw[d] += std::exp(log_std_[d]) * rng_.normal();
        const double logp = log_prob(raw, mean);
        const Eigen::VectorXd executed = clamp_action(raw);

        const StepResult r = env.step(executed);

        ro_obs_.push_back(obs_);
        ro_actions_.push_back(raw);  // the sample the log-prob belongs to
        ro_next_obs_.push_back(r.next_observation);
        ro_rewards_.push_back(r.reward);
        ro_logp_.push_back(logp);
        ro_done_.push_back(r.done);
        ro_truncated_.push_back(r.truncated);

        Transition t;
        t.state = obs_;
        t.action = executed;
        t.reward = r.reward;
        t.next_state = r.next_observation;
        t.done = r.done;
        t.truncated = r.truncated;
        ring_.push(std::move(t));

        episode_return_ += r.reward;
        obs_ = r.next_observation;
        ++total_env_steps_;
        ++stats.steps;
        if (r.done || r.truncated) {
            episode_returns_.push_back(episode_return_);
            episode_active_ = false;
            ++stats.episodes_finished;
        }
    }
    return stats;
}

LossStats PpoLearner::rl_update() {
    const long n = static_cast<long>(ro_rewards_.size());
    if (n == 0) throw std::logic_error("PpoLearner::rl_update: no rollout collected");

    const int od = spec_.observation_dim, ad = spec_.action_dim;
    Eigen::MatrixXd obs(od, n), actions(ad, n), next_obs(od, n);
    Eigen::VectorXd rewards(n), logp_old(n);
    for (long i = 0; i < n; ++i) {
        obs.col(i) = ro_obs_[i];
        actions.col(i) = ro_actions_[i];
        next_obs.col(i) = ro_next_obs_[i];
        rewards[i] = ro_rewards_[i];
        logp_old[i] = ro_logp_[i];
    }

    const Eigen::VectorXd values = value_.forward_batch(obs).row(0).transpose();
    const Eigen::VectorXd next_values = value_.forward_batch(next_obs).row(0).transpose();
    const GaeResult gae = compute_gae(rewards, values, next_values, ro_done_, ro_truncated_,
                                      cfg_.gamma, cfg_.gae_lambda);

    LossStats total;
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        // Fisher-Yates with the learner's own stream
        for (long i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng_.integer(static_cast<uint64_t>(i + 1))]);

        for (long start = 0; start < n; start += cfg_.minibatch) {
            const long b = std::min<long>(cfg_.minibatch, n - start);
            Eigen::MatrixXd s(od, b), a(ad, b);
            Eigen::VectorXd adv(b), ret(b), lp_old(b);
            for (long i = 0; i < b; ++i) {
                const long k = order[start + i];
                s.col(i) = obs.col(k);
                a.col(i) = actions.col(k);
                adv[i] = gae.normalized_advantages[k];
                ret[i] = gae.returns[k];
                lp_old[i] = logp_old[k];
            }

            // policy pass, against the current log-std
            const Eigen::VectorXd sigma = log_std_.array().exp();
            const Eigen::MatrixXd mu = policy_.forward_batch(s);
            Eigen::VectorXd logp_new(b);
            for (long i = 0; i < b; ++i) {
                double lp = -0.5 * ad * std::log(2.0 * M_PI);
                for (int d = 0; d < ad; ++d) {
                    const double z = (a(d, i) - mu(d, i)) / sigma[d];
                    lp -= 0.5 * z * z + log_std_[d];
                }
                logp_new[i] = lp;
            }
            const Eigen::VectorXd ratio = (logp_new - lp_old).array().exp();

            Eigen::MatrixXd upstream_mu = Eigen::MatrixXd::Zero(ad, b);
            Eigen::VectorXd grad_log_std = Eigen::VectorXd::Zero(ad);
            double pg_loss = 0.0;
            for (long i = 0; i < b; ++i) {
                const double surr1 = ratio[i] * adv[i];
                const double clipped =
                    std::clamp(ratio[i], 1.0 - cfg_.clip, 1.0 + cfg_.clip);
                const double surr2 = clipped * adv[i];
                pg_loss -= std::min(surr1, surr2);
                if (surr1 <= surr2) {  // gradient flows through the unclipped branch
                    const double scale = -adv[i] * ratio[i] / b;
                    for (int d = 0; d < ad; ++d) {
                        const double z = (a(d, i) - mu(d, i)) / sigma[d];
                        upstream_mu(d, i) = scale * z / sigma[d];
                        grad_log_std[d] += scale * (z * z - 1.0);
                    }
                }
            }
            pg_loss /= b;
            policy_opt_.step(policy_, policy_.backward(s, upstream_mu));

            // log-std Adam step with the same defaults as the net optimizers
            if (grad_log_std.allFinite()) {
                ++std_t_;
                std_m_ = 0.9 * std_m_ + 0.1 * grad_log_std;
                std_v_ = 0.999 * std_v_ + 0.001 * grad_log_std.array().square().matrix();
                const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(std_t_));
                const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(std_t_));
                log_std_.array() -= cfg_.policy_lr * (std_m_.array() / bc1) /
                                    ((std_v_.array() / bc2).sqrt() + 1e-8);
                log_std_ = log_std_.cwiseMax(-5.0).cwiseMin(2.0);
            }

            // value regression to the GAE returns
            const Eigen::VectorXd v = value_.forward_batch(s).row(0).transpose();
            const Eigen::VectorXd err = v - ret;
            const double v_loss = err.squaredNorm() / b;
            value_opt_.step(value_, value_.backward(s, (2.0 / b) * err.transpose()));

            total.policy_loss += pg_loss;
            total.value_loss += v_loss;
            ++total.updates;
        }
    }
    if (total.updates > 0) {
        total.policy_loss /= total.updates;
        total.value_loss /= total.updates;
    }

    ro_obs_.clear();
    ro_actions_.clear();
    ro_next_obs_.clear();
    ro_rewards_.clear();
    ro_logp_.clear();
    ro_done_.clear();
    ro_truncated_.clear();
    return total;
}

void PpoLearner::save(const std::string& path) const {
    SnapshotWriter w;
    w.add_meta("kind", "ppo");
    w.add_network("policy", policy_);
    w.add_network("value", value_);
    w.add_array("log_std", {log_std_.data(), log_std_.data() + log_std_.size()});
    w.add_array("policy_opt", policy_opt_.serialize_state());
    w.add_array("value_opt", value_opt_.serialize_state());
    w.write(path);
}

void PpoLearner::load(const std::string& path) {
    SnapshotReader r(path);
    if (r.meta("kind") != "ppo")
        throw std::runtime_error("PpoLearner::load: snapshot kind mismatch in " + path);
    policy_ = r.network("policy");
    value_ = r.network("value");
    const auto ls = r.array("log_std");
    log_std_ = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
    policy_opt_ = Optimizer(OptimizerKind::adam, cfg_.policy_lr);
    value_opt_ = Optimizer(OptimizerKind::adam, cfg_.value_lr);
    const auto p_state = r.array("policy_opt");
    if (p_state.size() > 2) {
        policy_opt_.step(policy_, GradientSet::zeros_like(policy_));
        value_opt_.step(value_, GradientSet::zeros_like(value_));
        policy_opt_.restore_state(p_state);
        value_opt_.restore_state(r.array("value_opt"));
    }
}

}  // namespace dpd
