#include "dpd/dpd.hpp"

#include <cmath>
#include <stdexcept>

namespace dpd {

void DpdConfig::validate() const {
    if (alpha < 0) throw std::invalid_argument("DpdConfig: alpha must be >= 0");
    if (distill_batch < 1 || distill_window < distill_batch)
        throw std::invalid_argument("DpdConfig: window must hold at least one batch");
    if (distill_lr <= 0) throw std::invalid_argument("DpdConfig: distill_lr must be positive");
    if (distill_updates_per_iter < 0)
        throw std::invalid_argument("DpdConfig: negative distill updates");
    if (!(weight_clip_min > 0) || weight_clip_min > weight_clip_max)
        throw std::invalid_argument("DpdConfig: weight clip bounds");
}

Eigen::VectorXd distill_weights(const Eigen::VectorXd& xi_hat, double alpha, double w_min,
                                double w_max, long* clamped) {
    Eigen::VectorXd w(xi_hat.size());
    long n_clamped = 0;
    for (int i = 0; i < xi_hat.size(); ++i) {
        double v = std::exp(alpha * xi_hat[i]);
        if (!std::isfinite(v)) {
            v = w_max;
            ++n_clamped;
        } else if (v < w_min) {
            v = w_min;
            ++n_clamped;
        } else if (v > w_max) {
            v = w_max;
            ++n_clamped;
        }
        w[i] = v;
    }
    if (clamped) *clamped = n_clamped;
    return w;
}

namespace {

double action_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       DistanceMetric metric) {
    return metric == DistanceMetric::squared_error ? (a - b).squaredNorm()
                                                   : 0.5 * (a - b).lpNorm<1>();
}

}  // namespace

double indicator_distill_loss(Learner& self, Learner& peer,
                              const std::vector<Eigen::VectorXd>& states,
                              const std::vector<double>& values_self,
                              const std::vector<double>& values_peer, DistanceMetric metric) {
    if (states.size() != values_self.size() || states.size() != values_peer.size())
        throw std::invalid_argument("indicator_distill_loss: length mismatch");
    if (states.empty()) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < states.size(); ++i) {
        if (values_peer[i] > values_self[i])
            acc += action_distance(self.act(states[i], false), peer.act(states[i], false), metric);
    }
    return acc / static_cast<double>(states.size());
}

std::vector<std::pair<double, double>> diagnostics_qvalues(
    Learner& l1, Learner& l2, const std::vector<Eigen::VectorXd>& probe_states) {
    std::vector<std::pair<double, double>> out;
    out.reserve(probe_states.size());
    for (const auto& s : probe_states)
        out.emplace_back(l1.value_estimate(s), l2.value_estimate(s));
    return out;
}

std::vector<double> diagnostics_action_distance(
    Learner& l1, Learner& l2, const std::vector<Eigen::VectorXd>& probe_states) {
    std::vector<double> out;
    out.reserve(probe_states.size());
    for (const auto& s : probe_states)
        out.push_back((l1.act(s, false) - l2.act(s, false)).norm());
    return out;
}

double DpdOrchestrator::DirectionState::pooled_std(double n_new, double sum_new,
                                                   double sumsq_new) {
    xi_batches.push_back({n_new, sum_new, sumsq_new});
    while (xi_batches.size() > 10) xi_batches.pop_front();
    double n = 0, sum = 0, sumsq = 0;
    for (const auto& b : xi_batches) {
        n += b[0];
        sum += b[1];
        sumsq += b[2];
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    return std::sqrt(var);
}

DpdOrchestrator::DpdOrchestrator(Learner& l1, Learner& l2, ContinuousEnv& env1,
                                 ContinuousEnv& env2, DpdConfig cfg, uint64_t distill_seed)
    : l1_(l1), l2_(l2), env1_(env1), env2_(env2), cfg_(cfg) {
    cfg_.validate();
    // sample streams keyed by the learner's own seed: swapping the two
    // learners swaps the streams with them, so the role swap mirrors exactly
    dir_[0].sample_rng = Rng(derive_seed(distill_seed, l1.seed()));
    dir_[1].sample_rng = Rng(derive_seed(distill_seed, l2.seed()));
}

DistillStats DpdOrchestrator::distill_update(int self_index) {
    if (self_index != 0 && self_index != 1)
        throw std::invalid_argument("DpdOrchestrator: self_index must be 0 or 1");
    Learner& self = learner(self_index);
    Learner& peer = learner(1 - self_index);
    DirectionState& dir = dir_[self_index];

    DistillStats stats;
    const auto window =
        peer.buffer().recent_window(static_cast<size_t>(cfg_.distill_window));
    if (window.size() < static_cast<size_t>(cfg_.distill_batch)) {
        stats.skipped = true;  // not enough peer experience yet
        return stats;
    }

    const int b = cfg_.distill_batch;
    const int od = self.env_spec().observation_dim;
    const int ad = self.env_spec().action_dim;

    Eigen::MatrixXd states(od, b);
    Eigen::MatrixXd peer_actions(ad, b);
    Eigen::VectorXd xi(b);
    for (int i = 0; i < b; ++i) {
        const Transition* t = window[dir.sample_rng.integer(window.size())];
        states.col(i) = t->state;
        peer_actions.col(i) = peer.act(t->state, false);  // frozen teacher signal
        xi[i] = peer.value_estimate(t->state) - self.value_estimate(t->state);
    }

    Eigen::VectorXd xi_hat = xi;
    if (cfg_.xi_normalization) {
        const double scale = dir.pooled_std(b, xi.sum(), xi.array().square().sum());
        xi_hat = xi / (scale + 1e-8);
    }
    const Eigen::VectorXd w = distill_weights(xi_hat, cfg_.alpha, cfg_.weight_clip_min,
                                              cfg_.weight_clip_max, &stats.clamped_weights);
    const double w_sum = w.sum();

    // weighted squared action gap, normalized by the weight mass
    Network& net = self.policy_mean_net();
    const Eigen::MatrixXd mu = net.forward_batch(states);
    const Eigen::MatrixXd diff = mu - peer_actions;
    stats.loss = (diff.array().square().colwise().sum().transpose() * w.array()).sum() / w_sum;
    Eigen::MatrixXd upstream = diff.array().rowwise() * (2.0 * w.transpose().array() / w_sum);

    if (!dir.opt) dir.opt.emplace(OptimizerKind::adam, cfg_.distill_lr);
    dir.opt->step(net, net.backward(states, upstream));

    stats.mean_xi = xi.mean();
    stats.mean_weight = w.mean();
    stats.fraction_positive_xi =
        static_cast<double>((xi.array() > 0.0).count()) / static_cast<double>(b);
    return stats;
}

IterationStats DpdOrchestrator::iterate(int collect_steps_per_learner) {
    IterationStats s;
    s.collect1 = l1_.collect(env1_, collect_steps_per_learner);
    s.rl1 = l1_.rl_update();
    for (int k = 0; k < cfg_.distill_updates_per_iter; ++k) s.distill1 = distill_update(0);
    s.collect2 = l2_.collect(env2_, collect_steps_per_learner);
    s.rl2 = l2_.rl_update();
    for (int k = 0; k < cfg_.distill_updates_per_iter; ++k) s.distill2 = distill_update(1);
    return s;
}

}  // namespace dpd
