#include "dpd/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dpd {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double TabularMdp::max_abs_reward() const {
    double m = 0.0;
    for (const auto& ra : reward) m = std::max(m, ra.cwiseAbs().maxCoeff());
    return m;
}

void TabularMdp::validate() const {
    require(n_states > 0 && n_actions > 0, "TabularMdp: empty state or action set");
    require(discount > 0.0 && discount < 1.0, "TabularMdp: discount must be in (0,1)");
    require(static_cast<int>(transition.size()) == n_actions &&
                static_cast<int>(reward.size()) == n_actions,
            "TabularMdp: tensor action dimension mismatch");
    for (int a = 0; a < n_actions; ++a) {
        require(transition[a].rows() == n_states && transition[a].cols() == n_states,
                "TabularMdp: transition shape mismatch");
        require(reward[a].rows() == n_states && reward[a].cols() == n_states,
                "TabularMdp: reward shape mismatch");
        require((transition[a].array() >= 0.0).all(),
                "TabularMdp: negative transition probability");
        for (int s = 0; s < n_states; ++s) {
            require(std::abs(transition[a].row(s).sum() - 1.0) < 1e-9,
                    "TabularMdp: transition row does not sum to 1");
        }
        require(reward[a].allFinite(), "TabularMdp: non-finite reward");
    }
    require(initial_dist.size() == n_states, "TabularMdp: initial_dist size mismatch");
    require((initial_dist.array() >= 0.0).all(), "TabularMdp: negative initial probability");
    require(std::abs(initial_dist.sum() - 1.0) < 1e-9, "TabularMdp: initial_dist does not sum to 1");
}

void TabularPolicy::validate() const {
    require(probs.rows() > 0 && probs.cols() > 0, "TabularPolicy: empty");
    require((probs.array() >= 0.0).all(), "TabularPolicy: negative probability");
    for (int s = 0; s < probs.rows(); ++s) {
        require(std::abs(probs.row(s).sum() - 1.0) < 1e-9,
                "TabularPolicy: row does not sum to 1");
    }
}

double policy_row_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                           DistanceMetric metric) {
    require(p.size() == q.size(), "policy_row_distance: size mismatch");
    switch (metric) {
        case DistanceMetric::squared_error:
            return (p - q).squaredNorm();
        case DistanceMetric::total_variation:
            return 0.5 * (p - q).lpNorm<1>();
    }
    throw std::invalid_argument("policy_row_distance: unknown metric");
}

namespace {

void check_dims(const TabularMdp& mdp, const TabularPolicy& pi, const char* op) {
    if (pi.n_states() != mdp.n_states || pi.n_actions() != mdp.n_actions) {
        std::ostringstream msg;
        msg << op << ": policy shape (" << pi.n_states() << "x" << pi.n_actions()
            << ") does not match MDP (" << mdp.n_states << "x" << mdp.n_actions << ")";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

Eigen::MatrixXd policy_transition(const TabularMdp& mdp, const TabularPolicy& pi) {
    check_dims(mdp, pi, "policy_transition");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        p += pi.probs.col(a).asDiagonal() * mdp.transition[a];
    return p;
}

Eigen::VectorXd policy_reward(const TabularMdp& mdp, const TabularPolicy& pi) {
    check_dims(mdp, pi, "policy_reward");
    Eigen::VectorXd r = Eigen::VectorXd::Zero(mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a) {
        // expected one-step reward of action a at each state
        Eigen::VectorXd ra = (mdp.transition[a].array() * mdp.reward[a].array()).rowwise().sum();
        r += pi.probs.col(a).cwiseProduct(ra);
    }
    return r;
}

ValueTable evaluate_policy(const TabularMdp& mdp, const TabularPolicy& pi) {
    check_dims(mdp, pi, "evaluate_policy");
    const Eigen::MatrixXd p_pi = policy_transition(mdp, pi);
    const Eigen::VectorXd r_pi = policy_reward(mdp, pi);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) - mdp.discount * p_pi;
    Eigen::VectorXd v = a.partialPivLu().solve(r_pi);
    const double residual = (v - (r_pi + mdp.discount * (p_pi * v))).lpNorm<Eigen::Infinity>();
    if (!(residual < 1e-10))
        throw std::logic_error("evaluate_policy: linear solve residual " +
                               std::to_string(residual));
    return ValueTable{std::move(v)};
}

QTable compute_q(const TabularMdp& mdp, const ValueTable& value) {
    if (value.v.size() != mdp.n_states)
        throw std::invalid_argument("compute_q: value size mismatch");
    if (!value.v.allFinite()) throw std::invalid_argument("compute_q: non-finite value");
    Eigen::MatrixXd q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a) {
        q.col(a) = (mdp.transition[a].array() * mdp.reward[a].array()).rowwise().sum().matrix() +
                   mdp.discount * (mdp.transition[a] * value.v);
    }
    return QTable{std::move(q)};
}

Eigen::VectorXd bellman_optimality(const TabularMdp& mdp, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(mdp.n_states);
    Eigen::MatrixXd q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a) {
        q.col(a) = (mdp.transition[a].array() * mdp.reward[a].array()).rowwise().sum().matrix() +
                   mdp.discount * (mdp.transition[a] * v);
    }
    for (int s = 0; s < mdp.n_states; ++s) out[s] = q.row(s).maxCoeff();
    return out;
}

ValueTable value_iteration(const TabularMdp& mdp, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states);
    // After w = T(v), ||w - Tw||_inf <= gamma ||w - v||_inf, so stopping once
    // gamma * ||w - v||_inf <= tol yields the promised residual on w.
    const long max_sweeps = 1000000;
    for (long i = 0; i < max_sweeps; ++i) {
        Eigen::VectorXd w = bellman_optimality(mdp, v);
        const double diff = (w - v).lpNorm<Eigen::Infinity>();
        v = std::move(w);
        if (mdp.discount * diff <= tol) return ValueTable{std::move(v)};
    }
    throw std::logic_error("value_iteration: failed to converge");
}

TabularPolicy greedy_policy(const TabularMdp& mdp, const ValueTable& value) {
    const QTable q = compute_q(mdp, value);
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        int best = 0;
        q.q.row(s).maxCoeff(&best);
        probs(s, best) = 1.0;
    }
    return TabularPolicy{std::move(probs)};
}

VisitationTable discounted_visitation(const TabularMdp& mdp, const TabularPolicy& pi) {
    check_dims(mdp, pi, "discounted_visitation");
    const Eigen::MatrixXd p_pi = policy_transition(mdp, pi);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) - mdp.discount * p_pi.transpose();
    Eigen::VectorXd rho = a.partialPivLu().solve(mdp.initial_dist);
    return VisitationTable{std::move(rho)};
}

double advantage_xi(const ValueTable& v_peer, const ValueTable& v_self, int s) {
    if (v_peer.v.size() != v_self.v.size())
        throw std::invalid_argument("advantage_xi: state-space mismatch");
    if (s < 0 || s >= v_peer.v.size()) throw std::out_of_range("advantage_xi: state index");
    return v_peer.v[s] - v_self.v[s];
}

TabularPolicy hybrid_policy(const TabularPolicy& pi, const TabularPolicy& pi_peer,
                            const ValueTable& v_pi, const ValueTable& v_peer) {
    if (pi.probs.rows() != pi_peer.probs.rows() || pi.probs.cols() != pi_peer.probs.cols())
        throw std::invalid_argument("hybrid_policy: policy shape mismatch");
    if (v_pi.v.size() != pi.probs.rows() || v_peer.v.size() != pi.probs.rows())
        throw std::invalid_argument("hybrid_policy: value table size mismatch");
    TabularPolicy hybrid{pi.probs};
    for (int s = 0; s < pi.probs.rows(); ++s) {
        if (v_peer.v[s] > v_pi.v[s]) hybrid.probs.row(s) = pi_peer.probs.row(s);
    }
    return hybrid;
}

std::vector<int> disadvantage_states(const ValueTable& v_peer, const ValueTable& v_self) {
    if (v_peer.v.size() != v_self.v.size())
        throw std::invalid_argument("disadvantage_states: state-space mismatch");
    std::vector<int> out;
    for (int s = 0; s < v_peer.v.size(); ++s)
        if (v_peer.v[s] > v_self.v[s]) out.push_back(s);
    return out;
}

std::vector<Eigen::VectorXd> hybrid_value_sequence(const TabularMdp& mdp,
                                                   const TabularPolicy& pi,
                                                   const TabularPolicy& pi_peer,
                                                   int horizon) {
    if (horizon < 0) throw std::invalid_argument("hybrid_value_sequence: negative horizon");
    const ValueTable v_pi = evaluate_policy(mdp, pi);
    const ValueTable v_peer = evaluate_policy(mdp, pi_peer);
    const TabularPolicy hybrid = hybrid_policy(pi, pi_peer, v_pi, v_peer);
    const Eigen::MatrixXd p_h = policy_transition(mdp, hybrid);
    const Eigen::VectorXd r_h = policy_reward(mdp, hybrid);

    std::vector<Eigen::VectorXd> seq;
    seq.reserve(horizon + 1);
    seq.push_back(v_pi.v.cwiseMax(v_peer.v));
    for (int n = 1; n <= horizon; ++n) seq.push_back(r_h + mdp.discount * (p_h * seq.back()));
    return seq;
}

namespace {

Eigen::VectorXd normalized_positive_row(int n, Rng& rng) {
    Eigen::VectorXd row(n);
    for (int i = 0; i < n; ++i) row[i] = rng.uniform_pos();
    row /= row.sum();
    return row;
}

}  // namespace

TabularMdp random_mdp(int n_states, int n_actions, Rng& rng, double discount) {
    TabularMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.discount = discount;
    mdp.transition.resize(n_actions);
    mdp.reward.resize(n_actions);
    for (int a = 0; a < n_actions; ++a) {
        mdp.transition[a].resize(n_states, n_states);
        mdp.reward[a].resize(n_states, n_states);
        for (int s = 0; s < n_states; ++s) {
            mdp.transition[a].row(s) = normalized_positive_row(n_states, rng).transpose();
            for (int s2 = 0; s2 < n_states; ++s2) mdp.reward[a](s, s2) = rng.uniform(-1.0, 1.0);
        }
    }
    mdp.initial_dist = normalized_positive_row(n_states, rng);
    mdp.validate();
    return mdp;
}

TabularPolicy random_policy(int n_states, int n_actions, Rng& rng) {
    TabularPolicy pi;
    pi.probs.resize(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        pi.probs.row(s) = normalized_positive_row(n_actions, rng).transpose();
    pi.validate();
    return pi;
}

}  // namespace dpd
