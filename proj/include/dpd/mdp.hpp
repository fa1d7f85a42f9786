#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dpd/rng.hpp"

namespace dpd {

// Finite MDP (S, A, P_T, R, gamma, p0). Transitions and rewards are stored as
// one (n_states x n_states) matrix per action: transition[a](s, s2) is the
// probability of reaching s2 from s under a, reward[a](s, s2) the reward
// collected on that move.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Eigen::MatrixXd> transition;  // [a](s, s')
    std::vector<Eigen::MatrixXd> reward;      // [a](s, s')
    double discount = 0.9;
    Eigen::VectorXd initial_dist;

    double p(int s, int a, int s2) const { return transition[a](s, s2); }
    double r(int s, int a, int s2) const { return reward[a](s, s2); }

    double max_abs_reward() const;

    // Throws std::invalid_argument when rows do not form distributions,
    // the discount is outside (0,1), or shapes disagree.
    void validate() const;
};

// Per-state action distribution, rows sum to 1.
struct TabularPolicy {
    Eigen::MatrixXd probs;  // (n_states, n_actions)

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }
    void validate() const;
};

struct ValueTable {
    Eigen::VectorXd v;
};

struct QTable {
    Eigen::MatrixXd q;  // (n_states, n_actions)
};

// Discounted state-visitation frequencies; entries sum to 1/(1-gamma).
struct VisitationTable {
    Eigen::VectorXd rho;
};

// Distance between two action distributions at one state.
enum class DistanceMetric {
    squared_error,    // sum over actions of squared differences
    total_variation,  // half the L1 difference
};

double policy_row_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                           DistanceMetric metric);

// Policy-averaged transition matrix P_pi(s, s') and reward vector r_pi(s).
Eigen::MatrixXd policy_transition(const TabularMdp& mdp, const TabularPolicy& pi);
Eigen::VectorXd policy_reward(const TabularMdp& mdp, const TabularPolicy& pi);

// Unique fixed point of V = r_pi + gamma P_pi V by direct linear solve.
// Post: sup-norm residual below 1e-10 (checked; a violation is an internal
// defect since I - gamma P_pi is nonsingular for gamma < 1).
ValueTable evaluate_policy(const TabularMdp& mdp, const TabularPolicy& pi);

// q(s,a) = sum_s' P(s'|s,a) (R(s,a,s') + gamma v(s')).
QTable compute_q(const TabularMdp& mdp, const ValueTable& value);

// Bellman optimality operator (TV)(s) = max_a sum_s' P (R + gamma V).
Eigen::VectorXd bellman_optimality(const TabularMdp& mdp, const Eigen::VectorXd& v);

// Iterates the optimality operator until the returned V satisfies
// ||V - TV||_inf <= tol. Throws std::invalid_argument for tol <= 0.
ValueTable value_iteration(const TabularMdp& mdp, double tol);

// Deterministic greedy policy w.r.t. the q-values induced by v (ties to the
// lowest action index).
TabularPolicy greedy_policy(const TabularMdp& mdp, const ValueTable& value);

// Solves rho = p0 + gamma P_pi^T rho.
VisitationTable discounted_visitation(const TabularMdp& mdp, const TabularPolicy& pi);

// xi(s) = v_peer[s] - v_self[s], the peer's value edge at s.
double advantage_xi(const ValueTable& v_peer, const ValueTable& v_self, int s);

// Row s follows pi_peer where xi(s) > 0 and pi otherwise (ties to pi; the
// hybrid of a policy with itself is the policy).
TabularPolicy hybrid_policy(const TabularPolicy& pi, const TabularPolicy& pi_peer,
                            const ValueTable& v_pi, const ValueTable& v_peer);

// { s : v_peer[s] > v_self[s] }, strict.
std::vector<int> disadvantage_states(const ValueTable& v_peer, const ValueTable& v_self);

// Finite-horizon values of the hybrid policy: V_0 = pointwise max of the two
// policy values, V_n = r_h + gamma P_h V_{n-1}. Returned as {V_0, ..., V_n};
// monotone nondecreasing in n. Diagnostic companion to the dominance check.
std::vector<Eigen::VectorXd> hybrid_value_sequence(const TabularMdp& mdp,
                                                   const TabularPolicy& pi,
                                                   const TabularPolicy& pi_peer,
                                                   int horizon);

// Random instances for verification campaigns. Transition rows are normalized
// strictly-positive uniforms (every state stays reachable), rewards are
// uniform in [-1, 1].
TabularMdp random_mdp(int n_states, int n_actions, Rng& rng, double discount = 0.9);
TabularPolicy random_policy(int n_states, int n_actions, Rng& rng);

}  // namespace dpd
