#include "dpd/verify.hpp"

#include <json.hpp>

#include <cstdio>

namespace dpd {

namespace {

std::string format_line(const char* check, uint64_t seed, double max_violation, bool pass) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s seed=%llu max_violation=%.3e %s", check,
                  static_cast<unsigned long long>(seed), max_violation, pass ? "PASS" : "FAIL");
    return buf;
}

}  // namespace

std::string Prop1Report::line() const {
    return format_line("prop1", seed, max_violation, pass());
}

std::string Prop1Report::json_record() const {
    nlohmann::json j{{"check", "prop1"},
                     {"seed", seed},
                     {"max_violation", max_violation},
                     {"pass", pass()},
                     {"dominates_self", dominates_self},
                     {"dominates_peer", dominates_peer},
                     {"strict_applicable", strict_applicable},
                     {"strict_over_self", strict_over_self},
                     {"strict_over_peer", strict_over_peer}};
    return j.dump();
}

std::string Prop2Report::line() const {
    return format_line("prop2", seed, abs_diff, pass());
}

std::string Prop2Report::json_record() const {
    nlohmann::json j{{"check", "prop2"},
                     {"seed", seed},
                     {"max_violation", abs_diff},
                     {"pass", pass()},
                     {"lhs", lhs},
                     {"rhs", rhs},
                     {"visitation_gap_l1", visitation_gap_l1}};
    return j.dump();
}

Prop1Report verify_prop1(const TabularMdp& mdp, const TabularPolicy& pi,
                         const TabularPolicy& pi_peer) {
    const ValueTable v_pi = evaluate_policy(mdp, pi);
    const ValueTable v_peer = evaluate_policy(mdp, pi_peer);
    const TabularPolicy hybrid = hybrid_policy(pi, pi_peer, v_pi, v_peer);
    const ValueTable v_hybrid = evaluate_policy(mdp, hybrid);

    Prop1Report report;
    const double shortfall_self = (v_pi.v - v_hybrid.v).maxCoeff();
    const double shortfall_peer = (v_peer.v - v_hybrid.v).maxCoeff();
    report.max_violation = std::max({shortfall_self, shortfall_peer, 0.0});
    report.dominates_self = shortfall_self <= kDominanceTol;
    report.dominates_peer = shortfall_peer <= kDominanceTol;

    const bool peer_better_somewhere = !disadvantage_states(v_peer, v_pi).empty();
    const bool self_better_somewhere = !disadvantage_states(v_pi, v_peer).empty();
    report.strict_applicable = peer_better_somewhere && self_better_somewhere;
    if (report.strict_applicable) {
        report.strict_over_self = (v_hybrid.v - v_pi.v).maxCoeff() > kStrictTol;
        report.strict_over_peer = (v_hybrid.v - v_peer.v).maxCoeff() > kStrictTol;
    }
    return report;
}

Prop2Report verify_prop2(const TabularMdp& mdp, const TabularPolicy& pi,
                         const TabularPolicy& pi_peer, DistanceMetric metric) {
    const ValueTable v_pi = evaluate_policy(mdp, pi);
    const ValueTable v_peer = evaluate_policy(mdp, pi_peer);
    const TabularPolicy hybrid = hybrid_policy(pi, pi_peer, v_pi, v_peer);

    // One shared rho on both sides; the paper's similar-visitation assumption
    // imposed exactly. The peer's visitation matches the s ~ peer expectation.
    const Eigen::VectorXd rho = discounted_visitation(mdp, pi_peer).rho;

    Prop2Report report;
    for (int s = 0; s < mdp.n_states; ++s) {
        const Eigen::VectorXd pi_row = pi.probs.row(s).transpose();
        report.lhs += rho[s] * policy_row_distance(pi_row, hybrid.probs.row(s).transpose(), metric);
        if (v_peer.v[s] > v_pi.v[s]) {
            report.rhs +=
                rho[s] * policy_row_distance(pi_row, pi_peer.probs.row(s).transpose(), metric);
        }
    }
    report.abs_diff = std::abs(report.lhs - report.rhs);
    report.visitation_gap_l1 = (discounted_visitation(mdp, pi).rho - rho).lpNorm<1>();
    return report;
}

}  // namespace dpd
