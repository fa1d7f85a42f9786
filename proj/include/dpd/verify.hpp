#pragma once

#include <cstdint>
#include <string>

#include "dpd/mdp.hpp"

namespace dpd {

// Tolerances used by the proposition checks, pinned once.
inline constexpr double kDominanceTol = 1e-8;    // V_hybrid >= max(V, V_peer) - tol
inline constexpr double kStrictTol = 1e-10;      // strict-improvement margin
inline constexpr double kIdentityTol = 1e-10;    // |LHS - RHS| for the objective identity

// Outcome of the hybrid-policy dominance check on one instance. Failures are
// report contents, never exceptions.
struct Prop1Report {
    uint64_t seed = 0;
    double max_violation = 0.0;  // max over states of shortfall against either policy
    bool dominates_self = false;
    bool dominates_peer = false;
    // Strict-improvement corollary: applicable when each policy is strictly
    // better somewhere, i.e. both disadvantage sets are nonempty.
    bool strict_applicable = false;
    bool strict_over_self = false;
    bool strict_over_peer = false;

    bool pass() const {
        return dominates_self && dominates_peer &&
               (!strict_applicable || (strict_over_self && strict_over_peer));
    }
    std::string line() const;
    std::string json_record() const;
};

// Both sides of the disadvantageous-distillation identity evaluated under one
// shared state distribution rho (taken from the peer policy). The raw
// visitation gap between the two policies is reported as a diagnostic only.
struct Prop2Report {
    uint64_t seed = 0;
    double lhs = 0.0;  // sum_s rho[s] D(pi(.|s), hybrid(.|s))
    double rhs = 0.0;  // sum_s rho[s] D(pi(.|s), peer(.|s)) [xi(s) > 0]
    double abs_diff = 0.0;
    double visitation_gap_l1 = 0.0;  // || rho_pi - rho_peer ||_1, not asserted

    bool pass() const { return abs_diff < kIdentityTol; }
    std::string line() const;
    std::string json_record() const;
};

Prop1Report verify_prop1(const TabularMdp& mdp, const TabularPolicy& pi,
                         const TabularPolicy& pi_peer);

Prop2Report verify_prop2(const TabularMdp& mdp, const TabularPolicy& pi,
                         const TabularPolicy& pi_peer, DistanceMetric metric);

}  // namespace dpd
