#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dpd/mdp.hpp"
#include "dpd/verify.hpp"

using namespace dpd;

namespace {

TabularMdp single_state_loop(double reward, double gamma) {
    TabularMdp mdp;
    mdp.n_states = 1;
    mdp.n_actions = 1;
    mdp.discount = gamma;
    mdp.transition = {Eigen::MatrixXd::Ones(1, 1)};
    mdp.reward = {Eigen::MatrixXd::Constant(1, 1, reward)};
    mdp.initial_dist = Eigen::VectorXd::Ones(1);
    mdp.validate();
    return mdp;
}

TabularPolicy uniform_policy(int n_states, int n_actions) {
    TabularPolicy pi;
    pi.probs = Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
    return pi;
}

// Monte-Carlo estimate of V^pi(s0): mean discounted return over `episodes`
// truncated rollouts, plus the standard error of that mean. Straight-line
// sampling code, independent of the linear-solve path it cross-checks.
struct McEstimate {
    double mean;
    double stderr_;
};

McEstimate mc_policy_value(const TabularMdp& mdp, const TabularPolicy& pi, int s0,
                           long episodes, int horizon, Rng& rng) {
    auto sample_row = [&](const Eigen::VectorXd& weights) {
        double u = rng.uniform();
        double acc = 0.0;
        for (int i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return static_cast<int>(weights.size()) - 1;
    };

    double sum = 0.0, sumsq = 0.0;
    for (long e = 0; e < episodes; ++e) {
        int s = s0;
        double g = 0.0, disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            const int a = sample_row(pi.probs.row(s).transpose());
            const int s2 = sample_row(mdp.transition[a].row(s).transpose());
            g += disc * mdp.reward[a](s, s2);
            disc *= mdp.discount;
            s = s2;
        }
        sum += g;
        sumsq += g * g;
    }
    const double mean = sum / episodes;
    const double var = (sumsq - episodes * mean * mean) / (episodes - 1);
    return {mean, std::sqrt(var / episodes)};
}

}  // namespace

TEST_CASE("evaluate_policy: single-state self-loop geometric series") {
    auto mdp = single_state_loop(1.0, 0.5);
    auto v = evaluate_policy(mdp, uniform_policy(1, 1));
    CHECK(v.v[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("evaluate_policy: zero rewards give zero values") {
    Rng rng(7);
    auto mdp = random_mdp(6, 3, rng);
    for (auto& r : mdp.reward) r.setZero();
    auto v = evaluate_policy(mdp, random_policy(6, 3, rng));
    CHECK(v.v.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("evaluate_policy: dimension mismatch rejected") {
    Rng rng(3);
    auto mdp = random_mdp(5, 2, rng);
    auto pi = random_policy(4, 2, rng);
    CHECK_THROWS_AS(evaluate_policy(mdp, pi), std::invalid_argument);
}

TEST_CASE("evaluate_policy: Monte-Carlo rollout oracle agrees within 3 SE") {
    Rng rng(20240512);
    auto mdp = random_mdp(10, 3, rng);
    auto pi = uniform_policy(10, 3);
    auto v = evaluate_policy(mdp, pi);

    Rng mc_rng(99);
    // horizon 120: gamma^120 / (1 - gamma) ~ 3e-5 truncation bias, well under
    // the Monte-Carlo noise floor at 1e6 episodes
    auto est = mc_policy_value(mdp, pi, 0, 1000000, 120, mc_rng);
    CHECK(std::abs(v.v[0] - est.mean) < 3.0 * est.stderr_);
}

TEST_CASE("evaluate_policy: values bounded by r_max/(1-gamma)") {
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        auto mdp = random_mdp(4 + static_cast<int>(rng.integer(10)), 2, rng);
        auto v = evaluate_policy(mdp, random_policy(mdp.n_states, 2, rng));
        CHECK(v.v.lpNorm<Eigen::Infinity>() <=
              mdp.max_abs_reward() / (1.0 - mdp.discount) + 1e-9);
    }
}

TEST_CASE("compute_q: trivial cases") {
    auto mdp = single_state_loop(1.0, 0.5);
    SUBCASE("zero rewards, zero value") {
        mdp.reward[0].setZero();
        auto q = compute_q(mdp, ValueTable{Eigen::VectorXd::Zero(1)});
        CHECK(q.q(0, 0) == doctest::Approx(0.0));
    }
    SUBCASE("fixed-point consistency") {
        auto q = compute_q(mdp, ValueTable{Eigen::VectorXd::Constant(1, 2.0)});
        CHECK(q.q(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("compute_q: Bellman consistency and zero-mean advantage") {
    Rng rng(42);
    for (int i = 0; i < 25; ++i) {
        auto mdp = random_mdp(4 + static_cast<int>(rng.integer(12)),
                              2 + static_cast<int>(rng.integer(3)), rng);
        auto pi = random_policy(mdp.n_states, mdp.n_actions, rng);
        auto v = evaluate_policy(mdp, pi);
        auto q = compute_q(mdp, v);
        for (int s = 0; s < mdp.n_states; ++s) {
            const double v_from_q = pi.probs.row(s).dot(q.q.row(s));
            CHECK(std::abs(v_from_q - v.v[s]) < 1e-8);
            // advantage A = Q - V averages to zero under pi
            const double mean_adv =
                pi.probs.row(s).dot((q.q.row(s).array() - v.v[s]).matrix());
            CHECK(std::abs(mean_adv) < 1e-8);
        }
    }
}

TEST_CASE("value_iteration: trivial instances") {
    SUBCASE("all-zero rewards") {
        Rng rng(5);
        auto mdp = random_mdp(7, 2, rng);
        for (auto& r : mdp.reward) r.setZero();
        auto v = value_iteration(mdp, 1e-12);
        CHECK(v.v.lpNorm<Eigen::Infinity>() < 1e-10);
    }
    SUBCASE("two-state chain closed form") {
        TabularMdp mdp;
        mdp.n_states = 2;
        mdp.n_actions = 1;
        mdp.discount = 0.9;
        Eigen::MatrixXd p(2, 2), r(2, 2);
        p << 0, 1, 0, 1;  // state 0 -> 1, state 1 self-loop
        r << 0, 0, 0, 1;
        mdp.transition = {p};
        mdp.reward = {r};
        mdp.initial_dist = Eigen::VectorXd::Zero(2);
        mdp.initial_dist[0] = 1.0;
        mdp.validate();
        auto v = value_iteration(mdp, 1e-10);
        CHECK(v.v[1] == doctest::Approx(10.0).epsilon(1e-8));
        CHECK(v.v[0] == doctest::Approx(9.0).epsilon(1e-8));
    }
    SUBCASE("non-positive tolerance rejected") {
        auto mdp = single_state_loop(1.0, 0.5);
        CHECK_THROWS_AS(value_iteration(mdp, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(value_iteration(mdp, -1e-6), std::invalid_argument);
    }
}

TEST_CASE("value_iteration: exhaustive deterministic-policy enumeration oracle") {
    Rng rng(314159);
    for (int trial = 0; trial < 10; ++trial) {
        auto mdp = random_mdp(8, 2, rng);
        auto v_star = value_iteration(mdp, 1e-10);

        // best value over all 2^8 deterministic policies, each exactly solved
        Eigen::VectorXd best = Eigen::VectorXd::Constant(8, -1e100);
        for (int mask = 0; mask < 256; ++mask) {
            TabularPolicy pi;
            pi.probs = Eigen::MatrixXd::Zero(8, 2);
            for (int s = 0; s < 8; ++s) pi.probs(s, (mask >> s) & 1) = 1.0;
            best = best.cwiseMax(evaluate_policy(mdp, pi).v);
        }
        CHECK((v_star.v - best).lpNorm<Eigen::Infinity>() < 1e-6);

        // the greedy policy w.r.t. V* is itself optimal
        auto v_greedy = evaluate_policy(mdp, greedy_policy(mdp, v_star));
        CHECK((v_greedy.v - best).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("value_iteration: Bellman operator is a gamma-contraction") {
    Rng rng(2718);
    auto mdp = random_mdp(12, 3, rng);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd a(12), b(12);
        for (int s = 0; s < 12; ++s) {
            a[s] = rng.uniform(-10.0, 10.0);
            b[s] = rng.uniform(-10.0, 10.0);
        }
        const double lhs =
            (bellman_optimality(mdp, a) - bellman_optimality(mdp, b)).lpNorm<Eigen::Infinity>();
        CHECK(lhs <= mdp.discount * (a - b).lpNorm<Eigen::Infinity>() + 1e-12);
    }
}

TEST_CASE("discounted_visitation: closed forms") {
    SUBCASE("single state") {
        auto mdp = single_state_loop(0.0, 0.5);
        auto rho = discounted_visitation(mdp, uniform_policy(1, 1));
        CHECK(rho.rho[0] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("deterministic 2-cycle") {
        TabularMdp mdp;
        mdp.n_states = 2;
        mdp.n_actions = 1;
        mdp.discount = 0.5;
        Eigen::MatrixXd p(2, 2);
        p << 0, 1, 1, 0;
        mdp.transition = {p};
        mdp.reward = {Eigen::MatrixXd::Zero(2, 2)};
        mdp.initial_dist = Eigen::VectorXd::Zero(2);
        mdp.initial_dist[0] = 1.0;
        mdp.validate();
        auto rho = discounted_visitation(mdp, uniform_policy(2, 1));
        CHECK(rho.rho[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
        CHECK(rho.rho[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("discounted_visitation: truncated power series oracle and total mass") {
    Rng rng(1234);
    for (int trial = 0; trial < 10; ++trial) {
        auto mdp = random_mdp(4 + static_cast<int>(rng.integer(10)),
                              2 + static_cast<int>(rng.integer(3)), rng);
        auto pi = random_policy(mdp.n_states, mdp.n_actions, rng);
        auto rho = discounted_visitation(mdp, pi);

        Eigen::MatrixXd pt = policy_transition(mdp, pi).transpose();
        Eigen::VectorXd p_t = mdp.initial_dist;
        Eigen::VectorXd series = Eigen::VectorXd::Zero(mdp.n_states);
        double disc = 1.0;
        for (int t = 0; t <= 200; ++t) {
            series += disc * p_t;
            p_t = pt * p_t;
            disc *= mdp.discount;
        }
        CHECK((rho.rho - series).lpNorm<Eigen::Infinity>() < 1e-6);
        CHECK(std::abs(rho.rho.sum() - 1.0 / (1.0 - mdp.discount)) < 1e-6);
        CHECK((rho.rho.array() >= 0.0).all());
    }
}

TEST_CASE("advantage_xi: shift, antisymmetry, bounds") {
    ValueTable a{Eigen::VectorXd::LinSpaced(5, 0.0, 4.0)};
    ValueTable b{a.v.array() + 3.5};
    for (int s = 0; s < 5; ++s) {
        CHECK(advantage_xi(a, a, s) == 0.0);
        CHECK(advantage_xi(b, a, s) == doctest::Approx(3.5));
        CHECK(advantage_xi(a, b, s) == -advantage_xi(b, a, s));
    }
    CHECK_THROWS_AS(advantage_xi(a, b, 5), std::out_of_range);
    CHECK_THROWS_AS(advantage_xi(a, b, -1), std::out_of_range);
}

TEST_CASE("hybrid_policy: fixed points and full takeover") {
    Rng rng(88);
    auto mdp = random_mdp(6, 2, rng);
    auto pi = random_policy(6, 2, rng);
    auto v = evaluate_policy(mdp, pi);

    SUBCASE("identical policies") {
        auto h = hybrid_policy(pi, pi, v, v);
        CHECK((h.probs - pi.probs).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("peer better everywhere") {
        ValueTable v_hi{v.v.array() + 1.0};
        auto peer = random_policy(6, 2, rng);
        auto h = hybrid_policy(pi, peer, v, v_hi);
        CHECK((h.probs - peer.probs).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("ties resolve to self") {
        auto peer = random_policy(6, 2, rng);
        auto h = hybrid_policy(pi, peer, v, v);
        CHECK((h.probs - pi.probs).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("hybrid_policy: evaluation dominates both inputs (Prop 1 oracle)") {
    Rng rng(5150);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4 + static_cast<int>(rng.integer(17));
        const int m = 2 + static_cast<int>(rng.integer(3));
        auto mdp = random_mdp(n, m, rng);
        auto pi = random_policy(n, m, rng);
        auto peer = random_policy(n, m, rng);
        auto v_pi = evaluate_policy(mdp, pi);
        auto v_peer = evaluate_policy(mdp, peer);
        auto v_h = evaluate_policy(mdp, hybrid_policy(pi, peer, v_pi, v_peer));
        CHECK((v_pi.v.cwiseMax(v_peer.v) - v_h.v).maxCoeff() < 1e-8);
    }
}

TEST_CASE("disadvantage_states: scan oracle and partition property") {
    SUBCASE("identical tables") {
        ValueTable a{Eigen::VectorXd::Zero(4)};
        CHECK(disadvantage_states(a, a).empty());
    }
    SUBCASE("uniform shift selects all states") {
        ValueTable a{Eigen::VectorXd::Zero(4)};
        ValueTable b{Eigen::VectorXd::Ones(4)};
        CHECK(disadvantage_states(b, a).size() == 4);
    }
    SUBCASE("random pair partitions the state space") {
        Rng rng(6);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 3 + static_cast<int>(rng.integer(20));
            ValueTable a{Eigen::VectorXd::Zero(n)}, b{Eigen::VectorXd::Zero(n)};
            for (int s = 0; s < n; ++s) {
                a.v[s] = rng.uniform(-1.0, 1.0);
                b.v[s] = rng.integer(4) == 0 ? a.v[s] : rng.uniform(-1.0, 1.0);
            }
            auto fwd = disadvantage_states(b, a);
            auto bwd = disadvantage_states(a, b);
            size_t ties = 0;
            for (int s = 0; s < n; ++s) {
                const bool in_fwd = b.v[s] > a.v[s];
                CHECK(std::count(fwd.begin(), fwd.end(), s) == (in_fwd ? 1 : 0));
                if (a.v[s] == b.v[s]) ++ties;
            }
            CHECK(fwd.size() + bwd.size() + ties == static_cast<size_t>(n));
        }
    }
}

TEST_CASE("hybrid_value_sequence: monotone nondecreasing finite-horizon values") {
    Rng rng(404);
    auto mdp = random_mdp(9, 3, rng);
    auto pi = random_policy(9, 3, rng);
    auto peer = random_policy(9, 3, rng);
    auto seq = hybrid_value_sequence(mdp, pi, peer, 40);
    REQUIRE(seq.size() == 41);
    for (size_t n = 1; n < seq.size(); ++n)
        CHECK((seq[n] - seq[n - 1]).minCoeff() > -1e-10);
    // V_0 is the pointwise max of the two input values
    Eigen::VectorXd v_max = evaluate_policy(mdp, pi).v.cwiseMax(evaluate_policy(mdp, peer).v);
    CHECK((seq[0] - v_max).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("verify_prop1: identical policies pass with zero slack") {
    Rng rng(17);
    auto mdp = random_mdp(8, 3, rng);
    auto pi = random_policy(8, 3, rng);
    auto report = verify_prop1(mdp, pi, pi);
    CHECK(report.pass());
    CHECK(report.max_violation < 1e-12);
    CHECK_FALSE(report.strict_applicable);
}

TEST_CASE("verify_prop1: optimal self policy leaves no peer advantage") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        auto mdp = random_mdp(7, 3, rng);
        auto pi_star = greedy_policy(mdp, value_iteration(mdp, 1e-12));
        auto peer = random_policy(7, 3, rng);
        auto report = verify_prop1(mdp, pi_star, peer);
        CHECK(report.pass());

        auto v_star = evaluate_policy(mdp, pi_star);
        auto v_h = evaluate_policy(
            mdp, hybrid_policy(pi_star, peer, v_star, evaluate_policy(mdp, peer)));
        CHECK((v_h.v - v_star.v).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("verify_prop1: randomized campaign sample") {
    Rng rng(1000);
    int strict_seen = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4 + static_cast<int>(rng.integer(17));
        const int m = 2 + static_cast<int>(rng.integer(3));
        auto mdp = random_mdp(n, m, rng);
        auto report = verify_prop1(mdp, random_policy(n, m, rng), random_policy(n, m, rng));
        CHECK(report.pass());
        if (report.strict_applicable) ++strict_seen;
    }
    // enough random pairs are mutually incomparable that the strict branch
    // gets exercised
    CHECK(strict_seen > 10);
}

TEST_CASE("verify_prop2: trivial cases") {
    Rng rng(31);
    auto mdp = random_mdp(6, 2, rng);
    auto pi = random_policy(6, 2, rng);

    SUBCASE("identical policies, both sides zero") {
        auto report = verify_prop2(mdp, pi, pi, DistanceMetric::squared_error);
        CHECK(report.lhs == 0.0);
        CHECK(report.rhs == 0.0);
        CHECK(report.pass());
    }
}

TEST_CASE("verify_prop2: single disadvantage state gives the single-term sum") {
    // two states, no cross transitions: values differ only where rewards do
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.discount = 0.5;
    Eigen::MatrixXd self_loop(2, 2);
    self_loop << 1, 0, 0, 1;
    mdp.transition = {self_loop, self_loop};
    Eigen::MatrixXd r0(2, 2), r1(2, 2);
    r0 << 0, 0, 0, 0;  // action 0 earns nothing
    r1 << 1, 0, 0, 0;  // action 1 earns 1 in state 0 only
    mdp.reward = {r0, r1};
    mdp.initial_dist = Eigen::VectorXd::Constant(2, 0.5);
    mdp.validate();

    TabularPolicy pi, peer;
    pi.probs.resize(2, 2);
    pi.probs << 1, 0, 1, 0;    // always action 0
    peer.probs.resize(2, 2);
    peer.probs << 0, 1, 1, 0;  // action 1 at state 0: better there, equal at 1

    auto report = verify_prop2(mdp, pi, peer, DistanceMetric::squared_error);
    const double rho0 = discounted_visitation(mdp, peer).rho[0];
    const double d0 = policy_row_distance(pi.probs.row(0).transpose(),
                                          peer.probs.row(0).transpose(),
                                          DistanceMetric::squared_error);
    CHECK(report.lhs == doctest::Approx(rho0 * d0).epsilon(1e-12));
    CHECK(report.rhs == doctest::Approx(rho0 * d0).epsilon(1e-12));
    CHECK(report.pass());
}

TEST_CASE("verify_prop2: randomized identity campaign sample") {
    Rng rng(2020);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4 + static_cast<int>(rng.integer(17));
        const int m = 2 + static_cast<int>(rng.integer(3));
        auto mdp = random_mdp(n, m, rng);
        auto metric =
            trial % 2 == 0 ? DistanceMetric::squared_error : DistanceMetric::total_variation;
        auto report = verify_prop2(mdp, random_policy(n, m, rng), random_policy(n, m, rng), metric);
        CHECK(report.pass());
        worst = std::max(worst, report.abs_diff);
        CHECK(report.visitation_gap_l1 >= 0.0);
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("report serialization carries the required fields") {
    Rng rng(555);
    auto mdp = random_mdp(5, 2, rng);
    auto report = verify_prop1(mdp, random_policy(5, 2, rng), random_policy(5, 2, rng));
    report.seed = 555;
    auto line = report.line();
    CHECK(line.find("prop1") != std::string::npos);
    CHECK(line.find("seed=555") != std::string::npos);
    auto rec = report.json_record();
    CHECK(rec.find("\"check\":\"prop1\"") != std::string::npos);
    CHECK(rec.find("\"max_violation\"") != std::string::npos);
    CHECK(rec.find("\"pass\"") != std::string::npos);
}

TEST_CASE("TabularMdp validation rejects malformed instances") {
    Rng rng(9);
    auto mdp = random_mdp(4, 2, rng);
    SUBCASE("bad transition row") {
        mdp.transition[0](0, 0) += 0.1;
        CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
    }
    SUBCASE("negative probability") {
        mdp.transition[1](1, 0) -= 2.0;
        CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
    }
    SUBCASE("discount out of range") {
        mdp.discount = 1.0;
        CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
    }
    SUBCASE("initial distribution") {
        mdp.initial_dist[0] += 0.5;
        CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
    }
}
