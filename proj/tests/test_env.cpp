#include <doctest.h>

#include <cmath>

#include "dpd/env.hpp"

using namespace dpd;

TEST_CASE("pendulum: reset is deterministic given the seed") {
    PendulumEnv env;
    auto obs1 = env.reset(123);
    auto s1 = env.state();
    auto obs2 = env.reset(123);
    CHECK((obs1 - obs2).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(env.state() == s1);
}

TEST_CASE("pendulum: hanging rest state stays at rest under zero torque") {
    PendulumEnv env;
    env.reset(0);
    env.set_state(M_PI, 0.0);
    auto r = env.step(Eigen::VectorXd::Zero(1));
    CHECK(std::abs(env.state()[1]) < 1e-6);
    CHECK(std::abs(r.reward - (-M_PI * M_PI)) < 1e-9);  // cost of the pre-step angle
}

TEST_CASE("pendulum: semi-implicit Euler conserves energy on a small swing") {
    PendulumEnv env;
    env.reset(0);
    env.set_state(M_PI + 0.05, 0.0);
    const double e0 = env.mechanical_energy();
    double max_drift = 0.0;
    for (int t = 0; t < 200; ++t) {
        env.step(Eigen::VectorXd::Zero(1));
        max_drift = std::max(max_drift, std::abs(env.mechanical_energy() - e0));
    }
    CHECK(max_drift < 1e-3);
}

TEST_CASE("pendulum: velocity stays within its clamp under max torque") {
    PendulumEnv env;
    env.reset(77);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 100.0);  // clamped to 2
    for (int t = 0; t < 200; ++t) {
        auto r = env.step(u);
        CHECK(std::abs(env.state()[1]) <= 8.0);
        CHECK(std::isfinite(r.reward));
        CHECK(r.next_observation.allFinite());
    }
}

TEST_CASE("episode termination: truncation flag, length cap, use-after-end") {
    PendulumEnv env;
    env.reset(5);
    StepResult last;
    int steps = 0;
    while (true) {
        last = env.step(Eigen::VectorXd::Zero(1));
        ++steps;
        if (last.done || last.truncated) break;
    }
    CHECK(steps == env.spec().max_episode_steps);
    CHECK(last.truncated);
    CHECK_FALSE(last.done);  // time limit is not a terminal state
    CHECK_THROWS_AS(env.step(Eigen::VectorXd::Zero(1)), std::logic_error);
    env.reset();
    CHECK_NOTHROW(env.step(Eigen::VectorXd::Zero(1)));
}

TEST_CASE("replay oracle: same seed and actions give bit-identical streams") {
    for (const char* name : {"pendulum", "pointmass"}) {
        auto a = make_env(name);
        auto b = make_env(name);
        Rng action_rng(31337);

        auto obs_a = a->reset(999);
        auto obs_b = b->reset(999);
        CHECK((obs_a - obs_b).lpNorm<Eigen::Infinity>() == 0.0);
        for (int t = 0; t < 250; ++t) {
            Eigen::VectorXd act(a->spec().action_dim);
            for (int i = 0; i < act.size(); ++i) act[i] = action_rng.uniform(-2.0, 2.0);
            auto ra = a->step(act);
            auto rb = b->step(act);
            CHECK(ra.reward == rb.reward);
            CHECK((ra.next_observation - rb.next_observation).lpNorm<Eigen::Infinity>() == 0.0);
            CHECK(ra.truncated == rb.truncated);
            if (ra.truncated) {
                a->reset();
                b->reset();
            }
        }
    }
}

TEST_CASE("out-of-range actions are clamped, not rejected") {
    PendulumEnv a, b;
    a.reset(42);
    b.reset(42);
    auto ra = a.step(Eigen::VectorXd::Constant(1, 50.0));
    auto rb = b.step(Eigen::VectorXd::Constant(1, 2.0));
    CHECK(ra.reward == rb.reward);
    CHECK((ra.next_observation - rb.next_observation).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("point-mass: zero action at the goal keeps the maximal reward") {
    PointMassEnv env;
    env.reset(1);
    Eigen::Vector2d g(0.3, -0.4);
    env.set_state(g, {0, 0}, g);
    auto r = env.step(Eigen::VectorXd::Zero(2));
    CHECK(r.reward == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("point-mass: goal varies across episodes from the seed stream") {
    PointMassEnv env;
    env.reset(7);
    auto g1 = env.goal();
    env.reset();
    CHECK((env.goal() - g1).norm() > 0.0);
}

TEST_CASE("gridworld_to_mdp: 1x2 grid, slip-free east move") {
    GridworldDef def;
    def.width = 2;
    def.height = 1;
    def.slip_prob = 0.0;
    def.terminals = {{1, 0, 1.0}};
    auto mdp = gridworld_to_mdp(def);
    CHECK(mdp.transition[3](0, 1) == 1.0);                   // east from start
    CHECK(mdp.reward[3](0, 1) == doctest::Approx(0.96));     // step penalty + goal
    CHECK(mdp.transition[3](1, 1) == 1.0);                   // terminal absorbs
    CHECK(mdp.reward[3](1, 1) == 0.0);
    CHECK(mdp.initial_dist[0] == 1.0);
}

TEST_CASE("gridworld_to_mdp: slip splits mass between intended and laterals") {
    GridworldDef def;
    def.width = 3;
    def.height = 3;
    def.start_x = 1;
    def.start_y = 1;
    def.slip_prob = 0.2;
    def.terminals = {{2, 2, 1.0}};
    auto mdp = gridworld_to_mdp(def);
    const int c = def.cell_index(1, 1);
    // action east from the center: east 0.8, north 0.1, south 0.1
    CHECK(mdp.transition[3](c, def.cell_index(2, 1)) == doctest::Approx(0.8));
    CHECK(mdp.transition[3](c, def.cell_index(1, 2)) == doctest::Approx(0.1));
    CHECK(mdp.transition[3](c, def.cell_index(1, 0)) == doctest::Approx(0.1));
}

TEST_CASE("gridworld: Monte-Carlo transition frequencies match the tensor") {
    GridworldDef def;
    def.width = 4;
    def.height = 3;
    def.start_x = 0;
    def.start_y = 0;
    def.slip_prob = 0.25;
    def.terminals = {{3, 2, 1.0}, {3, 0, -1.0}};
    auto mdp = gridworld_to_mdp(def);

    GridworldSim sim(def);
    sim.reset(8675309);
    const long n = 100000;
    for (int s : {0, 5, 6}) {
        for (int a = 0; a < GridworldSim::kNumActions; ++a) {
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(mdp.n_states);
            for (long i = 0; i < n; ++i) counts[sim.sample_next(s, a)] += 1.0;
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                const double p = mdp.transition[a](s, s2);
                const double se = std::sqrt(p * (1.0 - p) / n);
                CHECK(std::abs(counts[s2] / n - p) <= 3.0 * se + 1e-12);
            }
        }
    }
}

TEST_CASE("gridworld sim: start cell, terminal episode end") {
    GridworldDef def;
    def.width = 2;
    def.height = 1;
    def.slip_prob = 0.0;
    def.terminals = {{1, 0, 1.0}};
    GridworldSim sim(def);
    CHECK(sim.reset(3) == 0);
    auto out = sim.step(3);  // east into the terminal
    CHECK(out.next_state == 1);
    CHECK(out.reward == doctest::Approx(0.96));
    CHECK(out.done);
}

TEST_CASE("gridworld def validation") {
    GridworldDef def;
    def.terminals.clear();
    CHECK_THROWS_AS(def.validate(), std::invalid_argument);
    def.terminals = {{0, 0, 1.0}};
    def.slip_prob = 1.0;
    CHECK_THROWS_AS(def.validate(), std::invalid_argument);
    def.slip_prob = 0.1;
    def.start_x = 99;
    CHECK_THROWS_AS(def.validate(), std::invalid_argument);
}

TEST_CASE("make_env rejects unknown names") {
    CHECK_THROWS_AS(make_env("walker2d"), std::invalid_argument);
}
