#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "dpd/mdp.hpp"
#include "dpd/rng.hpp"

namespace dpd {

struct EnvSpec {
    int observation_dim = 0;
    int action_dim = 0;
    Eigen::VectorXd action_low;
    Eigen::VectorXd action_high;
    int max_episode_steps = 1;
    double discount_hint = 0.99;

    void validate() const;
};

struct StepResult {
    Eigen::VectorXd next_observation;
    double reward = 0.0;
    bool done = false;       // terminal state reached
    bool truncated = false;  // time-limit end; critics still bootstrap here
};

// Single-owner mutable simulation state. All randomness flows through the
// seed passed to reset(seed); out-of-range actions are clamped, not rejected.
class ContinuousEnv {
public:
    virtual ~ContinuousEnv() = default;

    const EnvSpec& spec() const { return spec_; }

    // Reseeds the internal stream, then resets.
    Eigen::VectorXd reset(uint64_t seed);
    // Draws the next initial state from the ongoing stream.
    Eigen::VectorXd reset();

    // Throws std::logic_error when called after done/truncated without reset.
    StepResult step(const Eigen::VectorXd& action);

    int steps_taken() const { return steps_; }

protected:
    explicit ContinuousEnv(EnvSpec spec) : spec_(std::move(spec)), rng_(0) {}

    virtual Eigen::VectorXd reset_state() = 0;
    // Receives the clamped action; fills observation, reward and done.
    virtual StepResult advance(const Eigen::VectorXd& action) = 0;

    EnvSpec spec_;
    Rng rng_;

private:
    int steps_ = 0;
    bool episode_over_ = true;
};

// Pendulum swing-up. State (theta, theta_dot) with theta = 0 upright;
// theta_ddot = (3g/2l) sin(theta) + 3u/(m l^2), g=10, m=l=1, semi-implicit
// Euler at dt=0.05, |u| <= 2, |theta_dot| <= 8, 200-step episodes.
// Reward -(wrap(theta)^2 + 0.1 theta_dot^2 + 0.001 u^2) on the pre-step state,
// observation (cos theta, sin theta, theta_dot).
class PendulumEnv : public ContinuousEnv {
public:
    PendulumEnv();

    // current (theta, theta_dot), for physics tests
    Eigen::Vector2d state() const { return {theta_, theta_dot_}; }
    void set_state(double theta, double theta_dot) {
        theta_ = theta;
        theta_dot_ = theta_dot;
    }
    double mechanical_energy() const;

    static double wrap_angle(double theta);

protected:
    Eigen::VectorXd reset_state() override;
    StepResult advance(const Eigen::VectorXd& action) override;

private:
    Eigen::VectorXd observe() const;
    double theta_ = 0.0;
    double theta_dot_ = 0.0;
};

// Point-mass reacher: 2-D position and velocity, acceleration actions in
// [-1,1]^2, dt=0.1, velocity damping 0.95, reward -||pos - goal||_2, goal
// redrawn each episode from the seed stream, 100-step episodes.
class PointMassEnv : public ContinuousEnv {
public:
    PointMassEnv();

    Eigen::Vector2d goal() const { return goal_; }
    void set_state(const Eigen::Vector2d& pos, const Eigen::Vector2d& vel,
                   const Eigen::Vector2d& goal) {
        pos_ = pos;
        vel_ = vel;
        goal_ = goal;
    }

protected:
    Eigen::VectorXd reset_state() override;
    StepResult advance(const Eigen::VectorXd& action) override;

private:
    Eigen::VectorXd observe() const;
    Eigen::Vector2d pos_{0, 0}, vel_{0, 0}, goal_{0, 0};
};

std::unique_ptr<ContinuousEnv> make_env(const std::string& name);

// Tabular gridworld, the bridge between the simulation side and the exact
// verification core.
struct GridworldDef {
    struct TerminalCell {
        int x = 0, y = 0;
        double reward = 0.0;
    };

    int width = 4;
    int height = 4;
    int start_x = 0;
    int start_y = 0;
    std::vector<TerminalCell> terminals;
    double step_penalty = -0.04;
    double slip_prob = 0.1;  // intended move 1-p, each lateral slip p/2

    int n_cells() const { return width * height; }
    int cell_index(int x, int y) const { return y * width + x; }
    bool is_terminal(int cell) const;
    double terminal_reward(int cell) const;
    void validate() const;
};

// Exact MDP for the gridworld: movement plus slip, terminal cells absorbing
// with zero reward, initial distribution a point mass on the start cell.
TabularMdp gridworld_to_mdp(const GridworldDef& def, double discount = 0.95);

// Steppable counterpart used for sampling checks and tabular rollouts.
// Actions: 0 north (+y), 1 south (-y), 2 west (-x), 3 east (+x).
class GridworldSim {
public:
    explicit GridworldSim(GridworldDef def);

    int reset(uint64_t seed);
    int state() const { return state_; }

    struct Outcome {
        int next_state;
        double reward;
        bool done;
    };
    Outcome step(int action);

    // One transition draw from (s, a) without touching the episode state.
    int sample_next(int s, int a);

    static constexpr int kNumActions = 4;

private:
    GridworldDef def_;
    Rng rng_;
    int state_ = 0;
};

}  // namespace dpd
