#include "dpd/env.hpp"

#include <cmath>
#include <stdexcept>

namespace dpd {

void EnvSpec::validate() const {
    if (observation_dim <= 0 || action_dim <= 0)
        throw std::invalid_argument("EnvSpec: non-positive dimensions");
    if (action_low.size() != action_dim || action_high.size() != action_dim)
        throw std::invalid_argument("EnvSpec: action bound size mismatch");
    if (!((action_low.array() < action_high.array()).all()))
        throw std::invalid_argument("EnvSpec: action_low must be below action_high");
    if (max_episode_steps < 1) throw std::invalid_argument("EnvSpec: max_episode_steps < 1");
}

Eigen::VectorXd ContinuousEnv::reset(uint64_t seed) {
    rng_ = Rng(seed);
    return reset();
}

Eigen::VectorXd ContinuousEnv::reset() {
    steps_ = 0;
    episode_over_ = false;
    return reset_state();
}

StepResult ContinuousEnv::step(const Eigen::VectorXd& action) {
    if (episode_over_)
        throw std::logic_error("ContinuousEnv::step called after episode end without reset");
    if (action.size() != spec_.action_dim)
        throw std::invalid_argument("ContinuousEnv::step: action dimension mismatch");
    const Eigen::VectorXd clamped =
        action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
    StepResult result = advance(clamped);
    ++steps_;
    if (steps_ >= spec_.max_episode_steps) result.truncated = true;
    episode_over_ = result.done || result.truncated;
    return result;
}

// ---------------------------------------------------------------------------
// Pendulum

namespace {
constexpr double kPendulumDt = 0.05;
constexpr double kGravity = 10.0;
constexpr double kMaxSpeed = 8.0;
constexpr double kMaxTorque = 2.0;
}  // namespace

PendulumEnv::PendulumEnv()
    : ContinuousEnv([] {
          EnvSpec s;
          s.observation_dim = 3;
          s.action_dim = 1;
          s.action_low = Eigen::VectorXd::Constant(1, -kMaxTorque);
          s.action_high = Eigen::VectorXd::Constant(1, kMaxTorque);
          s.max_episode_steps = 200;
          s.discount_hint = 0.99;
          return s;
      }()) {}

double PendulumEnv::wrap_angle(double theta) {
    double w = std::fmod(theta + M_PI, 2.0 * M_PI);
    if (w < 0) w += 2.0 * M_PI;
    return w - M_PI;
}

// Uniform rod pivoting at one end: I = m l^2 / 3, potential peaks upright.
double PendulumEnv::mechanical_energy() const {
    return (1.0 / 6.0) * theta_dot_ * theta_dot_ + (kGravity / 2.0) * std::cos(theta_);
}

Eigen::VectorXd PendulumEnv::observe() const {
    Eigen::VectorXd obs(3);
    obs << std::cos(theta_), std::sin(theta_), theta_dot_;
    return obs;
}

Eigen::VectorXd PendulumEnv::reset_state() {
    theta_ = rng_.uniform(-M_PI, M_PI);
    theta_dot_ = rng_.uniform(-1.0, 1.0);
    return observe();
}

StepResult PendulumEnv::advance(const Eigen::VectorXd& action) {
    const double u = action[0];
    const double cost = wrap_angle(theta_) * wrap_angle(theta_) +
                        0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

    // semi-implicit Euler: velocity first, then position with the new velocity
    const double theta_ddot = 1.5 * kGravity * std::sin(theta_) + 3.0 * u;
    theta_dot_ += theta_ddot * kPendulumDt;
    theta_dot_ = std::clamp(theta_dot_, -kMaxSpeed, kMaxSpeed);
    theta_ += theta_dot_ * kPendulumDt;

    StepResult r;
    r.next_observation = observe();
    r.reward = -cost;
    r.done = false;  // swing-up has no terminal state
    return r;
}

// ---------------------------------------------------------------------------
// Point-mass reacher

namespace {
constexpr double kPointMassDt = 0.1;
constexpr double kVelocityDamping = 0.95;
}  // namespace

PointMassEnv::PointMassEnv()
    : ContinuousEnv([] {
          EnvSpec s;
          s.observation_dim = 6;
          s.action_dim = 2;
          s.action_low = Eigen::VectorXd::Constant(2, -1.0);
          s.action_high = Eigen::VectorXd::Constant(2, 1.0);
          s.max_episode_steps = 100;
          s.discount_hint = 0.99;
          return s;
      }()) {}

Eigen::VectorXd PointMassEnv::observe() const {
    Eigen::VectorXd obs(6);
    obs << pos_[0], pos_[1], vel_[0], vel_[1], goal_[0], goal_[1];
    return obs;
}

Eigen::VectorXd PointMassEnv::reset_state() {
    pos_ = {rng_.uniform(-0.5, 0.5), rng_.uniform(-0.5, 0.5)};
    vel_.setZero();
    goal_ = {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
    return observe();
}

StepResult PointMassEnv::advance(const Eigen::VectorXd& action) {
    vel_ = (vel_ + action * kPointMassDt) * kVelocityDamping;
    pos_ += vel_ * kPointMassDt;

    StepResult r;
    r.next_observation = observe();
    r.reward = -(pos_ - goal_).norm();
    r.done = false;
    return r;
}

std::unique_ptr<ContinuousEnv> make_env(const std::string& name) {
    if (name == "pendulum") return std::make_unique<PendulumEnv>();
    if (name == "pointmass") return std::make_unique<PointMassEnv>();
    throw std::invalid_argument("unknown environment: " + name);
}

// ---------------------------------------------------------------------------
// Gridworld

bool GridworldDef::is_terminal(int cell) const {
    for (const auto& t : terminals)
        if (cell_index(t.x, t.y) == cell) return true;
    return false;
}

double GridworldDef::terminal_reward(int cell) const {
    for (const auto& t : terminals)
        if (cell_index(t.x, t.y) == cell) return t.reward;
    return 0.0;
}

void GridworldDef::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("GridworldDef: empty grid");
    if (terminals.empty()) throw std::invalid_argument("GridworldDef: needs a terminal cell");
    if (!(slip_prob >= 0.0 && slip_prob < 1.0))
        throw std::invalid_argument("GridworldDef: slip_prob must be in [0,1)");
    if (start_x < 0 || start_x >= width || start_y < 0 || start_y >= height)
        throw std::invalid_argument("GridworldDef: start cell out of range");
    for (const auto& t : terminals)
        if (t.x < 0 || t.x >= width || t.y < 0 || t.y >= height)
            throw std::invalid_argument("GridworldDef: terminal cell out of range");
}

namespace {

// dx, dy per action: north, south, west, east
constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {1, -1, 0, 0};

int move_clamped(const GridworldDef& def, int cell, int dir) {
    const int x = cell % def.width;
    const int y = cell / def.width;
    const int nx = std::clamp(x + kDx[dir], 0, def.width - 1);
    const int ny = std::clamp(y + kDy[dir], 0, def.height - 1);
    return def.cell_index(nx, ny);
}

// lateral (perpendicular) directions of an intended move
constexpr int kLateral[4][2] = {{2, 3}, {2, 3}, {0, 1}, {0, 1}};

}  // namespace

TabularMdp gridworld_to_mdp(const GridworldDef& def, double discount) {
    def.validate();
    const int n = def.n_cells();
    TabularMdp mdp;
    mdp.n_states = n;
    mdp.n_actions = GridworldSim::kNumActions;
    mdp.discount = discount;
    mdp.transition.assign(mdp.n_actions, Eigen::MatrixXd::Zero(n, n));
    mdp.reward.assign(mdp.n_actions, Eigen::MatrixXd::Zero(n, n));

    for (int s = 0; s < n; ++s) {
        if (def.is_terminal(s)) {
            for (int a = 0; a < mdp.n_actions; ++a) mdp.transition[a](s, s) = 1.0;
            continue;
        }
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double p_main = 1.0 - def.slip_prob;
            mdp.transition[a](s, move_clamped(def, s, a)) += p_main;
            mdp.transition[a](s, move_clamped(def, s, kLateral[a][0])) += def.slip_prob / 2.0;
            mdp.transition[a](s, move_clamped(def, s, kLateral[a][1])) += def.slip_prob / 2.0;
            for (int s2 = 0; s2 < n; ++s2) {
                if (mdp.transition[a](s, s2) == 0.0) continue;
                mdp.reward[a](s, s2) =
                    def.step_penalty + (def.is_terminal(s2) ? def.terminal_reward(s2) : 0.0);
            }
        }
    }
    mdp.initial_dist = Eigen::VectorXd::Zero(n);
    mdp.initial_dist[def.cell_index(def.start_x, def.start_y)] = 1.0;
    mdp.validate();
    return mdp;
}

GridworldSim::GridworldSim(GridworldDef def) : def_(std::move(def)), rng_(0) {
    def_.validate();
    state_ = def_.cell_index(def_.start_x, def_.start_y);
}

int GridworldSim::reset(uint64_t seed) {
    rng_ = Rng(seed);
    state_ = def_.cell_index(def_.start_x, def_.start_y);
    return state_;
}

int GridworldSim::sample_next(int s, int a) {
    if (def_.is_terminal(s)) return s;
    const double u = rng_.uniform();
    int dir = a;
    if (u >= 1.0 - def_.slip_prob)
        dir = (u < 1.0 - def_.slip_prob / 2.0) ? kLateral[a][0] : kLateral[a][1];
    return move_clamped(def_, s, dir);
}

GridworldSim::Outcome GridworldSim::step(int action) {
    if (action < 0 || action >= kNumActions)
        throw std::invalid_argument("GridworldSim: bad action");
    if (def_.is_terminal(state_)) return {state_, 0.0, true};
    const int next = sample_next(state_, action);
    const double reward =
        def_.step_penalty + (def_.is_terminal(next) ? def_.terminal_reward(next) : 0.0);
    state_ = next;
    return {next, reward, def_.is_terminal(next)};
}

}  // namespace dpd
