#include "redolab/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace redolab {

namespace {
constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kTotalMass = kCartMass + kPoleMass;
constexpr double kHalfLength = 0.5;
constexpr double kPoleMassLength = kPoleMass * kHalfLength;
constexpr double kForce = 10.0;
constexpr double kDt = 0.02;
constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
constexpr double kXLimit = 2.4;
}  // namespace

CartPoleState cartpole_dynamics(const CartPoleState& s, double force) {
    const double costh = std::cos(s.theta);
    const double sinth = std::sin(s.theta);
    const double temp = (force + kPoleMassLength * s.theta_dot * s.theta_dot * sinth) / kTotalMass;
    const double theta_acc =
        (kGravity * sinth - costh * temp) /
        (kHalfLength * (4.0 / 3.0 - kPoleMass * costh * costh / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * costh / kTotalMass;

    // semi-implicit Euler: velocities first, positions with the new velocities
    CartPoleState n;
    n.x_dot = s.x_dot + kDt * x_acc;
    n.x = s.x + kDt * n.x_dot;
    n.theta_dot = s.theta_dot + kDt * theta_acc;
    n.theta = s.theta + kDt * n.theta_dot;
    return n;
}

std::size_t Env::observation_dim() const {
    return spec_.kind == EnvKind::catch_grid ? spec_.rows * spec_.cols : 4;
}

std::size_t Env::action_count() const {
    return spec_.kind == EnvKind::catch_grid ? 3 : 2;
}

std::vector<double> Env::catch_observation() const {
    std::vector<double> obs(spec_.rows * spec_.cols, 0.0);
    obs[pellet_row * spec_.cols + pellet_col] = 1.0;
    obs[(spec_.rows - 1) * spec_.cols + paddle_col] = 1.0;
    return obs;
}

void Env::set_catch_state(std::size_t prow, std::size_t pcol, std::size_t paddle) {
    pellet_row = prow;
    pellet_col = pcol;
    paddle_col = paddle;
    done_ = false;
}

std::vector<double> Env::reset(std::uint64_t seed) {
    Rng rng(seed);
    done_ = false;
    steps_taken = 0;
    if (spec_.kind == EnvKind::catch_grid) {
        if (spec_.rows < 2 || spec_.cols < 2)
            throw std::invalid_argument("catch: rows and cols must be >= 2");
        pellet_row = 0;
        pellet_col = rng.uniform_int(spec_.cols);
        paddle_col = spec_.cols / 2;
        return catch_observation();
    }
    x = rng.uniform(-0.05, 0.05);
    x_dot = rng.uniform(-0.05, 0.05);
    theta = rng.uniform(-0.05, 0.05);
    theta_dot = rng.uniform(-0.05, 0.05);
    return {x, x_dot, theta, theta_dot};
}

StepResult Env::step(std::size_t action) {
    if (done_) throw std::logic_error("env step: episode already done");
    StepResult res;
    if (spec_.kind == EnvKind::catch_grid) {
        if (action > 2) throw std::invalid_argument("catch: action must be 0(left)/1(stay)/2(right)");
        if (action == 0 && paddle_col > 0) --paddle_col;
        if (action == 2 && paddle_col + 1 < spec_.cols) ++paddle_col;
        ++pellet_row;
        if (pellet_row == spec_.rows - 1) {
            done_ = true;
            res.reward = pellet_col == paddle_col ? 1.0 : -1.0;
        }
        res.observation = catch_observation();
        res.done = done_;
        return res;
    }

    if (action > 1) throw std::invalid_argument("cartpole: action must be 0(left)/1(right)");
    const CartPoleState next =
        cartpole_dynamics({x, x_dot, theta, theta_dot}, action == 1 ? kForce : -kForce);
    x = next.x;
    x_dot = next.x_dot;
    theta = next.theta;
    theta_dot = next.theta_dot;

    ++steps_taken;
    res.reward = 1.0;
    done_ = std::fabs(theta) > kThetaLimit || std::fabs(x) > kXLimit ||
            steps_taken >= spec_.episode_cap;
    res.done = done_;
    res.observation = {x, x_dot, theta, theta_dot};
    return res;
}

}  // namespace redolab
