#pragma once

#include <cstdint>
#include <vector>

#include "redolab/rng.hpp"

namespace redolab {

enum class EnvKind { catch_grid, cartpole };

struct EnvSpec {
    EnvKind kind = EnvKind::catch_grid;
    std::size_t rows = 10;  // catch
    std::size_t cols = 5;   // catch
    std::size_t episode_cap = 200;  // cartpole
};

struct Transition {
    std::vector<double> s;
    std::size_t a = 0;
    double r = 0.0;
    std::vector<double> s_next;
    bool done = false;
};

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
};

struct CartPoleState {
    double x = 0.0, x_dot = 0.0, theta = 0.0, theta_dot = 0.0;
};

// One semi-implicit Euler step of the cart-pole equations under an arbitrary
// applied force (the environment always uses +/-10).
CartPoleState cartpole_dynamics(const CartPoleState& s, double force);

// Catch: a pellet falls one row per step from the top of a rows x cols grid;
// the paddle sits on the bottom row and moves {left, stay, right}. Reaching
// the bottom row ends the episode with reward +1 on a column match, -1
// otherwise. Observation: flattened binary grid, pellet and paddle cells = 1.
//
// CartPole: classic cart-pole with gravity 9.8, cart mass 1.0, pole mass 0.1,
// pole half-length 0.5, force 10.0, dt 0.02, integrated with semi-implicit
// Euler (velocities update first). Actions {push_left, push_right}; reward +1
// per step; done when |theta| > 12 deg, |x| > 2.4, or episode_cap is hit.
class Env {
public:
    explicit Env(const EnvSpec& spec) : spec_(spec) {}

    std::vector<double> reset(std::uint64_t seed);
    StepResult step(std::size_t action);

    std::size_t observation_dim() const;
    std::size_t action_count() const;
    bool episode_done() const { return done_; }

    // catch internals, exposed so tests can enumerate starting states
    std::size_t pellet_row = 0, pellet_col = 0, paddle_col = 0;
    void set_catch_state(std::size_t prow, std::size_t pcol, std::size_t paddle);

    // cartpole internals
    double x = 0.0, x_dot = 0.0, theta = 0.0, theta_dot = 0.0;
    std::size_t steps_taken = 0;

    const EnvSpec& spec() const { return spec_; }

private:
    EnvSpec spec_;
    bool done_ = true;

    std::vector<double> catch_observation() const;
};

}  // namespace redolab
