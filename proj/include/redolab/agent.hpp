#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "redolab/envs.hpp"
#include "redolab/network.hpp"
#include "redolab/optim.hpp"
#include "redolab/replay.hpp"

namespace redolab {

// Desk-scale DQN defaults. Target update period 0 means "derive from the
// replay ratio" as round(2000 / RR) gradient steps, which keeps
// period x RR constant across the sweep.
struct DQNConfig {
    double gamma = 0.99;
    double epsilon_train = 0.01;
    double epsilon_eval = 0.001;
    double replay_ratio = 0.25;
    std::uint64_t target_update_period = 0;
    std::size_t batch_size = 32;
    std::size_t n_step = 3;
    std::size_t min_history = 1000;
    std::uint64_t total_env_steps = 100000;
    double learning_rate = 5e-4;
    double weight_decay = 0.0;
    double adam_eps = 1.5e-4;
    std::size_t buffer_capacity = 10000;
    std::vector<std::size_t> hidden = {64, 64};
    Activation activation = Activation::relu;
    double leaky_slope = 0.01;
    double huber_delta = 1.0;

    std::uint64_t resolved_target_period() const;
    // gradient updates owed after one post-warmup env step
    std::size_t updates_for_env_step(std::uint64_t post_warmup_env_steps) const;
    void validate() const;
};

// One logged timestep. Rows are written at episode ends during online
// training and every log_period gradient steps offline. The dormancy fields
// echo the most recent measurement hook output (NaN before the first one);
// recycled_count is the cumulative number of recycled neurons so far.
struct MetricRow {
    std::uint64_t step_env = 0;
    std::uint64_t step_grad = 0;
    std::uint64_t episode = 0;
    double ret = 0.0;
    double loss = 0.0;
    double dormant_frac_tau0 = 0.0;
    double dormant_frac_tau = 0.0;
    std::uint64_t recycled_count = 0;
    std::uint64_t seed = 0;
};

struct DormancyRow {
    std::uint64_t step_grad = 0;
    std::size_t layer = 0;
    double tau = 0.0;
    std::size_t dormant_count = 0;
    std::size_t layer_size = 0;
    double dormant_fraction = 0.0;
    std::optional<double> overlap;  // reference layer only, vs running union
};

struct OverlapRow {
    std::uint64_t step_grad = 0;
    double tau = 0.0;
    std::optional<double> vs_union;
    std::optional<double> vs_first;
};

struct RecycleRow {
    std::uint64_t step_grad = 0;
    std::size_t layer = 0;
    std::size_t n_recycled = 0;
    std::string strategy;
    double tau_or_fraction = 0.0;
};

struct MetricSeries {
    std::vector<MetricRow> rows;
    std::vector<DormancyRow> dormancy;
    std::vector<OverlapRow> overlap;
    std::vector<RecycleRow> recycle_events;
};

// Everything one training run owns. Instances are independent; a run is
// strictly sequential over its own state.
struct AgentState {
    Network online;
    Network target;
    OptState opt;
    ReplayBuffer buffer;
    std::uint64_t env_steps = 0;
    std::uint64_t post_warmup_env_steps = 0;
    std::uint64_t grad_steps = 0;
    std::uint64_t seed = 0;

    Rng action_rng;
    Rng sample_rng;
    Rng scoring_rng;
    Rng recycle_rng;

    // caches for MetricRow echoes, maintained by hooks
    double latest_dormant_tau0 = std::numeric_limits<double>::quiet_NaN();
    double latest_dormant_tau = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t recycled_total = 0;

    AgentState(const DQNConfig& config, std::size_t obs_dim, std::size_t n_actions,
               std::uint64_t seed);
};

// With probability 1-epsilon the argmax action (ties to the lowest index),
// otherwise a uniformly drawn one.
std::size_t epsilon_greedy(const std::vector<double>& q, double epsilon, Rng& rng);

// y_i = sum_k gamma^k r_k + gamma^m max_a Q_target(s_m, a), truncated at
// episode ends (no bootstrap past a terminal).
std::vector<double> td_targets(const std::vector<NStepItem>& batch, const Network& target_net,
                               double gamma);

// One uniform batch + Huber TD update of the online net; copies online into
// target every resolved_target_period gradient steps.
double train_step(AgentState& state, const DQNConfig& config);

// Hooks run after gradient steps whose index is a multiple of `period`,
// in registration order.
struct GradHook {
    std::string name;
    std::uint64_t period = 1000;
    std::function<void(AgentState&, MetricSeries&)> fn;
};

struct TrainResult {
    MetricSeries series;
    AgentState state;
};

// Online DQN training on an environment at the configured replay ratio.
TrainResult run_training(const EnvSpec& env_spec, const DQNConfig& config,
                         const std::vector<GradHook>& hooks, std::uint64_t seed);

// Gradient-only training on a frozen buffer. When `fixed_target_net` is set,
// bootstrap targets are replaced by that frozen network's value of the
// sampled (s, a) pairs.
TrainResult run_offline(const ReplayBuffer& frozen_buffer, const DQNConfig& config,
                        const std::vector<GradHook>& hooks, std::uint64_t seed,
                        std::uint64_t total_grad_steps,
                        const Network* fixed_target_net = nullptr,
                        std::uint64_t log_period = 100);

// Separate-stream policy evaluation; returns one episodic return per episode.
std::vector<double> evaluate_policy(const Network& net, const EnvSpec& env_spec,
                                    std::size_t n_episodes, std::uint64_t seed, double epsilon);

// The Q-network layout used by all recipes: hidden relu layers + identity head.
std::vector<LayerSpec> q_network_specs(std::size_t obs_dim, const std::vector<std::size_t>& hidden,
                                       std::size_t n_actions, Activation activation,
                                       double leaky_slope);

}  // namespace redolab
