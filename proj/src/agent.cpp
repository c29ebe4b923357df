#include "redolab/agent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "redolab/losses.hpp"

namespace redolab {

namespace {
// seed-stream tags; one fixed stream per random decision source
constexpr std::uint64_t kStreamNetInit = 1;
constexpr std::uint64_t kStreamEnv = 2;
constexpr std::uint64_t kStreamAction = 3;
constexpr std::uint64_t kStreamSample = 4;
constexpr std::uint64_t kStreamScoring = 5;
constexpr std::uint64_t kStreamRecycle = 6;

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
    return derive_seed(derive_seed(seed, kStreamEnv), episode);
}
}  // namespace

std::uint64_t DQNConfig::resolved_target_period() const {
    if (target_update_period != 0) return target_update_period;
    return static_cast<std::uint64_t>(std::llround(2000.0 / replay_ratio));
}

std::size_t DQNConfig::updates_for_env_step(std::uint64_t post_warmup_env_steps) const {
    if (replay_ratio >= 1.0) return static_cast<std::size_t>(std::llround(replay_ratio));
    const auto every = static_cast<std::uint64_t>(std::llround(1.0 / replay_ratio));
    return post_warmup_env_steps % every == 0 ? 1 : 0;
}

void DQNConfig::validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("config: gamma must be in [0,1)");
    if (epsilon_train < 0.0 || epsilon_train > 1.0 || epsilon_eval < 0.0 || epsilon_eval > 1.0)
        throw std::invalid_argument("config: epsilon must be in [0,1]");
    if (replay_ratio <= 0.0) throw std::invalid_argument("config: replay_ratio must be positive");
    const double rr = replay_ratio;
    const bool integral = std::fabs(rr - std::llround(rr)) < 1e-12 && rr >= 1.0;
    const bool reciprocal = rr < 1.0 && std::fabs(1.0 / rr - std::llround(1.0 / rr)) < 1e-12;
    if (!integral && !reciprocal)
        throw std::invalid_argument(
            "config: replay_ratio must be a positive integer or the reciprocal of one");
    if (batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
    if (batch_size > min_history)
        throw std::invalid_argument("config: batch_size must be <= min_history");
    if (n_step == 0) throw std::invalid_argument("config: n_step must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("config: need at least one hidden layer");
    if (learning_rate <= 0.0) throw std::invalid_argument("config: learning_rate must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("config: weight_decay must be >= 0");
}

std::vector<LayerSpec> q_network_specs(std::size_t obs_dim, const std::vector<std::size_t>& hidden,
                                       std::size_t n_actions, Activation activation,
                                       double leaky_slope) {
    std::vector<LayerSpec> specs;
    std::size_t in = obs_dim;
    for (std::size_t width : hidden) {
        LayerSpec s;
        s.in_dim = in;
        s.out_dim = width;
        s.activation = activation;
        s.leaky_slope = leaky_slope;
        specs.push_back(s);
        in = width;
    }
    LayerSpec head;
    head.in_dim = in;
    head.out_dim = n_actions;
    head.activation = Activation::identity;
    specs.push_back(head);
    return specs;
}

AgentState::AgentState(const DQNConfig& config, std::size_t obs_dim, std::size_t n_actions,
                       std::uint64_t seed_)
    : online(build_network(
          q_network_specs(obs_dim, config.hidden, n_actions, config.activation,
                          config.leaky_slope),
          derive_seed(seed_, kStreamNetInit))),
      target(online),
      buffer(config.buffer_capacity, config.n_step, config.gamma),
      seed(seed_),
      action_rng(seed_, kStreamAction),
      sample_rng(seed_, kStreamSample),
      scoring_rng(seed_, kStreamScoring),
      recycle_rng(seed_, kStreamRecycle) {
    opt = OptState::adam(config.learning_rate, config.weight_decay, 0.9, 0.999, config.adam_eps);
    opt.init_buffers(online);
}

std::size_t epsilon_greedy(const std::vector<double>& q, double epsilon, Rng& rng) {
    if (q.empty()) throw std::invalid_argument("epsilon_greedy: empty q");
    for (double v : q)
        if (!std::isfinite(v)) throw std::invalid_argument("epsilon_greedy: non-finite q value");
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("epsilon_greedy: epsilon must be in [0,1]");
    if (epsilon > 0.0 && rng.bernoulli(epsilon)) return rng.uniform_int(q.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i)
        if (q[i] > q[best]) best = i;  // ties keep the lowest index
    return best;
}

std::vector<double> td_targets(const std::vector<NStepItem>& batch, const Network& target_net,
                               double gamma) {
    // batch-forward the bootstrap states of non-terminal items
    std::vector<std::size_t> boot_rows;
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (!batch[i].terminal) boot_rows.push_back(i);

    std::vector<double> boot_max(batch.size(), 0.0);
    if (!boot_rows.empty()) {
        if (batch[boot_rows[0]].s_boot.size() != target_net.input_dim())
            throw std::invalid_argument("td_targets: state dim does not match target net");
        Matrix states(boot_rows.size(), target_net.input_dim());
        for (std::size_t r = 0; r < boot_rows.size(); ++r) {
            const auto& s = batch[boot_rows[r]].s_boot;
            std::copy(s.begin(), s.end(), states.row_ptr(r));
        }
        Matrix q = forward(target_net, states).outputs;
        for (std::size_t r = 0; r < boot_rows.size(); ++r) {
            const double* row = q.row_ptr(r);
            double mx = row[0];
            for (std::size_t a = 1; a < q.cols; ++a) mx = std::max(mx, row[a]);
            boot_max[boot_rows[r]] = mx;
        }
    }

    std::vector<double> targets(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& item = batch[i];
        double y = 0.0;
        double discount = 1.0;
        for (double r : item.rewards) {
            y += discount * r;
            discount *= gamma;
        }
        if (!item.terminal) y += discount * boot_max[i];
        targets[i] = y;
    }
    return targets;
}

namespace {

double dqn_update(AgentState& state, const DQNConfig& config,
                  const Network* fixed_target_net) {
    const auto batch = state.buffer.sample(config.batch_size, state.sample_rng);

    std::vector<double> targets;
    if (fixed_target_net == nullptr) {
        targets = td_targets(batch, state.target, config.gamma);
    } else {
        // frozen-target mode: regress Q(s, a) onto the frozen net's value
        Matrix states(batch.size(), fixed_target_net->input_dim());
        for (std::size_t i = 0; i < batch.size(); ++i)
            std::copy(batch[i].s.begin(), batch[i].s.end(), states.row_ptr(i));
        Matrix q = forward(*fixed_target_net, states).outputs;
        targets.resize(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) targets[i] = q(i, batch[i].a);
    }

    Matrix states(batch.size(), state.online.input_dim());
    for (std::size_t i = 0; i < batch.size(); ++i)
        std::copy(batch[i].s.begin(), batch[i].s.end(), states.row_ptr(i));
    const Matrix outputs = forward(state.online, states).outputs;

    Matrix q_sa(batch.size(), 1);
    Matrix y(batch.size(), 1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        q_sa(i, 0) = outputs(i, batch[i].a);
        y(i, 0) = targets[i];
    }
    const LossResult loss = huber_loss(q_sa, y, config.huber_delta);

    Matrix out_grad(batch.size(), outputs.cols);
    for (std::size_t i = 0; i < batch.size(); ++i) out_grad(i, batch[i].a) = loss.grad(i, 0);

    const Gradients grads = backward(state.online, states, out_grad);
    opt_step(state.online, grads, state.opt);

    ++state.grad_steps;
    if (state.grad_steps % config.resolved_target_period() == 0) state.target = state.online;
    return loss.loss;
}

void fire_hooks(const std::vector<GradHook>& hooks, AgentState& state, MetricSeries& series) {
    for (const auto& hook : hooks)
        if (hook.period > 0 && state.grad_steps % hook.period == 0) hook.fn(state, series);
}

}  // namespace

double train_step(AgentState& state, const DQNConfig& config) {
    if (state.buffer.size() < config.min_history)
        throw std::logic_error("train_step: buffer has fewer than min_history transitions");
    return dqn_update(state, config, nullptr);
}

TrainResult run_training(const EnvSpec& env_spec, const DQNConfig& config,
                         const std::vector<GradHook>& hooks, std::uint64_t seed) {
    config.validate();
    Env env(env_spec);
    std::vector<double> obs = env.reset(episode_seed(seed, 0));

    AgentState state(config, env.observation_dim(), env.action_count(), seed);
    MetricSeries series;

    std::uint64_t episode = 0;
    double episode_return = 0.0;
    double last_loss = std::numeric_limits<double>::quiet_NaN();

    while (state.env_steps < config.total_env_steps) {
        const bool warm = state.buffer.size() < config.min_history;
        std::size_t action;
        if (warm) {
            // initial collect: uniform random policy
            action = state.action_rng.uniform_int(env.action_count());
        } else {
            action = epsilon_greedy(forward_one(state.online, obs), config.epsilon_train,
                                    state.action_rng);
        }

        const StepResult step = env.step(action);
        ++state.env_steps;
        episode_return += step.reward;
        state.buffer.push({obs, action, step.reward, step.observation, step.done});
        obs = step.observation;

        if (step.done) {
            series.rows.push_back({state.env_steps, state.grad_steps, episode, episode_return,
                                   last_loss, state.latest_dormant_tau0, state.latest_dormant_tau,
                                   state.recycled_total, seed});
            ++episode;
            episode_return = 0.0;
            obs = env.reset(episode_seed(seed, episode));
        }

        if (!warm) {
            ++state.post_warmup_env_steps;
            const std::size_t updates = config.updates_for_env_step(state.post_warmup_env_steps);
            for (std::size_t u = 0; u < updates; ++u) {
                last_loss = dqn_update(state, config, nullptr);
                fire_hooks(hooks, state, series);
            }
        }
    }
    return {std::move(series), std::move(state)};
}

TrainResult run_offline(const ReplayBuffer& frozen_buffer, const DQNConfig& config,
                        const std::vector<GradHook>& hooks, std::uint64_t seed,
                        std::uint64_t total_grad_steps, const Network* fixed_target_net,
                        std::uint64_t log_period) {
    config.validate();
    if (frozen_buffer.size() == 0) throw std::invalid_argument("run_offline: empty buffer");

    const std::size_t obs_dim = frozen_buffer.item_at(0).s.size();
    // infer the action count from the stored transitions
    std::size_t n_actions = 0;
    for (std::size_t i = 0; i < frozen_buffer.size(); ++i)
        n_actions = std::max(n_actions, frozen_buffer.item_at(i).a + 1);

    AgentState state(config, obs_dim, n_actions, seed);
    state.buffer = frozen_buffer;
    MetricSeries series;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::uint64_t t = 0; t < total_grad_steps; ++t) {
        const double loss = dqn_update(state, config, fixed_target_net);
        fire_hooks(hooks, state, series);
        if (log_period > 0 && state.grad_steps % log_period == 0)
            series.rows.push_back({0, state.grad_steps, 0, nan, loss, state.latest_dormant_tau0,
                                   state.latest_dormant_tau, state.recycled_total, seed});
    }
    return {std::move(series), std::move(state)};
}

std::vector<double> evaluate_policy(const Network& net, const EnvSpec& env_spec,
                                    std::size_t n_episodes, std::uint64_t seed, double epsilon) {
    Env env(env_spec);
    std::vector<double> returns;
    returns.reserve(n_episodes);
    for (std::size_t e = 0; e < n_episodes; ++e) {
        Rng rng(derive_seed(seed, e * 2 + 1));
        std::vector<double> obs = env.reset(derive_seed(seed, e * 2));
        double ret = 0.0;
        while (true) {
            const std::size_t action = epsilon_greedy(forward_one(net, obs), epsilon, rng);
            const StepResult step = env.step(action);
            ret += step.reward;
            obs = step.observation;
            if (step.done) break;
        }
        returns.push_back(ret);
    }
    return returns;
}

}  // namespace redolab
