#include "redolab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "redolab/csvio.hpp"
#include "redolab/dormancy.hpp"
#include "redolab/losses.hpp"
#include "redolab/recycle.hpp"
#include "redolab/stats.hpp"

namespace redolab {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// measurement plumbing shared by the hook and the supervised runners
// ---------------------------------------------------------------------------

Matrix states_to_matrix(const std::vector<std::vector<double>>& states) {
    Matrix m(states.size(), states.front().size());
    for (std::size_t i = 0; i < states.size(); ++i)
        std::copy(states[i].begin(), states[i].end(), m.row_ptr(i));
    return m;
}

struct MeasureState {
    std::vector<double> taus;
    double tracked_tau = 0.025;
    std::map<double, OverlapTracker> trackers;  // per tau, on the last hidden layer

    explicit MeasureState(std::vector<double> taus_, double tracked)
        : taus(std::move(taus_)), tracked_tau(tracked) {}

    // measures all taus on one trace and appends rows; returns the overall
    // fractions for (tau=0, tracked tau) so callers can cache them
    std::pair<double, double> record(const Network& net, const ActivationTrace& trace,
                                     std::uint64_t step, MetricSeries& series) {
        double frac0 = std::numeric_limits<double>::quiet_NaN();
        double fracT = std::numeric_limits<double>::quiet_NaN();
        const std::size_t ref_layer = net.hidden_layer_count() - 1;
        for (double tau : taus) {
            const DormancyReport report = measure_dormancy(net, trace, tau, step);
            auto [it, inserted] = trackers.try_emplace(tau, ref_layer);
            it->second.observe(step, report.layers[ref_layer].dormant);
            const auto& point = it->second.series().back();
            for (std::size_t l = 0; l < report.layers.size(); ++l) {
                DormancyRow row;
                row.step_grad = step;
                row.layer = l;
                row.tau = tau;
                row.dormant_count = report.layers[l].dormant.size();
                row.layer_size = net.specs[l].out_dim;
                row.dormant_fraction = report.layers[l].dormant_fraction;
                if (l == ref_layer) row.overlap = point.vs_union;
                series.dormancy.push_back(row);
            }
            series.overlap.push_back({step, tau, point.vs_union, point.vs_first});
            if (tau == 0.0) frac0 = report.dormant_fraction;
            if (tau == tracked_tau) fracT = report.dormant_fraction;
        }
        return {frac0, fracT};
    }
};

std::uint64_t expected_grad_steps(const DQNConfig& dqn) {
    const std::uint64_t post =
        dqn.total_env_steps > dqn.min_history ? dqn.total_env_steps - dqn.min_history : 0;
    if (dqn.replay_ratio >= 1.0)
        return post * static_cast<std::uint64_t>(std::llround(dqn.replay_ratio));
    return post / static_cast<std::uint64_t>(std::llround(1.0 / dqn.replay_ratio));
}

}  // namespace

// ---------------------------------------------------------------------------
// hooks
// ---------------------------------------------------------------------------

GradHook make_measure_hook(const MeasureSettings& measure, std::vector<double> taus) {
    auto shared = std::make_shared<MeasureState>(std::move(taus), measure.tracked_tau);
    const std::size_t batch = measure.scoring_batch;
    GradHook hook;
    hook.name = "measure";
    hook.period = measure.period;
    hook.fn = [shared, batch](AgentState& state, MetricSeries& series) {
        const Matrix scoring =
            states_to_matrix(state.buffer.sample_states(batch, state.scoring_rng));
        const ActivationTrace trace = forward(state.online, scoring).trace;
        const auto [frac0, fracT] =
            shared->record(state.online, trace, state.grad_steps, series);
        state.latest_dormant_tau0 = frac0;
        state.latest_dormant_tau = fracT;
    };
    return hook;
}

GradHook make_redo_hook(const RedoSettings& redo, std::size_t scoring_batch) {
    GradHook hook;
    hook.name = "redo";
    hook.period = redo.period;
    hook.fn = [redo, scoring_batch](AgentState& state, MetricSeries& series) {
        const Matrix scoring =
            states_to_matrix(state.buffer.sample_states(scoring_batch, state.scoring_rng));
        const ActivationTrace trace = forward(state.online, scoring).trace;
        const RecycleEvent event = redo_step(state.online, trace, redo.tau, redo.strategy,
                                             state.opt, state.recycle_rng, state.grad_steps);
        state.recycled_total += event.total();
        for (std::size_t l = 0; l < event.recycled.size(); ++l)
            series.recycle_events.push_back({event.step_grad, l, event.recycled[l].size(),
                                             event.strategy, event.tau_or_fraction});
    };
    return hook;
}

GradHook make_selection_recycle_hook(const SelectionSettings& selection,
                                     const RecycleStrategy& strategy, std::uint64_t period,
                                     std::uint64_t horizon, std::size_t scoring_batch) {
    GradHook hook;
    hook.name = "selection_recycle";
    hook.period = period;
    hook.fn = [selection, strategy, horizon, scoring_batch](AgentState& state,
                                                            MetricSeries& series) {
        SelectionStrategy strat;
        strat.kind = selection.kind;
        strat.fraction = selection.cosine
                             ? cosine_fraction(std::min(state.grad_steps, horizon), horizon)
                             : selection.fraction;
        const Matrix scoring =
            states_to_matrix(state.buffer.sample_states(scoring_batch, state.scoring_rng));
        const ActivationTrace trace = forward(state.online, scoring).trace;
        const auto scores = neuron_scores(trace);
        const auto selected = select_for_recycling(scores, strat, state.online, state.recycle_rng);
        const RecycleEvent event =
            recycle_selected(state.online, selected, strategy, state.opt, state.recycle_rng,
                             state.grad_steps, selection_name(strat.kind), strat.fraction);
        state.recycled_total += event.total();
        for (std::size_t l = 0; l < event.recycled.size(); ++l)
            series.recycle_events.push_back({event.step_grad, l, event.recycled[l].size(),
                                             event.strategy, event.tau_or_fraction});
    };
    return hook;
}

GradHook make_reset_hook(std::uint64_t period, std::size_t k) {
    GradHook hook;
    hook.name = "reset";
    hook.period = period;
    hook.fn = [k](AgentState& state, MetricSeries& series) {
        reset_last_layers(state.online, k, state.opt, state.recycle_rng);
        series.recycle_events.push_back(
            {state.grad_steps, state.online.layer_count() - k, 0, "reset", static_cast<double>(k)});
    };
    return hook;
}

// ---------------------------------------------------------------------------
// supervised runners
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kSupNetStream = 21;
constexpr std::uint64_t kSupOrderStream = 22;
constexpr std::uint64_t kSupScoringStream = 23;
constexpr std::uint64_t kSupShuffleStream = 24;
constexpr std::uint64_t kSupTaskStream = 25;

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    return order;
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
    Matrix out(end - begin, src.cols);
    for (std::size_t r = begin; r < end; ++r)
        std::copy(src.row_ptr(idx[r]), src.row_ptr(idx[r]) + src.cols, out.row_ptr(r - begin));
    return out;
}

Matrix sample_input_rows(const Matrix& inputs, std::size_t count, Rng& rng) {
    Matrix out(count, inputs.cols);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t r = rng.uniform_int(inputs.rows);
        std::copy(inputs.row_ptr(r), inputs.row_ptr(r) + inputs.cols, out.row_ptr(i));
    }
    return out;
}

}  // namespace

SupervisedResult run_supervised(const SupervisedTask& initial_task,
                                const SupervisedSettings& settings,
                                const std::vector<double>& taus, std::size_t scoring_batch,
                                std::size_t shuffle_period, std::uint64_t seed) {
    SupervisedTask task = initial_task;
    const std::size_t n = task.inputs.rows;
    const std::size_t d = task.inputs.cols;

    auto specs = q_network_specs(d, settings.hidden, task.n_classes, Activation::relu, 0.01);
    Network net = build_network(specs, derive_seed(seed, kSupNetStream));
    OptState opt = OptState::sgd_momentum(settings.learning_rate, settings.momentum);
    opt.init_buffers(net);

    Rng order_rng(seed, kSupOrderStream);
    Rng scoring_rng(seed, kSupScoringStream);
    MeasureState measure(taus, 0.025);

    SupervisedResult result{MetricSeries{}, net, 0.0};
    std::uint64_t grad_steps = 0;
    std::uint64_t samples_seen = 0;

    for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
        if (shuffle_period > 0 && epoch > 0 && epoch % shuffle_period == 0)
            task = shuffle_labels(task, derive_seed(derive_seed(seed, kSupShuffleStream), epoch));

        const auto order = permutation(n, order_rng);
        double loss_acc = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += settings.batch_size) {
            const std::size_t end = std::min(begin + settings.batch_size, n);
            const Matrix x = gather_rows(task.inputs, order, begin, end);
            std::vector<std::size_t> labels(end - begin);
            for (std::size_t i = begin; i < end; ++i) labels[i - begin] = task.labels[order[i]];

            const Matrix outputs = forward(net, x).outputs;
            const LossResult loss = cross_entropy_loss(outputs, labels);
            const Gradients grads = backward(net, x, loss.grad);
            opt_step(net, grads, opt);
            loss_acc += loss.loss;
            ++batches;
            ++grad_steps;
            samples_seen += end - begin;
        }

        // train accuracy over the whole dataset
        const Matrix outputs = forward(net, task.inputs).outputs;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = outputs.row_ptr(i);
            std::size_t best = 0;
            for (std::size_t j = 1; j < outputs.cols; ++j)
                if (row[j] > row[best]) best = j;
            if (best == task.labels[i]) ++correct;
        }
        const double accuracy = static_cast<double>(correct) / static_cast<double>(n);

        const Matrix scoring = sample_input_rows(task.inputs, scoring_batch, scoring_rng);
        const ActivationTrace trace = forward(net, scoring).trace;
        const auto [frac0, fracT] = measure.record(net, trace, grad_steps, result.series);

        result.series.rows.push_back({samples_seen, grad_steps, epoch, accuracy,
                                     loss_acc / static_cast<double>(batches), frac0, fracT, 0,
                                     seed});
        result.final_accuracy = accuracy;
    }
    result.net = std::move(net);
    return result;
}

SupervisedResult run_regression(const RegressionTask& task, const Network& start,
                                std::size_t epochs, std::size_t batch_size, double learning_rate,
                                const std::vector<double>& taus, std::size_t scoring_batch,
                                std::uint64_t seed) {
    Network net = start;
    OptState opt = OptState::adam(learning_rate);
    opt.init_buffers(net);
    const std::size_t n = task.inputs.rows;

    Rng order_rng(seed, kSupOrderStream);
    Rng scoring_rng(seed, kSupScoringStream);
    MeasureState measure(taus, 0.025);

    SupervisedResult result{MetricSeries{}, net, 0.0};
    std::uint64_t grad_steps = 0;
    std::uint64_t samples_seen = 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const auto order = permutation(n, order_rng);
        double loss_acc = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, n);
            const Matrix x = gather_rows(task.inputs, order, begin, end);
            const Matrix y = gather_rows(task.targets, order, begin, end);
            const Matrix outputs = forward(net, x).outputs;
            const LossResult loss = mse_loss(outputs, y);
            const Gradients grads = backward(net, x, loss.grad);
            opt_step(net, grads, opt);
            loss_acc += loss.loss;
            ++batches;
            ++grad_steps;
            samples_seen += end - begin;
        }
        const Matrix scoring = sample_input_rows(task.inputs, scoring_batch, scoring_rng);
        const ActivationTrace trace = forward(net, scoring).trace;
        const auto [frac0, fracT] = measure.record(net, trace, grad_steps, result.series);
        result.series.rows.push_back({samples_seen, grad_steps, epoch, nan,
                                     loss_acc / static_cast<double>(batches), frac0, fracT, 0,
                                     seed});
    }
    result.net = std::move(net);
    return result;
}

// ---------------------------------------------------------------------------
// recipes
// ---------------------------------------------------------------------------

namespace {

struct CellJob {
    std::string variant;
    std::uint64_t seed = 0;
    std::function<void(const std::string& dir)> run;
};

void write_run_info(const std::string& dir, const ExperimentConfig& cfg,
                    const std::string& variant, std::uint64_t seed,
                    const std::map<std::string, double>& extra = {}) {
    json info;
    info["recipe"] = recipe_name(cfg.recipe);
    info["variant"] = variant;
    info["seed"] = seed;
    info["replay_ratio"] = cfg.dqn.replay_ratio;
    for (const auto& [k, v] : extra) info[k] = v;
    write_text_file(dir + "/run_info.json", info.dump(2) + "\n");
}

std::vector<GradHook> standard_hooks(const ExperimentConfig& cfg) {
    std::vector<GradHook> hooks;
    hooks.push_back(make_measure_hook(cfg.measure, cfg.taus));
    if (cfg.redo.enabled) hooks.push_back(make_redo_hook(cfg.redo, cfg.measure.scoring_batch));
    return hooks;
}

// one online-DQN cell: train, dump CSVs + final checkpoint + run info
void run_dqn_cell(const ExperimentConfig& cfg, const std::string& variant, std::uint64_t seed,
                  const std::string& dir, const std::vector<GradHook>& extra_hooks = {}) {
    std::vector<GradHook> hooks = standard_hooks(cfg);
    hooks.insert(hooks.end(), extra_hooks.begin(), extra_hooks.end());
    TrainResult result = run_training(cfg.env, cfg.dqn, hooks, seed);
    write_metric_csv(result.series, dir);
    save_network(result.state.online, dir + "/final.net");
    write_run_info(dir, cfg, variant, seed,
                   {{"redo", cfg.redo.enabled ? 1.0 : 0.0}, {"redo_tau", cfg.redo.tau}});
}

ReplayBuffer collect_random_buffer(const EnvSpec& spec, const DQNConfig& dqn,
                                   std::uint64_t env_steps, std::uint64_t seed) {
    Env env(spec);
    Rng rng(seed, 71);
    ReplayBuffer buffer(env_steps, dqn.n_step, dqn.gamma);
    std::uint64_t episode = 0;
    std::vector<double> obs = env.reset(derive_seed(derive_seed(seed, 72), episode));
    for (std::uint64_t t = 0; t < env_steps; ++t) {
        const std::size_t action = rng.uniform_int(env.action_count());
        const StepResult step = env.step(action);
        buffer.push({obs, action, step.reward, step.observation, step.done});
        obs = step.observation;
        if (step.done) {
            ++episode;
            obs = env.reset(derive_seed(derive_seed(seed, 72), episode));
        }
    }
    return buffer;
}

void run_offline_cell(const ExperimentConfig& cfg, const std::string& variant, std::uint64_t seed,
                      const std::string& dir, bool fixed_random_targets) {
    const ReplayBuffer buffer =
        collect_random_buffer(cfg.env, cfg.dqn, cfg.offline.behavior_env_steps, seed);
    const std::vector<GradHook> hooks = standard_hooks(cfg);

    std::unique_ptr<Network> teacher;
    if (fixed_random_targets) {
        Env env(cfg.env);
        teacher = std::make_unique<Network>(
            build_network(q_network_specs(env.observation_dim(), cfg.dqn.hidden,
                                          env.action_count(), cfg.dqn.activation,
                                          cfg.dqn.leaky_slope),
                          derive_seed(seed, 73)));
    }
    TrainResult result = run_offline(buffer, cfg.dqn, hooks, seed, cfg.offline.grad_steps,
                                     teacher.get());
    write_metric_csv(result.series, dir);
    save_network(result.state.online, dir + "/final.net");
    write_run_info(dir, cfg, variant, seed,
                   {{"fixed_random_targets", fixed_random_targets ? 1.0 : 0.0}});
}

void run_supervised_cell(const ExperimentConfig& cfg, const std::string& variant,
                         std::uint64_t seed, const std::string& dir, std::size_t shuffle_period) {
    const SupervisedTask task =
        make_classification_task(cfg.supervised.n, cfg.supervised.d, cfg.supervised.classes,
                                 derive_seed(seed, kSupTaskStream), cfg.supervised.noise_sigma);
    SupervisedResult result = run_supervised(task, cfg.supervised, cfg.taus,
                                             cfg.measure.scoring_batch, shuffle_period, seed);
    write_metric_csv(result.series, dir);
    save_network(result.net, dir + "/final.net");
    write_run_info(dir, cfg, variant, seed,
                   {{"shuffle_period", static_cast<double>(shuffle_period)}});
}

void run_distill_cell(const ExperimentConfig& cfg, const std::string& variant, std::uint64_t seed,
                      const std::string& dir, bool pretrained_start) {
    // teacher: a well-performing low-RR agent (or a supplied checkpoint)
    Network teacher = [&]() {
        if (!cfg.distill.teacher_checkpoint.empty()) {
            if (!std::filesystem::exists(cfg.distill.teacher_checkpoint))
                throw std::runtime_error("distill_probe: missing checkpoint " +
                                         cfg.distill.teacher_checkpoint);
            return load_network(cfg.distill.teacher_checkpoint);
        }
        ExperimentConfig teacher_cfg = cfg;
        teacher_cfg.dqn.replay_ratio = 0.25;
        teacher_cfg.dqn.total_env_steps = cfg.distill.teacher_env_steps;
        teacher_cfg.dqn.target_update_period = 0;
        return run_training(teacher_cfg.env, teacher_cfg.dqn, {}, derive_seed(seed, 81))
            .state.online;
    }();

    // victim: a high-RR agent that accumulates dormant neurons
    ExperimentConfig victim_cfg = cfg;
    victim_cfg.dqn.replay_ratio = 1.0;
    victim_cfg.dqn.total_env_steps = cfg.distill.victim_env_steps;
    victim_cfg.dqn.target_update_period = 0;
    TrainResult victim =
        run_training(victim_cfg.env, victim_cfg.dqn, {}, derive_seed(seed, 82));

    Rng input_rng(seed, 83);
    const Matrix inputs = states_to_matrix(
        victim.state.buffer.sample_states(cfg.distill.input_batch, input_rng));
    const RegressionTask task = make_regression_task(inputs, teacher);

    const Network start =
        pretrained_start
            ? victim.state.online
            : build_network(victim.state.online.specs, derive_seed(seed, 84));
    SupervisedResult result =
        run_regression(task, start, cfg.distill.epochs, cfg.distill.batch_size,
                       cfg.distill.learning_rate, cfg.taus, cfg.measure.scoring_batch, seed);
    write_metric_csv(result.series, dir);
    save_network(result.net, dir + "/final.net");
    write_run_info(dir, cfg, variant, seed, {{"pretrained", pretrained_start ? 1.0 : 0.0}});
}

void run_prune_cell(const ExperimentConfig& cfg, const std::string& variant, std::uint64_t seed,
                    const std::string& dir) {
    struct ProbePoint {
        std::uint64_t step_grad;
        std::size_t n_pruned;
        double return_before;
        double return_after;
    };
    auto probes = std::make_shared<std::vector<ProbePoint>>();

    std::set<std::uint64_t> checkpoint_steps;
    const std::uint64_t total = expected_grad_steps(cfg.dqn);
    for (double f : cfg.prune.checkpoints)
        checkpoint_steps.insert(static_cast<std::uint64_t>(std::llround(f * total)));

    const EnvSpec env_spec = cfg.env;
    const std::size_t eval_episodes = cfg.prune.eval_episodes;
    const std::size_t scoring_batch = cfg.measure.scoring_batch;

    GradHook prune_hook;
    prune_hook.name = "prune";
    prune_hook.period = 1;
    prune_hook.fn = [=](AgentState& state, MetricSeries&) {
        if (!checkpoint_steps.count(state.grad_steps)) return;
        const std::uint64_t eval_seed = derive_seed(state.seed, 91 + state.grad_steps);
        const auto before =
            evaluate_policy(state.online, env_spec, eval_episodes, eval_seed, 0.0);

        const Matrix scoring =
            states_to_matrix(state.buffer.sample_states(scoring_batch, state.scoring_rng));
        const ActivationTrace trace = forward(state.online, scoring).trace;
        const auto scores = neuron_scores(trace);
        std::vector<std::set<std::size_t>> dormant;
        std::size_t n_pruned = 0;
        for (std::size_t l = 0; l < scores.size(); ++l) {
            dormant.push_back(dormant_set(scores[l], 0.0, state.online.prune_mask[l]));
            n_pruned += dormant.back().size();
        }
        prune_dormant(state.online, dormant);

        const auto after =
            evaluate_policy(state.online, env_spec, eval_episodes, eval_seed, 0.0);
        double sum_before = 0.0, sum_after = 0.0;
        for (double r : before) sum_before += r;
        for (double r : after) sum_after += r;
        probes->push_back({state.grad_steps, n_pruned, sum_before, sum_after});
    };

    run_dqn_cell(cfg, variant, seed, dir, {prune_hook});

    std::ostringstream out;
    out << "step_grad,n_pruned,return_before,return_after\n";
    for (const auto& p : *probes)
        out << p.step_grad << "," << p.n_pruned << "," << format_double(p.return_before) << ","
            << format_double(p.return_after) << "\n";
    write_text_file(dir + "/prune_probe.csv", out.str());
}

std::string rr_label(double rr) {
    std::ostringstream ss;
    ss << "rr" << rr;
    return ss.str();
}

std::vector<CellJob> build_jobs(const ExperimentConfig& cfg) {
    std::vector<CellJob> jobs;
    auto add = [&](const std::string& variant, std::uint64_t seed,
                   std::function<void(const std::string&)> fn) {
        jobs.push_back({variant, seed, std::move(fn)});
    };

    switch (cfg.recipe) {
        case Recipe::dormancy_growth:
            for (auto seed : cfg.seeds)
                add("dqn", seed, [cfg, seed](const std::string& dir) {
                    run_dqn_cell(cfg, "dqn", seed, dir);
                });
            break;

        case Recipe::supervised_nonstationary:
            for (auto seed : cfg.seeds) {
                add("fixed", seed, [cfg, seed](const std::string& dir) {
                    run_supervised_cell(cfg, "fixed", seed, dir, 0);
                });
                add("shuffled", seed, [cfg, seed](const std::string& dir) {
                    run_supervised_cell(cfg, "shuffled", seed, dir,
                                        cfg.supervised.shuffle_period);
                });
            }
            break;

        case Recipe::offline_fixed_buffer:
            for (auto seed : cfg.seeds)
                add("offline", seed, [cfg, seed](const std::string& dir) {
                    run_offline_cell(cfg, "offline", seed, dir, false);
                });
            break;

        case Recipe::fixed_random_targets:
            for (auto seed : cfg.seeds)
                add("fixed_targets", seed, [cfg, seed](const std::string& dir) {
                    run_offline_cell(cfg, "fixed_targets", seed, dir, true);
                });
            break;

        case Recipe::rr_sweep:
            for (double rr : cfg.sweep_replay_ratios)
                for (auto seed : cfg.seeds) {
                    ExperimentConfig cell = cfg;
                    cell.dqn.replay_ratio = rr;
                    const std::string variant = rr_label(rr);
                    add(variant, seed, [cell, variant, seed](const std::string& dir) {
                        run_dqn_cell(cell, variant, seed, dir);
                    });
                }
            break;

        case Recipe::redo_mitigation:
            for (auto seed : cfg.seeds) {
                ExperimentConfig with = cfg;
                with.redo.enabled = true;
                add("redo", seed, [with, seed](const std::string& dir) {
                    run_dqn_cell(with, "redo", seed, dir);
                });
                ExperimentConfig without = cfg;
                without.redo.enabled = false;
                add("no_redo", seed, [without, seed](const std::string& dir) {
                    run_dqn_cell(without, "no_redo", seed, dir);
                });
            }
            break;

        case Recipe::lr_scaled:
            for (auto seed : cfg.seeds) {
                ExperimentConfig base = cfg;
                base.dqn.replay_ratio = 1.0;
                base.redo.enabled = false;
                add("base", seed, [base, seed](const std::string& dir) {
                    run_dqn_cell(base, "base", seed, dir);
                });
                ExperimentConfig quarter = base;
                quarter.dqn.learning_rate = cfg.dqn.learning_rate / 4.0;
                add("lr_div4", seed, [quarter, seed](const std::string& dir) {
                    run_dqn_cell(quarter, "lr_div4", seed, dir);
                });
                ExperimentConfig redo = base;
                redo.redo.enabled = true;
                add("redo", seed, [redo, seed](const std::string& dir) {
                    run_dqn_cell(redo, "redo", seed, dir);
                });
            }
            break;

        case Recipe::width_sweep:
            for (std::size_t mult : cfg.sweep_width_multipliers)
                for (int redo_on = 0; redo_on < 2; ++redo_on)
                    for (auto seed : cfg.seeds) {
                        ExperimentConfig cell = cfg;
                        cell.dqn.hidden.clear();
                        for (std::size_t h : cfg.dqn.hidden) cell.dqn.hidden.push_back(h * mult);
                        cell.redo.enabled = redo_on == 1;
                        const std::string variant =
                            "w" + std::to_string(mult) + (redo_on ? "_redo" : "");
                        add(variant, seed, [cell, variant, seed](const std::string& dir) {
                            run_dqn_cell(cell, variant, seed, dir);
                        });
                    }
            break;

        case Recipe::baseline_compare:
            for (auto seed : cfg.seeds) {
                ExperimentConfig vanilla = cfg;
                vanilla.redo.enabled = false;
                add("vanilla", seed, [vanilla, seed](const std::string& dir) {
                    run_dqn_cell(vanilla, "vanilla", seed, dir);
                });
                ExperimentConfig redo = cfg;
                redo.redo.enabled = true;
                add("redo", seed, [redo, seed](const std::string& dir) {
                    run_dqn_cell(redo, "redo", seed, dir);
                });
                ExperimentConfig reset = cfg;
                reset.redo.enabled = false;
                const auto reset_hook =
                    make_reset_hook(cfg.baseline.reset_period, cfg.baseline.reset_k);
                add("reset", seed, [reset, reset_hook, seed](const std::string& dir) {
                    run_dqn_cell(reset, "reset", seed, dir, {reset_hook});
                });
                ExperimentConfig wd = cfg;
                wd.redo.enabled = false;
                wd.dqn.weight_decay = cfg.baseline.weight_decay;
                add("wd", seed, [wd, seed](const std::string& dir) {
                    run_dqn_cell(wd, "wd", seed, dir);
                });
            }
            break;

        case Recipe::selection_compare: {
            const std::vector<SelectionKind> kinds = {SelectionKind::score,
                                                      SelectionKind::inverse_score,
                                                      SelectionKind::random,
                                                      SelectionKind::utility};
            for (SelectionKind kind : kinds)
                for (auto seed : cfg.seeds) {
                    ExperimentConfig cell = cfg;
                    cell.redo.enabled = false;  // recycling happens via the selection hook
                    SelectionSettings sel = cfg.selection;
                    sel.kind = kind;
                    const std::string variant = selection_name(kind);
                    const auto hook = make_selection_recycle_hook(
                        sel, cfg.redo.strategy, cfg.redo.period, expected_grad_steps(cell.dqn),
                        cfg.measure.scoring_batch);
                    add(variant, seed, [cell, hook, variant, seed](const std::string& dir) {
                        run_dqn_cell(cell, variant, seed, dir, {hook});
                    });
                }
            break;
        }

        case Recipe::distill_probe:
            for (auto seed : cfg.seeds) {
                add("pretrained", seed, [cfg, seed](const std::string& dir) {
                    run_distill_cell(cfg, "pretrained", seed, dir, true);
                });
                add("fresh", seed, [cfg, seed](const std::string& dir) {
                    run_distill_cell(cfg, "fresh", seed, dir, false);
                });
            }
            break;

        case Recipe::prune_probe:
            for (auto seed : cfg.seeds)
                add("prune", seed, [cfg, seed](const std::string& dir) {
                    run_prune_cell(cfg, "prune", seed, dir);
                });
            break;
    }
    return jobs;
}

}  // namespace

std::vector<Cell> run_recipe(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    write_text_file(cfg.out_dir + "/config_resolved.cfg", render_config(cfg));

    std::vector<CellJob> jobs = build_jobs(cfg);
    std::vector<Cell> cells;
    for (const auto& job : jobs) {
        const std::string rel = job.variant + "/seed" + std::to_string(job.seed);
        cells.push_back({job.variant, job.seed, rel});
    }

    const std::size_t jobs_n = std::max<std::size_t>(1, cfg.jobs);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                const std::string dir = cfg.out_dir + "/" + cells[i].dir;
                ensure_dir(dir);
                jobs[i].run(dir);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    if (jobs_n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs_n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    json manifest;
    manifest["recipe"] = recipe_name(cfg.recipe);
    manifest["cell_count"] = cells.size();
    manifest["cells"] = json::array();
    for (const auto& c : cells)
        manifest["cells"].push_back({{"variant", c.variant}, {"seed", c.seed}, {"dir", c.dir}});
    write_text_file(cfg.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    return cells;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> discover_run_dirs(const std::string& root) {
    std::vector<std::string> dirs;
    const std::string manifest_path = root + "/manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        const json manifest = json::parse(read_text_file(manifest_path));
        for (const auto& cell : manifest.at("cells"))
            dirs.push_back(root + "/" + cell.at("dir").get<std::string>());
        return dirs;
    }
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
        if (entry.is_regular_file() && entry.path().filename() == "run_info.json")
            dirs.push_back(entry.path().parent_path().string());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

std::string group_label(const json& info, const std::string& group_by) {
    if (!info.contains(group_by))
        throw std::runtime_error("analyze: run_info has no field '" + group_by + "'");
    const auto& v = info.at(group_by);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return format_double(v.get<double>());
    return v.dump();
}

}  // namespace

void analyze(const std::string& root, const std::string& group_by, const std::string& out_dir,
             std::size_t final_window, std::size_t bootstrap_samples, double alpha,
             std::uint64_t bootstrap_seed) {
    const auto dirs = discover_run_dirs(root);
    if (dirs.empty()) throw std::runtime_error("analyze: no runs under " + root);

    struct GroupData {
        std::vector<double> final_returns;
        // (tau, step) -> per-seed overall dormant fractions
        std::map<std::pair<double, std::uint64_t>, std::vector<double>> dormancy;
    };
    std::map<std::string, GroupData> groups;

    for (const auto& dir : dirs) {
        const json info = json::parse(read_text_file(dir + "/run_info.json"));
        const std::string label = group_label(info, group_by);
        const LoadedRun run = load_metric_csv(dir);
        GroupData& g = groups[label];

        std::vector<double> returns;
        for (const auto& row : run.rows)
            if (!std::isnan(row.ret)) returns.push_back(row.ret);
        if (!returns.empty()) {
            const std::size_t window = std::min(final_window, returns.size());
            double acc = 0.0;
            for (std::size_t i = returns.size() - window; i < returns.size(); ++i)
                acc += returns[i];
            g.final_returns.push_back(acc / static_cast<double>(window));
        }

        // overall dormant fraction per (tau, step): sum counts over layers
        std::map<std::pair<double, std::uint64_t>, std::pair<std::size_t, std::size_t>> acc;
        for (const auto& row : run.dormancy) {
            auto& cell = acc[{row.tau, row.step_grad}];
            cell.first += row.dormant_count;
            cell.second += row.layer_size;
        }
        for (const auto& [key, counts] : acc)
            g.dormancy[key].push_back(static_cast<double>(counts.first) /
                                      static_cast<double>(counts.second));
    }

    ensure_dir(out_dir);
    Rng boot_rng(bootstrap_seed);

    json aggregate;
    aggregate["group_by"] = group_by;
    aggregate["groups"] = json::object();
    std::ostringstream returns_csv;
    returns_csv << "x,y,y_lo,y_hi,group\n";
    std::size_t group_index = 0;
    for (const auto& [label, data] : groups) {
        if (data.final_returns.empty()) {
            ++group_index;
            continue;
        }
        RunMatrix matrix;
        matrix.scores["all"] = data.final_returns;
        const BootstrapInterval ci = bootstrap_ci(matrix, bootstrap_samples, alpha, boot_rng);
        json entry;
        entry["statistic"] = "iqm";
        entry["point"] = ci.point;
        entry["ci_lo"] = ci.lo;
        entry["ci_hi"] = ci.hi;
        entry["n_seeds"] = data.final_returns.size();
        entry["n_tasks"] = 1;
        entry["B"] = bootstrap_samples;
        entry["alpha"] = alpha;
        entry["degenerate"] = ci.degenerate;
        aggregate["groups"][label] = entry;
        returns_csv << group_index << "," << format_double(ci.point) << ","
                    << format_double(ci.lo) << "," << format_double(ci.hi) << "," << label << "\n";
        ++group_index;
    }
    write_text_file(out_dir + "/aggregate.json", aggregate.dump(2) + "\n");
    write_text_file(out_dir + "/returns_plot.csv", returns_csv.str());

    // dormancy trajectories: per-step mean +/- normal 95% CI across seeds
    std::ostringstream dorm_csv;
    dorm_csv << "x,y,y_lo,y_hi,group\n";
    for (const auto& [label, data] : groups) {
        for (const auto& [key, values] : data.dormancy) {
            const auto& [tau, step] = key;
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            const double se = values.size() > 1
                                  ? std::sqrt(var / static_cast<double>(values.size() - 1)) /
                                        std::sqrt(static_cast<double>(values.size()))
                                  : 0.0;
            dorm_csv << step << "," << format_double(mean) << ","
                     << format_double(mean - 1.96 * se) << "," << format_double(mean + 1.96 * se)
                     << "," << label << "|tau=" << format_double(tau) << "\n";
        }
    }
    write_text_file(out_dir + "/dormancy_plot.csv", dorm_csv.str());
}

}  // namespace redolab
