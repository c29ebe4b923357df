#pragma once

#include <string>
#include <vector>

#include "redolab/agent.hpp"
#include "redolab/config.hpp"
#include "redolab/tasks.hpp"

namespace redolab {

// --- standard hooks -------------------------------------------------------

// Periodic dormancy measurement over a scoring batch from the replay buffer.
// One DormancyRow per (layer, tau); overlap is tracked on the last hidden
// layer, in both first-snapshot and running-union variants.
GradHook make_measure_hook(const MeasureSettings& measure, std::vector<double> taus);

// Periodic ReDo application (threshold selection at redo.tau).
GradHook make_redo_hook(const RedoSettings& redo, std::size_t scoring_batch);

// Periodic fraction-based recycling with an alternate selection strategy;
// the fraction follows the cosine schedule over `horizon` when enabled.
GradHook make_selection_recycle_hook(const SelectionSettings& selection,
                                     const RecycleStrategy& strategy, std::uint64_t period,
                                     std::uint64_t horizon, std::size_t scoring_batch);

// Periodic re-initialization of the last k layers (reset baseline).
GradHook make_reset_hook(std::uint64_t period, std::size_t k);

// --- supervised runners ---------------------------------------------------

struct SupervisedResult {
    MetricSeries series;
    Network net;
    double final_accuracy = 0.0;
};

// Minibatch SGD-momentum training with cross-entropy; labels re-shuffled
// every shuffle_period epochs when nonzero. Dormancy is measured at every
// epoch end on a scoring batch drawn from the inputs.
SupervisedResult run_supervised(const SupervisedTask& initial_task,
                                const SupervisedSettings& settings,
                                const std::vector<double>& taus, std::size_t scoring_batch,
                                std::size_t shuffle_period, std::uint64_t seed);

// Full-output regression onto frozen targets (distillation probe). `start`
// is the initial network (pretrained or fresh).
SupervisedResult run_regression(const RegressionTask& task, const Network& start,
                                std::size_t epochs, std::size_t batch_size, double learning_rate,
                                const std::vector<double>& taus, std::size_t scoring_batch,
                                std::uint64_t seed);

// --- recipes ---------------------------------------------------------------

struct Cell {
    std::string variant;
    std::uint64_t seed = 0;
    std::string dir;  // run directory, relative to the sweep root
};

// Executes every cell of the configured recipe, writing per-run CSVs, a
// resolved-config echo and a manifest under cfg.out_dir. Cells may run in
// parallel (cfg.jobs); outputs are byte-identical either way.
std::vector<Cell> run_recipe(const ExperimentConfig& cfg);

// Groups runs under `root` by a run_info field, aggregates final-window
// returns into IQM + stratified bootstrap CI per group and dormancy
// trajectories into per-step mean +/- CI, writing aggregate.json,
// returns_plot.csv and dormancy_plot.csv into out_dir.
void analyze(const std::string& root, const std::string& group_by, const std::string& out_dir,
             std::size_t final_window = 100, std::size_t bootstrap_samples = 2000,
             double alpha = 0.05, std::uint64_t bootstrap_seed = 1);

}  // namespace redolab
