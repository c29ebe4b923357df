#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "redolab/agent.hpp"
#include "redolab/envs.hpp"
#include "redolab/recycle.hpp"

namespace redolab {

// Config files are structured text: `key = value` lines grouped under
// [section] headers. Values: numbers, booleans, "strings", and flat arrays
// [a, b, c]. `#` starts a comment. Keys are addressed as "section.key";
// top-level keys have no dot. Unknown keys are rejected at load time.
struct ConfigValue {
    enum class Kind { number, boolean, string, number_array, string_array };
    Kind kind = Kind::number;
    double num = 0.0;
    bool b = false;
    std::string str;
    std::vector<double> nums;
    std::vector<std::string> strs;
};

using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_config_text(const std::string& text);

// applies one `--set section.key=value` override; the value is parsed with
// the same grammar as file values
void apply_override(ConfigTable& table, const std::string& assignment);

enum class Recipe {
    dormancy_growth,
    supervised_nonstationary,
    offline_fixed_buffer,
    fixed_random_targets,
    rr_sweep,
    redo_mitigation,
    lr_scaled,
    width_sweep,
    baseline_compare,
    selection_compare,
    distill_probe,
    prune_probe,
};

Recipe recipe_from_name(const std::string& name);
std::string recipe_name(Recipe r);

struct RedoSettings {
    bool enabled = false;
    double tau = 0.1;
    std::uint64_t period = 1000;
    RecycleStrategy strategy;
};

struct SelectionSettings {
    SelectionKind kind = SelectionKind::score;
    double fraction = 0.1;
    bool cosine = true;  // fraction follows the cosine schedule over the run
};

struct MeasureSettings {
    std::uint64_t period = 500;      // gradient steps between dormancy measurements
    std::size_t scoring_batch = 64;  // minibatch size for estimating neuron scores
    double tracked_tau = 0.025;      // tau echoed into MetricRow.dormant_frac_tau
};

struct SupervisedSettings {
    std::size_t n = 10000;
    std::size_t d = 16;
    std::size_t classes = 10;
    std::size_t epochs = 100;
    std::size_t shuffle_period = 20;  // epochs between label shuffles (variant-dependent)
    std::size_t batch_size = 256;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double noise_sigma = 0.5;
    std::vector<std::size_t> hidden = {128, 128};
};

struct OfflineSettings {
    std::uint64_t behavior_env_steps = 10000;  // uniform-random collection
    std::uint64_t grad_steps = 50000;
};

struct BaselineSettings {
    std::uint64_t reset_period = 4000;  // gradient steps between last-layer resets
    std::size_t reset_k = 1;
    double weight_decay = 1e-5;
};

struct DistillSettings {
    std::string teacher_checkpoint;  // empty: train the teacher in-recipe
    std::uint64_t teacher_env_steps = 50000;
    std::uint64_t victim_env_steps = 100000;
    std::size_t input_batch = 2048;
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
};

struct PruneSettings {
    std::vector<double> checkpoints = {0.25, 0.5, 0.75};  // fractions of total grad steps
    std::size_t eval_episodes = 20;
};

struct ExperimentConfig {
    Recipe recipe = Recipe::dormancy_growth;
    EnvSpec env;
    DQNConfig dqn;
    RedoSettings redo;
    SelectionSettings selection;
    MeasureSettings measure;
    SupervisedSettings supervised;
    OfflineSettings offline;
    BaselineSettings baseline;
    DistillSettings distill;
    PruneSettings prune;
    std::vector<double> taus = {0.0, 0.025, 0.1};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> sweep_replay_ratios = {0.25, 0.5, 1, 2, 4};
    std::vector<std::size_t> sweep_width_multipliers = {1, 2, 4};
    std::string out_dir = "runs";
    std::size_t jobs = 1;
};

// Typed extraction; throws naming the first unknown or ill-typed key.
ExperimentConfig config_from_table(const ConfigTable& table);

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides = {});

// Canonical echo of the resolved config, parseable by parse_config_text.
std::string render_config(const ExperimentConfig& cfg);

}  // namespace redolab
