#include "redolab/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "redolab/csvio.hpp"

namespace redolab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

ConfigValue parse_value(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    if (v.empty()) throw std::invalid_argument("config: empty value for key '" + key + "'");
    ConfigValue out;
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw std::invalid_argument("config: unterminated string for key '" + key + "'");
        out.kind = ConfigValue::Kind::string;
        out.str = v.substr(1, v.size() - 2);
        return out;
    }
    if (v == "true" || v == "false") {
        out.kind = ConfigValue::Kind::boolean;
        out.b = v == "true";
        return out;
    }
    if (v.front() == '[') {
        if (v.back() != ']')
            throw std::invalid_argument("config: unterminated array for key '" + key + "'");
        const std::string inner = v.substr(1, v.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        std::vector<std::string> items;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) items.push_back(item);
        }
        if (!items.empty() && items.front().front() == '"') {
            out.kind = ConfigValue::Kind::string_array;
            for (auto& it : items) {
                if (it.size() < 2 || it.front() != '"' || it.back() != '"')
                    throw std::invalid_argument("config: bad string array for key '" + key + "'");
                out.strs.push_back(it.substr(1, it.size() - 2));
            }
            return out;
        }
        out.kind = ConfigValue::Kind::number_array;
        for (auto& it : items) {
            double num = 0.0;
            if (!parse_number(it, num))
                throw std::invalid_argument("config: bad number '" + it + "' in array for key '" +
                                            key + "'");
            out.nums.push_back(num);
        }
        return out;
    }
    double num = 0.0;
    if (!parse_number(v, num))
        throw std::invalid_argument("config: cannot parse value '" + v + "' for key '" + key +
                                    "'");
    out.kind = ConfigValue::Kind::number;
    out.num = num;
    return out;
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
    ConfigTable table;
    std::string section;
    std::stringstream ss(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        table[full] = parse_value(line.substr(eq + 1), full);
    }
    return table;
}

void apply_override(ConfigTable& table, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override '" + assignment + "': expected key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("override '" + assignment + "': empty key");
    table[key] = parse_value(assignment.substr(eq + 1), key);
}

Recipe recipe_from_name(const std::string& name) {
    static const std::map<std::string, Recipe> names = {
        {"dormancy_growth", Recipe::dormancy_growth},
        {"supervised_nonstationary", Recipe::supervised_nonstationary},
        {"offline_fixed_buffer", Recipe::offline_fixed_buffer},
        {"fixed_random_targets", Recipe::fixed_random_targets},
        {"rr_sweep", Recipe::rr_sweep},
        {"redo_mitigation", Recipe::redo_mitigation},
        {"lr_scaled", Recipe::lr_scaled},
        {"width_sweep", Recipe::width_sweep},
        {"baseline_compare", Recipe::baseline_compare},
        {"selection_compare", Recipe::selection_compare},
        {"distill_probe", Recipe::distill_probe},
        {"prune_probe", Recipe::prune_probe},
    };
    const auto it = names.find(name);
    if (it == names.end()) throw std::invalid_argument("unknown recipe '" + name + "'");
    return it->second;
}

std::string recipe_name(Recipe r) {
    switch (r) {
        case Recipe::dormancy_growth: return "dormancy_growth";
        case Recipe::supervised_nonstationary: return "supervised_nonstationary";
        case Recipe::offline_fixed_buffer: return "offline_fixed_buffer";
        case Recipe::fixed_random_targets: return "fixed_random_targets";
        case Recipe::rr_sweep: return "rr_sweep";
        case Recipe::redo_mitigation: return "redo_mitigation";
        case Recipe::lr_scaled: return "lr_scaled";
        case Recipe::width_sweep: return "width_sweep";
        case Recipe::baseline_compare: return "baseline_compare";
        case Recipe::selection_compare: return "selection_compare";
        case Recipe::distill_probe: return "distill_probe";
        case Recipe::prune_probe: return "prune_probe";
    }
    return "?";
}

namespace {

// consume-tracking reader over the table; leftovers are unknown keys
class Reader {
public:
    explicit Reader(const ConfigTable& table) : table_(table) {}

    const ConfigValue* find(const std::string& key) {
        const auto it = table_.find(key);
        if (it == table_.end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }

    double number(const std::string& key, double fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::number)
            throw std::invalid_argument("config key '" + key + "' must be a number");
        return v->num;
    }

    std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::number || v->num < 0.0 ||
            v->num != std::floor(v->num))
            throw std::invalid_argument("config key '" + key +
                                        "' must be a non-negative integer");
        return static_cast<std::uint64_t>(v->num);
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::boolean)
            throw std::invalid_argument("config key '" + key + "' must be true or false");
        return v->b;
    }

    std::string str(const std::string& key, const std::string& fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::string)
            throw std::invalid_argument("config key '" + key + "' must be a string");
        return v->str;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::number_array)
            throw std::invalid_argument("config key '" + key + "' must be a number array");
        return v->nums;
    }

    std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->kind != ConfigValue::Kind::number_array)
            throw std::invalid_argument("config key '" + key + "' must be a number array");
        std::vector<std::size_t> out;
        for (double d : v->nums) {
            if (d < 0.0 || d != std::floor(d))
                throw std::invalid_argument("config key '" + key +
                                            "' must hold non-negative integers");
            out.push_back(static_cast<std::size_t>(d));
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : table_)
            if (!consumed_.count(key))
                throw std::invalid_argument("unknown config key '" + key + "'");
    }

private:
    const ConfigTable& table_;
    std::set<std::string> consumed_;
};

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

SelectionKind selection_from_name(const std::string& name) {
    if (name == "threshold") return SelectionKind::threshold;
    if (name == "score") return SelectionKind::score;
    if (name == "inverse_score") return SelectionKind::inverse_score;
    if (name == "random") return SelectionKind::random;
    if (name == "utility") return SelectionKind::utility;
    throw std::invalid_argument("unknown selection kind '" + name + "'");
}

}  // namespace

ExperimentConfig config_from_table(const ConfigTable& table) {
    Reader r(table);
    ExperimentConfig cfg;

    const auto* recipe = r.find("recipe");
    if (!recipe || recipe->kind != ConfigValue::Kind::string)
        throw std::invalid_argument("config: required string key 'recipe' is missing");
    cfg.recipe = recipe_from_name(recipe->str);

    {
        std::vector<double> seeds;
        for (auto s : cfg.seeds) seeds.push_back(static_cast<double>(s));
        seeds = r.numbers("seeds", seeds);
        if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
        cfg.seeds.clear();
        for (double s : seeds) {
            if (s < 0.0 || s != std::floor(s))
                throw std::invalid_argument("config: seeds must be non-negative integers");
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    cfg.taus = r.numbers("taus", cfg.taus);
    for (double t : cfg.taus)
        if (t < 0.0) throw std::invalid_argument("config: taus must be >= 0");

    const std::string env_kind = r.str("env.kind", "catch");
    if (env_kind == "catch")
        cfg.env.kind = EnvKind::catch_grid;
    else if (env_kind == "cartpole")
        cfg.env.kind = EnvKind::cartpole;
    else
        throw std::invalid_argument("config: env.kind must be \"catch\" or \"cartpole\"");
    cfg.env.rows = r.uinteger("env.rows", cfg.env.rows);
    cfg.env.cols = r.uinteger("env.cols", cfg.env.cols);
    cfg.env.episode_cap = r.uinteger("env.episode_cap", cfg.env.episode_cap);

    cfg.dqn.gamma = r.number("dqn.gamma", cfg.dqn.gamma);
    cfg.dqn.epsilon_train = r.number("dqn.epsilon_train", cfg.dqn.epsilon_train);
    cfg.dqn.epsilon_eval = r.number("dqn.epsilon_eval", cfg.dqn.epsilon_eval);
    cfg.dqn.replay_ratio = r.number("dqn.replay_ratio", cfg.dqn.replay_ratio);
    cfg.dqn.target_update_period =
        r.uinteger("dqn.target_update_period", cfg.dqn.target_update_period);
    cfg.dqn.batch_size = r.uinteger("dqn.batch_size", cfg.dqn.batch_size);
    cfg.dqn.n_step = r.uinteger("dqn.n_step", cfg.dqn.n_step);
    cfg.dqn.min_history = r.uinteger("dqn.min_history", cfg.dqn.min_history);
    cfg.dqn.total_env_steps = r.uinteger("dqn.total_env_steps", cfg.dqn.total_env_steps);
    cfg.dqn.learning_rate = r.number("dqn.learning_rate", cfg.dqn.learning_rate);
    cfg.dqn.weight_decay = r.number("dqn.weight_decay", cfg.dqn.weight_decay);
    cfg.dqn.adam_eps = r.number("dqn.adam_eps", cfg.dqn.adam_eps);
    cfg.dqn.buffer_capacity = r.uinteger("dqn.buffer_capacity", cfg.dqn.buffer_capacity);
    cfg.dqn.hidden = r.sizes("dqn.hidden", cfg.dqn.hidden);
    cfg.dqn.activation = activation_from_name(r.str("dqn.activation", "relu"));
    cfg.dqn.leaky_slope = r.number("dqn.leaky_slope", cfg.dqn.leaky_slope);
    cfg.dqn.huber_delta = r.number("dqn.huber_delta", cfg.dqn.huber_delta);

    cfg.redo.enabled = r.boolean("redo.enabled", cfg.redo.enabled);
    cfg.redo.tau = r.number("redo.tau", cfg.redo.tau);
    cfg.redo.period = r.uinteger("redo.period", cfg.redo.period);
    {
        const std::string inc = r.str("redo.incoming", "reinit_original");
        if (inc == "reinit_original")
            cfg.redo.strategy.incoming = IncomingReinit::reinit_original;
        else if (inc == "norm_scaled")
            cfg.redo.strategy.incoming = IncomingReinit::norm_scaled;
        else
            throw std::invalid_argument("config: redo.incoming must be \"reinit_original\" or "
                                        "\"norm_scaled\"");
        const std::string outg = r.str("redo.outgoing", "zero");
        if (outg == "zero")
            cfg.redo.strategy.outgoing = OutgoingReinit::zero;
        else if (outg == "random_init")
            cfg.redo.strategy.outgoing = OutgoingReinit::random_init;
        else
            throw std::invalid_argument(
                "config: redo.outgoing must be \"zero\" or \"random_init\"");
    }

    cfg.selection.kind = selection_from_name(r.str("selection.kind", "score"));
    cfg.selection.fraction = r.number("selection.fraction", cfg.selection.fraction);
    cfg.selection.cosine = r.boolean("selection.cosine", cfg.selection.cosine);

    cfg.measure.period = r.uinteger("measure.period", cfg.measure.period);
    cfg.measure.scoring_batch = r.uinteger("measure.scoring_batch", cfg.measure.scoring_batch);
    cfg.measure.tracked_tau = r.number("measure.tracked_tau", cfg.measure.tracked_tau);

    cfg.supervised.n = r.uinteger("supervised.n", cfg.supervised.n);
    cfg.supervised.d = r.uinteger("supervised.d", cfg.supervised.d);
    cfg.supervised.classes = r.uinteger("supervised.classes", cfg.supervised.classes);
    cfg.supervised.epochs = r.uinteger("supervised.epochs", cfg.supervised.epochs);
    cfg.supervised.shuffle_period =
        r.uinteger("supervised.shuffle_period", cfg.supervised.shuffle_period);
    cfg.supervised.batch_size = r.uinteger("supervised.batch_size", cfg.supervised.batch_size);
    cfg.supervised.learning_rate =
        r.number("supervised.learning_rate", cfg.supervised.learning_rate);
    cfg.supervised.momentum = r.number("supervised.momentum", cfg.supervised.momentum);
    cfg.supervised.noise_sigma = r.number("supervised.noise_sigma", cfg.supervised.noise_sigma);
    cfg.supervised.hidden = r.sizes("supervised.hidden", cfg.supervised.hidden);

    cfg.offline.behavior_env_steps =
        r.uinteger("offline.behavior_env_steps", cfg.offline.behavior_env_steps);
    cfg.offline.grad_steps = r.uinteger("offline.grad_steps", cfg.offline.grad_steps);

    cfg.baseline.reset_period = r.uinteger("baseline.reset_period", cfg.baseline.reset_period);
    cfg.baseline.reset_k = r.uinteger("baseline.reset_k", cfg.baseline.reset_k);
    cfg.baseline.weight_decay = r.number("baseline.weight_decay", cfg.baseline.weight_decay);

    cfg.distill.teacher_checkpoint =
        r.str("distill.teacher_checkpoint", cfg.distill.teacher_checkpoint);
    cfg.distill.teacher_env_steps =
        r.uinteger("distill.teacher_env_steps", cfg.distill.teacher_env_steps);
    cfg.distill.victim_env_steps =
        r.uinteger("distill.victim_env_steps", cfg.distill.victim_env_steps);
    cfg.distill.input_batch = r.uinteger("distill.input_batch", cfg.distill.input_batch);
    cfg.distill.epochs = r.uinteger("distill.epochs", cfg.distill.epochs);
    cfg.distill.batch_size = r.uinteger("distill.batch_size", cfg.distill.batch_size);
    cfg.distill.learning_rate = r.number("distill.learning_rate", cfg.distill.learning_rate);

    cfg.prune.checkpoints = r.numbers("prune.checkpoints", cfg.prune.checkpoints);
    for (double c : cfg.prune.checkpoints)
        if (c <= 0.0 || c >= 1.0)
            throw std::invalid_argument("config: prune.checkpoints must be fractions in (0,1)");
    cfg.prune.eval_episodes = r.uinteger("prune.eval_episodes", cfg.prune.eval_episodes);

    cfg.sweep_replay_ratios = r.numbers("sweep.replay_ratios", cfg.sweep_replay_ratios);
    cfg.sweep_width_multipliers = r.sizes("sweep.widths", cfg.sweep_width_multipliers);

    r.finish();
    cfg.dqn.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
    ConfigTable table = parse_config_text(read_text_file(path));
    for (const auto& o : overrides) apply_override(table, o);
    return config_from_table(table);
}

namespace {

std::string size_array(const std::vector<std::size_t>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? ", " : "") + std::to_string(v[i]);
    return out + "]";
}

std::string num_array(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out + "]";
}

}  // namespace

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << "recipe = \"" << recipe_name(cfg.recipe) << "\"\n";
    o << "seeds = [";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
        o << (i ? ", " : "") << cfg.seeds[i];
    o << "]\n";
    o << "taus = " << num_array(cfg.taus) << "\n\n";

    o << "[env]\n";
    o << "kind = \"" << (cfg.env.kind == EnvKind::catch_grid ? "catch" : "cartpole") << "\"\n";
    o << "rows = " << cfg.env.rows << "\ncols = " << cfg.env.cols
      << "\nepisode_cap = " << cfg.env.episode_cap << "\n\n";

    o << "[dqn]\n";
    o << "gamma = " << format_double(cfg.dqn.gamma) << "\n";
    o << "epsilon_train = " << format_double(cfg.dqn.epsilon_train) << "\n";
    o << "epsilon_eval = " << format_double(cfg.dqn.epsilon_eval) << "\n";
    o << "replay_ratio = " << format_double(cfg.dqn.replay_ratio) << "\n";
    o << "target_update_period = " << cfg.dqn.target_update_period << "\n";
    o << "batch_size = " << cfg.dqn.batch_size << "\n";
    o << "n_step = " << cfg.dqn.n_step << "\n";
    o << "min_history = " << cfg.dqn.min_history << "\n";
    o << "total_env_steps = " << cfg.dqn.total_env_steps << "\n";
    o << "learning_rate = " << format_double(cfg.dqn.learning_rate) << "\n";
    o << "weight_decay = " << format_double(cfg.dqn.weight_decay) << "\n";
    o << "adam_eps = " << format_double(cfg.dqn.adam_eps) << "\n";
    o << "buffer_capacity = " << cfg.dqn.buffer_capacity << "\n";
    o << "hidden = " << size_array(cfg.dqn.hidden) << "\n";
    o << "activation = \"" << activation_name(cfg.dqn.activation) << "\"\n";
    o << "leaky_slope = " << format_double(cfg.dqn.leaky_slope) << "\n";
    o << "huber_delta = " << format_double(cfg.dqn.huber_delta) << "\n\n";

    o << "[redo]\n";
    o << "enabled = " << (cfg.redo.enabled ? "true" : "false") << "\n";
    o << "tau = " << format_double(cfg.redo.tau) << "\n";
    o << "period = " << cfg.redo.period << "\n";
    o << "incoming = \""
      << (cfg.redo.strategy.incoming == IncomingReinit::reinit_original ? "reinit_original"
                                                                        : "norm_scaled")
      << "\"\n";
    o << "outgoing = \""
      << (cfg.redo.strategy.outgoing == OutgoingReinit::zero ? "zero" : "random_init") << "\"\n\n";

    o << "[selection]\n";
    o << "kind = \"" << selection_name(cfg.selection.kind) << "\"\n";
    o << "fraction = " << format_double(cfg.selection.fraction) << "\n";
    o << "cosine = " << (cfg.selection.cosine ? "true" : "false") << "\n\n";

    o << "[measure]\n";
    o << "period = " << cfg.measure.period << "\n";
    o << "scoring_batch = " << cfg.measure.scoring_batch << "\n";
    o << "tracked_tau = " << format_double(cfg.measure.tracked_tau) << "\n\n";

    o << "[supervised]\n";
    o << "n = " << cfg.supervised.n << "\nd = " << cfg.supervised.d
      << "\nclasses = " << cfg.supervised.classes << "\nepochs = " << cfg.supervised.epochs
      << "\nshuffle_period = " << cfg.supervised.shuffle_period
      << "\nbatch_size = " << cfg.supervised.batch_size << "\n";
    o << "learning_rate = " << format_double(cfg.supervised.learning_rate) << "\n";
    o << "momentum = " << format_double(cfg.supervised.momentum) << "\n";
    o << "noise_sigma = " << format_double(cfg.supervised.noise_sigma) << "\n";
    o << "hidden = " << size_array(cfg.supervised.hidden) << "\n\n";

    o << "[offline]\n";
    o << "behavior_env_steps = " << cfg.offline.behavior_env_steps << "\n";
    o << "grad_steps = " << cfg.offline.grad_steps << "\n\n";

    o << "[baseline]\n";
    o << "reset_period = " << cfg.baseline.reset_period << "\n";
    o << "reset_k = " << cfg.baseline.reset_k << "\n";
    o << "weight_decay = " << format_double(cfg.baseline.weight_decay) << "\n\n";

    o << "[distill]\n";
    o << "teacher_checkpoint = \"" << cfg.distill.teacher_checkpoint << "\"\n";
    o << "teacher_env_steps = " << cfg.distill.teacher_env_steps << "\n";
    o << "victim_env_steps = " << cfg.distill.victim_env_steps << "\n";
    o << "input_batch = " << cfg.distill.input_batch << "\n";
    o << "epochs = " << cfg.distill.epochs << "\n";
    o << "batch_size = " << cfg.distill.batch_size << "\n";
    o << "learning_rate = " << format_double(cfg.distill.learning_rate) << "\n\n";

    o << "[prune]\n";
    o << "checkpoints = " << num_array(cfg.prune.checkpoints) << "\n";
    o << "eval_episodes = " << cfg.prune.eval_episodes << "\n\n";

    o << "[sweep]\n";
    o << "replay_ratios = " << num_array(cfg.sweep_replay_ratios) << "\n";
    o << "widths = " << size_array(cfg.sweep_width_multipliers) << "\n";
    return o.str();
}

}  // namespace redolab
