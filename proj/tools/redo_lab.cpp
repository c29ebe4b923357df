#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "redolab/csvio.hpp"
#include "redolab/experiments.hpp"

using namespace redolab;

namespace {

void print_usage(std::ostream& out) {
    out << "usage: redo_lab <command> [options]\n"
           "\n"
           "commands:\n"
           "  run       execute one recipe sequentially\n"
           "  sweep     execute one recipe, cells in parallel (--jobs N)\n"
           "  analyze   aggregate runs into IQM/CI reports and plot CSVs\n"
           "  validate  check a config file and exit\n"
           "  demo      short live Catch + ReDo run\n"
           "\n"
           "options:\n"
           "  --config PATH      config file (run/sweep/validate)\n"
           "  --out DIR          output directory\n"
           "  --seeds A,B,C      override the config seed list\n"
           "  --set KEY=VALUE    override one config key (repeatable)\n"
           "  --jobs N           sweep-cell parallelism (sweep only, default 1)\n"
           "  --runs DIR         run directory root (analyze)\n"
           "  --group-by FIELD   run_info field to group by (analyze, default variant)\n"
           "  --window N         final-window size in episodes (analyze, default 100)\n";
}

struct Args {
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::string runs_dir;
    std::string group_by = "variant";
    std::string seeds;
    std::vector<std::string> overrides;
    std::size_t jobs = 1;
    std::size_t window = 100;
};

Args parse_args(int argc, char** argv) {
    Args args;
    if (argc < 2) throw std::invalid_argument("missing command");
    args.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string flag = argv[i];
        auto value = [&]() -> std::string {
            if (i + 1 >= argc) throw std::invalid_argument("flag " + flag + " needs a value");
            return argv[++i];
        };
        if (flag == "--config")
            args.config_path = value();
        else if (flag == "--out")
            args.out_dir = value();
        else if (flag == "--seeds")
            args.seeds = value();
        else if (flag == "--set")
            args.overrides.push_back(value());
        else if (flag == "--jobs")
            args.jobs = std::stoull(value());
        else if (flag == "--runs")
            args.runs_dir = value();
        else if (flag == "--group-by")
            args.group_by = value();
        else if (flag == "--window")
            args.window = std::stoull(value());
        else
            throw std::invalid_argument("unknown flag " + flag);
    }
    return args;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) seeds.push_back(std::stoull(item));
    if (seeds.empty()) throw std::invalid_argument("--seeds: empty list");
    return seeds;
}

ExperimentConfig load_from_args(const Args& args) {
    if (args.config_path.empty()) throw std::invalid_argument("--config is required");
    ExperimentConfig cfg = load_config_file(args.config_path, args.overrides);
    if (!args.seeds.empty()) cfg.seeds = parse_seed_list(args.seeds);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.jobs = args.jobs;
    return cfg;
}

int run_demo(const Args& args) {
    ExperimentConfig cfg;
    cfg.recipe = Recipe::redo_mitigation;
    cfg.dqn.replay_ratio = 1.0;
    cfg.dqn.total_env_steps = 60000;
    cfg.redo.enabled = true;
    cfg.out_dir = args.out_dir.empty() ? "demo_out" : args.out_dir;
    cfg.seeds = {1};

    std::cerr << "demo: Catch + ReDo (tau=" << cfg.redo.tau
              << ", period=" << cfg.redo.period << "), RR=1, "
              << cfg.dqn.total_env_steps << " env steps\n";

    std::vector<GradHook> hooks;
    hooks.push_back(make_measure_hook(cfg.measure, cfg.taus));
    hooks.push_back(make_redo_hook(cfg.redo, cfg.measure.scoring_batch));
    GradHook live;
    live.name = "live";
    live.period = 2000;
    live.fn = [](AgentState& state, MetricSeries& series) {
        double recent = 0.0;
        std::size_t count = 0;
        for (auto it = series.rows.rbegin(); it != series.rows.rend() && count < 50;
             ++it, ++count)
            recent += it->ret;
        std::cerr << "  env " << state.env_steps << "  grad " << state.grad_steps
                  << "  return(50ep) " << (count ? recent / count : 0.0) << "  dormant(tau=0) "
                  << state.latest_dormant_tau0 << "  dormant(tau=0.025) "
                  << state.latest_dormant_tau << "  recycled " << state.recycled_total << "\n";
    };
    hooks.push_back(live);

    TrainResult result = run_training(cfg.env, cfg.dqn, hooks, cfg.seeds[0]);
    ensure_dir(cfg.out_dir);
    write_metric_csv(result.series, cfg.out_dir);
    std::cerr << "demo: wrote CSVs to " << cfg.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Args args;
    try {
        args = parse_args(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        print_usage(std::cerr);
        return 1;
    }

    if (args.command == "help" || args.command == "--help" || args.command == "-h") {
        print_usage(std::cout);
        return 0;
    }

    if (args.command == "validate") {
        try {
            const ExperimentConfig cfg = load_from_args(args);
            std::cerr << "config ok: recipe " << recipe_name(cfg.recipe) << ", "
                      << cfg.seeds.size() << " seeds\n";
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }
    }

    if (args.command == "run" || args.command == "sweep") {
        ExperimentConfig cfg;
        try {
            cfg = load_from_args(args);
            if (args.command == "run") cfg.jobs = 1;
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }
        try {
            const auto cells = run_recipe(cfg);
            std::cerr << "completed " << cells.size() << " cells under " << cfg.out_dir << "\n";
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "runtime error: " << e.what() << "\n";
            return 2;
        }
    }

    if (args.command == "analyze") {
        if (args.runs_dir.empty()) {
            std::cerr << "config error: --runs is required for analyze\n";
            return 1;
        }
        const std::string out = args.out_dir.empty() ? args.runs_dir + "/analysis" : args.out_dir;
        try {
            analyze(args.runs_dir, args.group_by, out, args.window);
            std::cerr << "wrote aggregate.json, returns_plot.csv, dormancy_plot.csv to " << out
                      << "\n";
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "runtime error: " << e.what() << "\n";
            return 2;
        }
    }

    if (args.command == "demo") {
        try {
            return run_demo(args);
        } catch (const std::exception& e) {
            std::cerr << "runtime error: " << e.what() << "\n";
            return 2;
        }
    }

    std::cerr << "error: unknown command '" << args.command << "'\n";
    print_usage(std::cerr);
    return 1;
}
