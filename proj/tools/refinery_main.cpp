#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "refinery/errors.hpp"
#include "refinery/experiment.hpp"

namespace {

std::vector<uint64_t> parse_seed_list(const std::string &text) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        seeds.push_back(std::stoull(token));
    }
    return seeds;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"CPN federated split learning scheduler and simulation harness"};

    std::string config_path;
    std::string experiment;
    std::string task_path;
    std::vector<std::string> layouts;
    std::string scale;
    std::vector<std::string> schedulers;
    std::string seeds_text;
    int rounds = -1;
    std::string out_dir;
    std::string data_dir;
    bool trace = false;

    app.add_option("--config", config_path, "experiment config file (JSON)");
    app.add_option("--experiment", experiment, "frameworks|ablations|heuristics|rounding");
    app.add_option("--task", task_path, "task file (JSON)");
    app.add_option("--layout", layouts, "layout, repeatable (NS1..NS4)");
    app.add_option("--scale", scale, "paper|desk|tiny");
    app.add_option("--scheduler", schedulers, "scheduler name, repeatable");
    app.add_option("--seeds", seeds_text, "comma separated seed list");
    app.add_option("--rounds", rounds, "training rounds per run");
    app.add_option("--out", out_dir, "output directory for CSV files");
    app.add_option("--data-dir", data_dir, "directory with topologies/ and profiles/");
    app.add_flag("--trace", trace, "write per-iteration solver traces");

    CLI11_PARSE(app, argc, argv);

    try {
        refinery::ExperimentSpec spec;
        if (!config_path.empty()) {
            spec = refinery::parse_config(config_path);
        } else if (!experiment.empty()) {
            spec.kind = refinery::experiment_from_string(experiment);
            if (spec.kind == refinery::ExperimentKind::Rounding) spec.rounds = 1;
            spec.schedulers = refinery::default_schedulers(spec.kind);
        } else {
            std::cerr << "either --config or --experiment is required\n";
            return 1;
        }

        if (!experiment.empty() && !config_path.empty()) {
            spec.kind = refinery::experiment_from_string(experiment);
        }
        if (!task_path.empty()) spec.task_file = task_path;
        if (!layouts.empty()) {
            spec.layouts.clear();
            for (const auto &l : layouts) spec.layouts.push_back(refinery::layout_from_string(l));
        }
        if (!scale.empty()) spec.scale = refinery::scale_from_string(scale);
        if (!schedulers.empty()) {
            spec.schedulers.clear();
            for (const auto &s : schedulers) {
                spec.schedulers.push_back(refinery::scheduler_from_string(s));
            }
        }
        if (!seeds_text.empty()) spec.seeds = parse_seed_list(seeds_text);
        if (rounds > 0) spec.rounds = rounds;
        if (!out_dir.empty()) spec.out_dir = out_dir;
        if (!data_dir.empty()) spec.data_dir = data_dir;
        if (trace) spec.trace = true;

        if (spec.task_file.empty()) {
            std::cerr << "a task file is required (--task or config)\n";
            return 1;
        }
        return refinery::run_experiment(spec);
    } catch (const refinery::Error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
