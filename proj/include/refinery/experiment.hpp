#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "refinery/simulator.hpp"

namespace refinery {

enum class ExperimentKind { Frameworks, Ablations, Heuristics, Rounding };

ExperimentKind experiment_from_string(const std::string &name);
std::string to_string(ExperimentKind kind);

struct TaskSpec {
    std::string name;
    ModelProfile profile;
    int epochs = 1;
    int batch_size = 8;
    double deadline = 150.0;
    double sched_msg_size = 50.0;
    double status_msg_size = 50.0;
    std::pair<double, double> link_cost_range = {1.0, 10.0};
    std::pair<double, double> ps_bandwidth_range = {500.0, 1500.0};
};

TaskSpec load_task(const std::string &path);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Frameworks;
    std::string task_file;
    std::vector<Layout> layouts = {Layout::NS1, Layout::NS2, Layout::NS3, Layout::NS4};
    Scale scale = Scale::Desk;
    std::vector<uint64_t> seeds = {1};
    std::vector<SchedulerKind> schedulers;  // empty = experiment default
    std::string out_dir = "results";
    std::string data_dir = "data";
    int rounds = 30;
    double tolerance = 1e-6;
    int k_paths = 3;
    double fairness_weight = 1.0;
    double utility_scale = 10000.0;
    double shrink_factor = 1.0;
    bool trace = false;
    long long exact_budget = 1LL << 24;
    double rca_admit_fraction = 0.5;
};

std::vector<SchedulerKind> default_schedulers(ExperimentKind kind);

/// Reads a JSON experiment config, fills defaults and validates scheduler
/// names against the experiment. Relative task/data paths resolve against the
/// config file location.
ExperimentSpec parse_config(const std::string &path);
ExperimentSpec parse_config_text(const std::string &text, const std::string &origin,
                                 const std::string &base_dir);

struct RoundRow {
    std::string run_id;
    std::string scheduler;
    std::string layout;
    uint64_t seed = 0;
    int t = 0;
    int admitted = 0;
    double trained_samples = 0.0;
    double utility = 0.0;
    double cost = 0.0;
    double ratio = 0.0;
    double rho_final = 0.0;
};

struct SummaryRow {
    std::string scheduler;
    std::string layout;
    int seeds = 0;
    double mean_rue = 0.0;
    double mean_training_amount = 0.0;
    std::optional<double> mean_ratio_to_opt;
};

std::string format_value(double v);  // 17 significant digits, round-trip exact

void write_round_csv(const std::string &path, const std::vector<RoundRow> &rows);
void write_summary_csv(const std::string &path, const std::vector<SummaryRow> &rows,
                       bool with_ratio_column);

std::vector<RoundRow> round_rows(const SimulationResult &result);

/// Exit codes: 0 ok, 1 config error, 2 run failure, 3 audit failure.
int run_experiment(const ExperimentSpec &spec);

}  // namespace refinery
