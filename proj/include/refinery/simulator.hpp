#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "refinery/model_profile.hpp"
#include "refinery/rng.hpp"
#include "refinery/scheduling.hpp"
#include "refinery/solver.hpp"
#include "refinery/topology.hpp"

namespace refinery {

enum class SchedulerKind {
    Refinery,
    NQ,
    RCA,
    RMP,
    RPS,
    MTU,
    MCC,
    MNC,
    FedAvgLocal,
    SplitFedLimited,
    SplitFedUnlimited,
    WRR,
    RR,
    Exact,
};

SchedulerKind scheduler_from_string(const std::string &name);
std::string to_string(SchedulerKind kind);

enum class Layout { NS1, NS2, NS3, NS4 };
enum class Scale { Paper, Desk, Tiny };

Layout layout_from_string(const std::string &name);
std::string to_string(Layout layout);
Scale scale_from_string(const std::string &name);
std::string to_string(Scale scale);

struct SiteSpec {
    double capacity = 0.0;
    double utilization = 0.0;
    double cost = 0.0;
};

struct ScenarioConfig {
    std::string topology_id;    // NSFNET or USNET
    std::string topology_file;  // resolved by the caller
    Layout layout = Layout::NS1;
    std::vector<SiteSpec> sites;
    int servers_per_site = 8;
    int client_nodes = 8;
    int clients_per_node = 6;
    std::pair<double, double> link_cost_range = {1.0, 10.0};
    std::pair<double, double> link_capacity_range = {3000.0, 5000.0};
    std::vector<double> client_capacity_tiers = {400.0, 800.0, 1200.0};
    std::pair<double, double> client_utilization_range = {0.02, 0.20};
    std::pair<long, long> dataset_range = {4000, 20000};
    std::pair<double, double> ps_bandwidth_range = {500.0, 1500.0};
    int k_paths = 3;
};

/// Layout presets. Paper scale mirrors the reference settings; desk and tiny
/// scales shrink the client fleet and server pools proportionally so that
/// exhaustive baselines stay tractable.
ScenarioConfig scenario_preset(Layout layout, Scale scale);

struct ClientTemplate {
    std::string id;
    int node = -1;
    double capacity_tier = 0.0;
    long dataset_size = 0;
    double weight = 0.0;
};

struct Scenario {
    Topology topology;
    PathSet paths;
    std::vector<ClientTemplate> clients;
    std::vector<SiteState> sites;
    ScenarioConfig config;
};

Scenario generate_scenario(const ScenarioConfig &config, Rng &rng);

struct SchedulerOptions {
    double tolerance = 1e-6;
    int max_iterations = 50;
    long long exact_budget = 1LL << 20;
    double rca_admit_fraction = 0.5;
};

struct ScheduleOutcome {
    Assignment assignment;
    double rho_final = 0.0;
    int solver_iterations = 0;
    std::vector<DinkelbachIteration> trace;
};

ScheduleOutcome run_scheduler(SchedulerKind kind, const SchedulingInstance &instance,
                              Rng &rng, const SchedulerOptions &options);

struct RoundLog {
    int t = 0;
    Assignment assignment;
    std::vector<LatencyBreakdown> latencies;  // parallel to assignment.admitted
    double utility = 0.0;
    double cost = 0.0;
    double ratio = 0.0;
    double trained_samples = 0.0;
    std::vector<double> queues;  // after the round's update
    double rho_final = 0.0;
    int solver_iterations = 0;
};

struct SimulationResult {
    SchedulerKind scheduler = SchedulerKind::Refinery;
    Layout layout = Layout::NS1;
    uint64_t seed = 0;
    std::vector<RoundLog> rounds;
    double rue = 0.0;
    double avg_training_amount = 0.0;
    std::vector<int> admission_counts;  // per client
    std::vector<std::pair<int, DinkelbachIteration>> trace;  // (round, record)
};

struct SimOptions {
    int rounds = 30;
    uint64_t seed = 1;
    SchedulerOptions scheduler;
    bool collect_trace = false;
};

/// Violation report; empty means the schedule satisfies admission uniqueness,
/// server counts, per-link bandwidth and the round deadline. Recomputes
/// everything from raw states, independent of the solver path.
std::vector<std::string> validate_assignment(const SchedulingInstance &instance,
                                             const Assignment &assignment);

SimulationResult run_simulation(const Scenario &scenario, const TaskConfig &task,
                                SchedulerKind kind, const SimOptions &options);

TaskConfig make_task_config(const ModelProfile &profile, int epochs, int batch_size,
                            double deadline, double sched_msg, double status_msg,
                            double fairness_weight, double utility_scale,
                            double shrink_factor);

}  // namespace refinery
