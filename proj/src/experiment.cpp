#include "refinery/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "refinery/errors.hpp"

namespace refinery {

using json = nlohmann::json;
namespace fs = std::filesystem;

ExperimentKind experiment_from_string(const std::string &name) {
    if (name == "frameworks") return ExperimentKind::Frameworks;
    if (name == "ablations") return ExperimentKind::Ablations;
    if (name == "heuristics") return ExperimentKind::Heuristics;
    if (name == "rounding") return ExperimentKind::Rounding;
    throw Error(ErrorKind::ParseError, "unknown experiment: " + name);
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Frameworks: return "frameworks";
        case ExperimentKind::Ablations: return "ablations";
        case ExperimentKind::Heuristics: return "heuristics";
        case ExperimentKind::Rounding: return "rounding";
    }
    return "?";
}

std::vector<SchedulerKind> default_schedulers(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Frameworks:
            return {SchedulerKind::FedAvgLocal, SchedulerKind::SplitFedUnlimited,
                    SchedulerKind::SplitFedLimited, SchedulerKind::Refinery, SchedulerKind::NQ};
        case ExperimentKind::Ablations:
            return {SchedulerKind::Refinery, SchedulerKind::RCA, SchedulerKind::RMP,
                    SchedulerKind::RPS};
        case ExperimentKind::Heuristics:
            return {SchedulerKind::Refinery, SchedulerKind::MTU, SchedulerKind::MCC,
                    SchedulerKind::MNC};
        case ExperimentKind::Rounding:
            return {SchedulerKind::Refinery, SchedulerKind::WRR, SchedulerKind::RR,
                    SchedulerKind::Exact};
    }
    return {};
}

namespace {

std::string resolve_relative(const std::string &path, const std::string &base_dir) {
    if (path.empty() || base_dir.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

std::pair<double, double> read_range(const json &j, const std::string &key,
                                     std::pair<double, double> fallback) {
    if (!j.contains(key)) return fallback;
    const auto &arr = j.at(key);
    if (!arr.is_array() || arr.size() != 2) {
        throw Error(ErrorKind::ParseError, key + " must be a [low, high] pair");
    }
    double lo = arr[0].get<double>();
    double hi = arr[1].get<double>();
    if (!(lo <= hi)) throw Error(ErrorKind::ParseError, key + " range is empty");
    return {lo, hi};
}

}  // namespace

TaskSpec load_task(const std::string &path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorKind::IoError, "cannot open task file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ParseError, "task " + path + ": " + e.what());
    }
    TaskSpec task;
    try {
        task.name = doc.at("name").get<std::string>();
        std::string profile_path = doc.at("profile").get<std::string>();
        profile_path = resolve_relative(profile_path, fs::path(path).parent_path().string());
        task.profile = load_profile(profile_path);
        task.deadline = doc.at("deadline").get<double>();
        task.batch_size = doc.at("batch_size").get<int>();
        task.epochs = doc.value("epochs", 1);
        task.sched_msg_size = doc.value("sched_msg_size", 0.0);
        task.status_msg_size = doc.value("status_msg_size", 0.0);
        task.link_cost_range = read_range(doc, "link_cost_range", task.link_cost_range);
        task.ps_bandwidth_range = read_range(doc, "ps_bandwidth_range", task.ps_bandwidth_range);
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, "task " + path + ": " + e.what());
    }
    return task;
}

ExperimentSpec parse_config_text(const std::string &text, const std::string &origin,
                                 const std::string &base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ParseError, origin + ": " + e.what());
    }
    ExperimentSpec spec;
    try {
        spec.kind = experiment_from_string(doc.at("experiment").get<std::string>());
        spec.rounds = spec.kind == ExperimentKind::Rounding ? 1 : 30;
        if (doc.contains("task")) {
            spec.task_file = resolve_relative(doc.at("task").get<std::string>(), base_dir);
        }
        if (doc.contains("layouts")) {
            spec.layouts.clear();
            for (const auto &l : doc.at("layouts")) {
                spec.layouts.push_back(layout_from_string(l.get<std::string>()));
            }
        }
        if (doc.contains("scale")) spec.scale = scale_from_string(doc.at("scale").get<std::string>());
        if (doc.contains("seeds")) {
            spec.seeds.clear();
            for (const auto &s : doc.at("seeds")) spec.seeds.push_back(s.get<uint64_t>());
        }
        if (doc.contains("schedulers")) {
            for (const auto &s : doc.at("schedulers")) {
                spec.schedulers.push_back(scheduler_from_string(s.get<std::string>()));
            }
        }
        if (doc.contains("out")) spec.out_dir = doc.at("out").get<std::string>();
        if (doc.contains("data_dir")) {
            spec.data_dir = resolve_relative(doc.at("data_dir").get<std::string>(), base_dir);
        }
        spec.rounds = doc.value("rounds", spec.rounds);
        spec.tolerance = doc.value("tolerance", spec.tolerance);
        spec.k_paths = doc.value("k_paths", spec.k_paths);
        spec.fairness_weight = doc.value("lambda", spec.fairness_weight);
        spec.utility_scale = doc.value("p_prime", spec.utility_scale);
        spec.shrink_factor = doc.value("shrink_factor", spec.shrink_factor);
        spec.trace = doc.value("trace", spec.trace);
        spec.exact_budget = doc.value("exact_budget", spec.exact_budget);
        spec.rca_admit_fraction = doc.value("rca_admit_fraction", spec.rca_admit_fraction);
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, origin + ": " + e.what());
    }

    if (spec.seeds.empty()) throw Error(ErrorKind::ParseError, origin + ": seeds must be non-empty");
    if (spec.layouts.empty()) throw Error(ErrorKind::ParseError, origin + ": layouts must be non-empty");
    if (spec.rounds < 1) throw Error(ErrorKind::ParseError, origin + ": rounds must be positive");
    if (spec.schedulers.empty()) spec.schedulers = default_schedulers(spec.kind);

    auto allowed = default_schedulers(spec.kind);
    std::set<SchedulerKind> allowed_set(allowed.begin(), allowed.end());
    for (SchedulerKind s : spec.schedulers) {
        if (!allowed_set.count(s)) {
            throw Error(ErrorKind::ParseError,
                        origin + ": scheduler " + to_string(s) + " is not valid for experiment " +
                            to_string(spec.kind));
        }
    }
    return spec;
}

ExperimentSpec parse_config(const std::string &path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorKind::IoError, "cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path, fs::path(path).parent_path().string());
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_round_csv(const std::string &path, const std::vector<RoundRow> &rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << "run_id,scheduler,layout,seed,t,admitted,trained_samples,utility,cost,ratio,rho_final\n";
    for (const auto &r : rows) {
        out << r.run_id << ',' << r.scheduler << ',' << r.layout << ',' << r.seed << ',' << r.t
            << ',' << r.admitted << ',' << format_value(r.trained_samples) << ','
            << format_value(r.utility) << ',' << format_value(r.cost) << ','
            << format_value(r.ratio) << ',' << format_value(r.rho_final) << '\n';
    }
}

void write_summary_csv(const std::string &path, const std::vector<SummaryRow> &rows,
                       bool with_ratio_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << "scheduler,layout,seeds,mean_rue,mean_training_amount";
    if (with_ratio_column) out << ",mean_ratio_to_opt";
    out << '\n';
    for (const auto &r : rows) {
        out << r.scheduler << ',' << r.layout << ',' << r.seeds << ','
            << format_value(r.mean_rue) << ',' << format_value(r.mean_training_amount);
        if (with_ratio_column) {
            out << ',' << (r.mean_ratio_to_opt ? format_value(*r.mean_ratio_to_opt) : "");
        }
        out << '\n';
    }
}

std::vector<RoundRow> round_rows(const SimulationResult &result) {
    std::vector<RoundRow> rows;
    std::string scheduler = to_string(result.scheduler);
    std::string layout = to_string(result.layout);
    std::string run_id = scheduler + "_" + layout + "_s" + std::to_string(result.seed);
    for (const auto &round : result.rounds) {
        RoundRow row;
        row.run_id = run_id;
        row.scheduler = scheduler;
        row.layout = layout;
        row.seed = result.seed;
        row.t = round.t;
        row.admitted = static_cast<int>(round.assignment.admitted.size());
        row.trained_samples = round.trained_samples;
        row.utility = round.utility;
        row.cost = round.cost;
        row.ratio = round.ratio;
        row.rho_final = round.rho_final;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

void write_trace(const std::string &path, const SimulationResult &result) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw Error(ErrorKind::IoError, "cannot write " + path);
    for (const auto &[round, rec] : result.trace) {
        json line = {{"round", round},         {"rho", rec.rho},
                     {"gamma", rec.gamma},     {"psi", rec.psi},
                     {"objective", rec.objective}, {"accepted", rec.accepted},
                     {"rejected", rec.rejected}};
        out << line.dump() << '\n';
    }
}

std::string topology_file_for(const std::string &data_dir, const std::string &topology_id) {
    std::string name = topology_id;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return (fs::path(data_dir) / "topologies" / (name + ".json")).string();
}

}  // namespace

int run_experiment(const ExperimentSpec &spec) {
    TaskSpec task_spec;
    try {
        task_spec = load_task(spec.task_file);
    } catch (const Error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    TaskConfig task = make_task_config(task_spec.profile, task_spec.epochs, task_spec.batch_size,
                                       task_spec.deadline, task_spec.sched_msg_size,
                                       task_spec.status_msg_size, spec.fairness_weight,
                                       spec.utility_scale, spec.shrink_factor);

    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    if (ec) {
        std::cerr << "config error: cannot create output dir " << spec.out_dir << "\n";
        return 1;
    }

    bool audit_failed = false;
    bool run_failed = false;
    // (scheduler, layout) -> per-seed aggregates, in spec order
    std::map<std::pair<std::string, std::string>, std::vector<double>> rue_by_cell;
    std::map<std::pair<std::string, std::string>, std::vector<double>> training_by_cell;
    std::map<std::pair<std::string, uint64_t>, double> exact_rue;  // (layout, seed)
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<uint64_t, double>>>
        rue_by_cell_seed;

    for (Layout layout : spec.layouts) {
        ScenarioConfig base_cfg = scenario_preset(layout, spec.scale);
        base_cfg.k_paths = spec.k_paths;
        base_cfg.link_cost_range = task_spec.link_cost_range;
        base_cfg.ps_bandwidth_range = task_spec.ps_bandwidth_range;
        base_cfg.topology_file = topology_file_for(spec.data_dir, base_cfg.topology_id);

        for (SchedulerKind scheduler : spec.schedulers) {
            for (uint64_t seed : spec.seeds) {
                std::string run_id = to_string(scheduler) + "_" + to_string(layout) + "_s" +
                                     std::to_string(seed);
                try {
                    Rng scenario_rng(seed);
                    Scenario scenario = generate_scenario(base_cfg, scenario_rng);

                    SimOptions options;
                    options.rounds = spec.rounds;
                    options.seed = seed;
                    options.scheduler.tolerance = spec.tolerance;
                    options.scheduler.exact_budget = spec.exact_budget;
                    options.scheduler.rca_admit_fraction = spec.rca_admit_fraction;
                    options.collect_trace = spec.trace;

                    SimulationResult result = run_simulation(scenario, task, scheduler, options);

                    std::string run_path = (fs::path(spec.out_dir) / ("run_" + run_id + ".csv")).string();
                    write_round_csv(run_path, round_rows(result));
                    if (spec.trace) {
                        write_trace((fs::path(spec.out_dir) / (run_id + ".trace.jsonl")).string(),
                                    result);
                    }

                    auto cell = std::make_pair(to_string(scheduler), to_string(layout));
                    rue_by_cell[cell].push_back(result.rue);
                    training_by_cell[cell].push_back(result.avg_training_amount);
                    rue_by_cell_seed[cell].emplace_back(seed, result.rue);
                    if (scheduler == SchedulerKind::Exact) {
                        exact_rue[{to_string(layout), seed}] = result.rue;
                    }
                } catch (const Error &e) {
                    if (e.kind() == ErrorKind::InvalidSchedule) {
                        audit_failed = true;
                        std::cerr << "audit failure in cell " << run_id << ": " << e.what() << "\n";
                    } else {
                        run_failed = true;
                        std::cerr << "run failure in cell " << run_id << ": " << e.what() << "\n";
                    }
                } catch (const std::exception &e) {
                    run_failed = true;
                    std::cerr << "run failure in cell " << run_id << ": " << e.what() << "\n";
                }
            }
        }
    }

    bool with_ratio = spec.kind == ExperimentKind::Rounding;
    std::vector<SummaryRow> summary;
    for (SchedulerKind scheduler : spec.schedulers) {
        for (Layout layout : spec.layouts) {
            auto cell = std::make_pair(to_string(scheduler), to_string(layout));
            auto it = rue_by_cell.find(cell);
            if (it == rue_by_cell.end()) continue;
            SummaryRow row;
            row.scheduler = cell.first;
            row.layout = cell.second;
            row.seeds = static_cast<int>(it->second.size());
            double rue_total = 0.0;
            for (double v : it->second) rue_total += v;
            row.mean_rue = rue_total / static_cast<double>(it->second.size());
            double train_total = 0.0;
            for (double v : training_by_cell[cell]) train_total += v;
            row.mean_training_amount = train_total / static_cast<double>(it->second.size());
            if (with_ratio) {
                double ratio_total = 0.0;
                int counted = 0;
                for (auto &[seed, value] : rue_by_cell_seed[cell]) {
                    auto opt_it = exact_rue.find({cell.second, seed});
                    if (opt_it == exact_rue.end()) continue;
                    double opt = opt_it->second;
                    double ratio = 1.0;
                    if (opt > 0.0) ratio = value / opt;
                    else if (value > 0.0) ratio = 0.0;
                    ratio_total += ratio;
                    ++counted;
                }
                if (counted > 0) row.mean_ratio_to_opt = ratio_total / counted;
            }
            summary.push_back(std::move(row));
        }
    }
    write_summary_csv((fs::path(spec.out_dir) / "summary.csv").string(), summary, with_ratio);

    if (audit_failed) return 3;
    if (run_failed) return 2;
    return 0;
}

}  // namespace refinery
