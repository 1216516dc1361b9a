#include "refinery/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "refinery/errors.hpp"

namespace refinery {

using json = nlohmann::json;

namespace {
constexpr double kRelTol = 1e-9;
constexpr double kAccessCapacity = 1e15;  // client access links never bind
}  // namespace

SchedulerKind scheduler_from_string(const std::string &name) {
    static const std::map<std::string, SchedulerKind> table = {
        {"Refinery", SchedulerKind::Refinery},
        {"NQ", SchedulerKind::NQ},
        {"RCA", SchedulerKind::RCA},
        {"RMP", SchedulerKind::RMP},
        {"RPS", SchedulerKind::RPS},
        {"MTU", SchedulerKind::MTU},
        {"MCC", SchedulerKind::MCC},
        {"MNC", SchedulerKind::MNC},
        {"FedAvgLocal", SchedulerKind::FedAvgLocal},
        {"SplitFedLimited", SchedulerKind::SplitFedLimited},
        {"SplitFedUnlimited", SchedulerKind::SplitFedUnlimited},
        {"WRR", SchedulerKind::WRR},
        {"RR", SchedulerKind::RR},
        {"Exact", SchedulerKind::Exact},
    };
    auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorKind::ParseError, "unknown scheduler: " + name);
    return it->second;
}

std::string to_string(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::Refinery: return "Refinery";
        case SchedulerKind::NQ: return "NQ";
        case SchedulerKind::RCA: return "RCA";
        case SchedulerKind::RMP: return "RMP";
        case SchedulerKind::RPS: return "RPS";
        case SchedulerKind::MTU: return "MTU";
        case SchedulerKind::MCC: return "MCC";
        case SchedulerKind::MNC: return "MNC";
        case SchedulerKind::FedAvgLocal: return "FedAvgLocal";
        case SchedulerKind::SplitFedLimited: return "SplitFedLimited";
        case SchedulerKind::SplitFedUnlimited: return "SplitFedUnlimited";
        case SchedulerKind::WRR: return "WRR";
        case SchedulerKind::RR: return "RR";
        case SchedulerKind::Exact: return "Exact";
    }
    return "?";
}

Layout layout_from_string(const std::string &name) {
    if (name == "NS1") return Layout::NS1;
    if (name == "NS2") return Layout::NS2;
    if (name == "NS3") return Layout::NS3;
    if (name == "NS4") return Layout::NS4;
    throw Error(ErrorKind::ParseError, "unknown layout: " + name);
}

std::string to_string(Layout layout) {
    switch (layout) {
        case Layout::NS1: return "NS1";
        case Layout::NS2: return "NS2";
        case Layout::NS3: return "NS3";
        case Layout::NS4: return "NS4";
    }
    return "?";
}

Scale scale_from_string(const std::string &name) {
    if (name == "paper") return Scale::Paper;
    if (name == "desk") return Scale::Desk;
    if (name == "tiny") return Scale::Tiny;
    throw Error(ErrorKind::ParseError, "unknown scale: " + name);
}

std::string to_string(Scale scale) {
    switch (scale) {
        case Scale::Paper: return "paper";
        case Scale::Desk: return "desk";
        case Scale::Tiny: return "tiny";
    }
    return "?";
}

ScenarioConfig scenario_preset(Layout layout, Scale scale) {
    const std::vector<SiteSpec> six_sites = {
        {4400.0, 0.05, 800.0},  {4400.0, 0.10, 800.0},  {4400.0, 0.15, 800.0},
        {6500.0, 0.05, 1500.0}, {6500.0, 0.10, 1500.0}, {6500.0, 0.15, 1500.0},
    };
    const std::vector<SiteSpec> three_sites = {
        {4400.0, 0.05, 800.0}, {6500.0, 0.05, 1500.0}, {6500.0, 0.15, 1500.0},
    };

    ScenarioConfig cfg;
    cfg.layout = layout;
    cfg.topology_id = layout == Layout::NS1 ? "NSFNET" : "USNET";
    cfg.sites = scale == Scale::Tiny ? three_sites : six_sites;
    cfg.k_paths = scale == Scale::Tiny ? 2 : 3;

    struct Shape {
        int client_nodes, clients_per_node, servers;
    };
    Shape shape{};
    switch (scale) {
        case Scale::Paper:
            switch (layout) {
                case Layout::NS1: shape = {8, 6, 8}; break;
                case Layout::NS2: shape = {16, 1, 3}; break;
                case Layout::NS3: shape = {16, 3, 8}; break;
                case Layout::NS4: shape = {3, 16, 8}; break;
            }
            break;
        case Scale::Desk:
            switch (layout) {
                case Layout::NS1: shape = {8, 3, 4}; break;
                case Layout::NS2: shape = {16, 1, 3}; break;
                case Layout::NS3: shape = {16, 2, 5}; break;
                case Layout::NS4: shape = {3, 8, 4}; break;
            }
            break;
        case Scale::Tiny:
            switch (layout) {
                case Layout::NS1: shape = {4, 2, 2}; break;
                case Layout::NS2: shape = {6, 1, 1}; break;
                case Layout::NS3: shape = {4, 2, 2}; break;
                case Layout::NS4: shape = {2, 4, 2}; break;
            }
            break;
    }
    cfg.client_nodes = shape.client_nodes;
    cfg.clients_per_node = shape.clients_per_node;
    cfg.servers_per_site = shape.servers;
    return cfg;
}

namespace {

struct BaseGraph {
    std::vector<std::string> nodes;
    std::vector<std::array<std::string, 3>> links;  // id, src, dst
};

BaseGraph read_base_graph(const std::string &path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorKind::IoError, "cannot open topology file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ParseError, "topology " + path + ": " + e.what());
    }
    BaseGraph base;
    try {
        for (const auto &n : doc.at("nodes")) base.nodes.push_back(n.at("id").get<std::string>());
        for (const auto &l : doc.at("links")) {
            base.links.push_back({l.at("id").get<std::string>(), l.at("src").get<std::string>(),
                                  l.at("dst").get<std::string>()});
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, "topology " + path + ": " + e.what());
    }
    return base;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig &config, Rng &rng) {
    BaseGraph base = read_base_graph(config.topology_file);
    int n = static_cast<int>(base.nodes.size());
    int num_sites = static_cast<int>(config.sites.size());
    if (num_sites + config.client_nodes > n) {
        throw Error(ErrorKind::LayoutMismatch,
                    "layout needs " + std::to_string(num_sites + config.client_nodes) +
                        " nodes but topology has " + std::to_string(n));
    }

    std::vector<int> site_nodes = rng.sample_indices(n, num_sites);
    std::vector<int> remaining;
    std::set<int> taken(site_nodes.begin(), site_nodes.end());
    for (int i = 0; i < n; ++i) {
        if (!taken.count(i)) remaining.push_back(i);
    }
    std::vector<int> host_picks =
        rng.sample_indices(static_cast<int>(remaining.size()), config.client_nodes);
    std::vector<int> host_nodes;
    for (int pick : host_picks) host_nodes.push_back(remaining[static_cast<size_t>(pick)]);

    std::sort(site_nodes.begin(), site_nodes.end());
    std::sort(host_nodes.begin(), host_nodes.end());

    std::vector<NodeSpec> node_specs;
    std::set<int> site_set(site_nodes.begin(), site_nodes.end());
    for (int i = 0; i < n; ++i) {
        NodeKind kind = site_set.count(i) ? NodeKind::Site : NodeKind::Router;
        node_specs.push_back({base.nodes[static_cast<size_t>(i)], kind});
    }

    std::vector<LinkSpec> link_specs;
    for (const auto &[id, src, dst] : base.links) {
        LinkSpec spec;
        spec.id = id;
        spec.src = src;
        spec.dst = dst;
        spec.capacity = rng.uniform(config.link_capacity_range.first,
                                    config.link_capacity_range.second);
        spec.cost = rng.uniform(config.link_cost_range.first, config.link_cost_range.second);
        spec.undirected = true;
        link_specs.push_back(spec);
    }

    // Clients attach through dedicated access links that are effectively free
    // and unbounded; the shared backbone carries all contention.
    std::vector<ClientTemplate> clients;
    int client_index = 0;
    for (int host : host_nodes) {
        for (int slot = 0; slot < config.clients_per_node; ++slot) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "c%03d", client_index++);
            std::string cid(buf);
            node_specs.push_back({cid, NodeKind::Client});
            link_specs.push_back({"acc_" + cid, cid, base.nodes[static_cast<size_t>(host)],
                                  kAccessCapacity, 0.0, true});
            ClientTemplate tmpl;
            tmpl.id = cid;
            int tier = rng.uniform_int(0, static_cast<int>(config.client_capacity_tiers.size()) - 1);
            tmpl.capacity_tier = config.client_capacity_tiers[static_cast<size_t>(tier)];
            tmpl.dataset_size = rng.uniform_int(static_cast<int>(config.dataset_range.first),
                                                static_cast<int>(config.dataset_range.second));
            clients.push_back(tmpl);
        }
    }
    double total_data = 0.0;
    for (const auto &c : clients) total_data += static_cast<double>(c.dataset_size);
    for (auto &c : clients) c.weight = static_cast<double>(c.dataset_size) / total_data;

    Scenario scenario;
    scenario.config = config;
    scenario.topology = build_topology(node_specs, link_specs);
    for (auto &c : clients) c.node = scenario.topology.node_index(c.id);
    scenario.clients = std::move(clients);
    for (int s = 0; s < num_sites; ++s) {
        const SiteSpec &spec = config.sites[static_cast<size_t>(s)];
        SiteState site;
        site.id = base.nodes[static_cast<size_t>(site_nodes[static_cast<size_t>(s)])];
        site.node = scenario.topology.node_index(site.id);
        site.server_capacity = spec.capacity * spec.utilization;
        site.num_servers = config.servers_per_site;
        site.unit_server_cost = spec.cost;
        site.comm_cost = 0.0;
        scenario.sites.push_back(site);
    }
    scenario.paths = PathSet(scenario.topology, config.k_paths);
    return scenario;
}

TaskConfig make_task_config(const ModelProfile &profile, int epochs, int batch_size,
                            double deadline, double sched_msg, double status_msg,
                            double fairness_weight, double utility_scale,
                            double shrink_factor) {
    TaskConfig task;
    task.profile = profile;
    task.candidate_cuts = effective_partition_points(profile, shrink_factor);
    task.epochs = epochs;
    task.batch_size = batch_size;
    task.deadline = deadline;
    task.sched_msg_size = sched_msg;
    task.status_msg_size = status_msg;
    task.fairness_weight = fairness_weight;
    task.utility_scale = utility_scale;
    return task;
}

namespace {

Assignment finish_assignment(std::vector<AssignmentEntry> admitted, int num_clients,
                             bool infeasible_bound = false) {
    Assignment out;
    std::sort(admitted.begin(), admitted.end(),
              [](const AssignmentEntry &a, const AssignmentEntry &b) {
                  return a.client < b.client;
              });
    out.admitted = std::move(admitted);
    out.infeasible_bound = infeasible_bound;
    std::vector<char> flag(static_cast<size_t>(num_clients), 0);
    for (const auto &e : out.admitted) flag[static_cast<size_t>(e.client)] = 1;
    for (int i = 0; i < num_clients; ++i) {
        if (!flag[static_cast<size_t>(i)]) out.rejected.push_back(i);
    }
    return out;
}

/// Shared skeleton of MTU/MCC/MNC: walk clients in a stated order, walk sites
/// in a per-heuristic preference order, take the Theorem-1 cut and the first
/// candidate path with enough residual bandwidth.
Assignment heuristic_assign(const SchedulingInstance &instance,
                            const std::vector<int> &client_order,
                            const std::vector<std::vector<int>> &site_order_per_client) {
    std::vector<int> servers_left;
    for (const auto &s : instance.sites()) servers_left.push_back(s.num_servers);
    std::vector<double> group_used(static_cast<size_t>(instance.topology().num_groups()), 0.0);
    std::vector<AssignmentEntry> admitted;

    for (int i : client_order) {
        const auto &site_order = site_order_per_client[static_cast<size_t>(i)];
        for (int j : site_order) {
            if (servers_left[static_cast<size_t>(j)] <= 0) continue;
            auto option = instance.best_option(i, j);
            if (!option) continue;
            const auto &paths = instance.pair_paths(i, j);
            int chosen_path = -1;
            for (size_t l = 0; l < paths.size(); ++l) {
                bool fits = true;
                for (int arc : paths[l].links) {
                    int g = instance.topology().link(arc).group;
                    double cap = instance.topology().group_capacity(g);
                    if (group_used[static_cast<size_t>(g)] + option->second >
                        cap + kRelTol * std::max(1.0, cap)) {
                        fits = false;
                        break;
                    }
                }
                if (fits) {
                    chosen_path = static_cast<int>(l);
                    break;
                }
            }
            if (chosen_path < 0) continue;
            --servers_left[static_cast<size_t>(j)];
            for (int arc : paths[static_cast<size_t>(chosen_path)].links) {
                group_used[static_cast<size_t>(instance.topology().link(arc).group)] +=
                    option->second;
            }
            admitted.push_back({i, j, chosen_path, option->first, option->second, false});
            break;
        }
    }
    return finish_assignment(std::move(admitted), instance.num_clients());
}

Assignment schedule_heuristic(SchedulerKind kind, const SchedulingInstance &instance, Rng &rng) {
    int n = instance.num_clients();
    int m = instance.num_sites();
    std::vector<int> client_order(static_cast<size_t>(n));
    std::iota(client_order.begin(), client_order.end(), 0);

    if (kind == SchedulerKind::MTU) {
        std::stable_sort(client_order.begin(), client_order.end(), [&](int a, int b) {
            return instance.clients()[static_cast<size_t>(a)].capacity <
                   instance.clients()[static_cast<size_t>(b)].capacity;
        });
    } else if (kind == SchedulerKind::MCC) {
        rng.shuffle(client_order);
    }

    std::vector<int> base_sites(static_cast<size_t>(m));
    std::iota(base_sites.begin(), base_sites.end(), 0);
    if (kind == SchedulerKind::MTU) {
        std::stable_sort(base_sites.begin(), base_sites.end(), [&](int a, int b) {
            return instance.sites()[static_cast<size_t>(a)].server_capacity >
                   instance.sites()[static_cast<size_t>(b)].server_capacity;
        });
    } else if (kind == SchedulerKind::MCC) {
        std::stable_sort(base_sites.begin(), base_sites.end(), [&](int a, int b) {
            return instance.sites()[static_cast<size_t>(a)].unit_server_cost <
                   instance.sites()[static_cast<size_t>(b)].unit_server_cost;
        });
    }

    std::vector<std::vector<int>> site_orders(static_cast<size_t>(n), base_sites);
    if (kind == SchedulerKind::MNC) {
        for (int i = 0; i < n; ++i) {
            std::stable_sort(site_orders[static_cast<size_t>(i)].begin(),
                             site_orders[static_cast<size_t>(i)].end(), [&](int a, int b) {
                                 const auto &pa = instance.pair_paths(i, a);
                                 const auto &pb = instance.pair_paths(i, b);
                                 size_t ha = pa.empty() ? SIZE_MAX : pa[0].links.size();
                                 size_t hb = pb.empty() ? SIZE_MAX : pb[0].links.size();
                                 return ha < hb;
                             });
        }
    }
    return heuristic_assign(instance, client_order, site_orders);
}

Assignment schedule_fedavg(const SchedulingInstance &instance) {
    std::vector<AssignmentEntry> admitted;
    const TaskConfig &task = instance.task();
    for (int i = 0; i < instance.num_clients(); ++i) {
        double latency = local_training_latency(instance.clients()[static_cast<size_t>(i)], task);
        if (latency <= task.deadline * (1.0 + kRelTol)) {
            admitted.push_back({i, -1, -1, task.profile.num_layers, 0.0, true});
        }
    }
    return finish_assignment(std::move(admitted), instance.num_clients());
}

Assignment schedule_splitfed(const SchedulingInstance &instance, bool limited) {
    int m = instance.num_sites();
    int jmax = 0;
    for (int j = 1; j < m; ++j) {
        if (instance.sites()[static_cast<size_t>(j)].server_capacity >
            instance.sites()[static_cast<size_t>(jmax)].server_capacity) {
            jmax = j;
        }
    }

    // One shared cut, picked to let the most clients meet the deadline.
    int best_cut = -1;
    int best_count = 0;
    for (int k : instance.task().candidate_cuts) {
        int count = 0;
        for (int i = 0; i < instance.num_clients(); ++i) {
            if (instance.phi(i, jmax, k) && !instance.pair_paths(i, jmax).empty()) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_cut = k;
        }
    }
    if (best_cut < 0) return finish_assignment({}, instance.num_clients(), !limited);

    std::vector<int> order(static_cast<size_t>(instance.num_clients()));
    std::iota(order.begin(), order.end(), 0);
    if (limited) {
        // Capacity-bound variant packs the most data per server slot.
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return instance.clients()[static_cast<size_t>(a)].dataset_size >
                   instance.clients()[static_cast<size_t>(b)].dataset_size;
        });
    }

    std::vector<AssignmentEntry> admitted;
    int servers_left = instance.sites()[static_cast<size_t>(jmax)].num_servers;
    std::vector<double> group_used(static_cast<size_t>(instance.topology().num_groups()), 0.0);
    for (int i : order) {
        auto phi = instance.phi(i, jmax, best_cut);
        const auto &paths = instance.pair_paths(i, jmax);
        if (!phi || paths.empty()) continue;
        if (!limited) {
            admitted.push_back({i, jmax, 0, best_cut, *phi, false});
            continue;
        }
        if (servers_left <= 0) continue;
        int chosen_path = -1;
        for (size_t l = 0; l < paths.size(); ++l) {
            bool fits = true;
            for (int arc : paths[l].links) {
                int g = instance.topology().link(arc).group;
                double cap = instance.topology().group_capacity(g);
                if (group_used[static_cast<size_t>(g)] + *phi > cap + kRelTol * std::max(1.0, cap)) {
                    fits = false;
                    break;
                }
            }
            if (fits) {
                chosen_path = static_cast<int>(l);
                break;
            }
        }
        if (chosen_path < 0) continue;
        --servers_left;
        for (int arc : paths[static_cast<size_t>(chosen_path)].links) {
            group_used[static_cast<size_t>(instance.topology().link(arc).group)] += *phi;
        }
        admitted.push_back({i, jmax, chosen_path, best_cut, *phi, false});
    }
    return finish_assignment(std::move(admitted), instance.num_clients(), !limited);
}

int rmp_shared_cut(const SchedulingInstance &instance) {
    int best_cut = -1;
    int best_count = 0;
    for (int k : instance.task().candidate_cuts) {
        int count = 0;
        for (int i = 0; i < instance.num_clients(); ++i) {
            for (int j = 0; j < instance.num_sites(); ++j) {
                if (instance.phi(i, j, k) && !instance.pair_paths(i, j).empty()) {
                    ++count;
                    break;
                }
            }
        }
        if (count > best_count) {
            best_count = count;
            best_cut = k;
        }
    }
    return best_cut;
}

}  // namespace

ScheduleOutcome run_scheduler(SchedulerKind kind, const SchedulingInstance &instance,
                              Rng &rng, const SchedulerOptions &options) {
    ScheduleOutcome outcome;
    DinkelbachOptions dopts;
    dopts.tolerance = options.tolerance;
    dopts.max_iterations = options.max_iterations;
    dopts.exact_budget = options.exact_budget;

    std::vector<char> mask;
    switch (kind) {
        case SchedulerKind::Refinery:
            break;
        case SchedulerKind::NQ:
            dopts.build.lambda_override = 0.0;
            break;
        case SchedulerKind::RCA: {
            int n = instance.num_clients();
            mask.assign(static_cast<size_t>(n), 0);
            for (int i = 0; i < n; ++i) {
                double p = options.rca_admit_fraction * static_cast<double>(n) *
                           instance.clients()[static_cast<size_t>(i)].weight;
                if (rng.uniform() < std::min(1.0, p)) mask[static_cast<size_t>(i)] = 1;
            }
            dopts.build.client_mask = &mask;
            break;
        }
        case SchedulerKind::RMP: {
            int cut = rmp_shared_cut(instance);
            if (cut < 0) {
                outcome.assignment = finish_assignment({}, instance.num_clients());
                return outcome;
            }
            dopts.build.fixed_cut = cut;
            break;
        }
        case SchedulerKind::RPS:
            dopts.build.max_paths = 1;
            break;
        case SchedulerKind::WRR:
            dopts.inner = InnerSolver::WeightedRandom;
            break;
        case SchedulerKind::RR:
            dopts.inner = InnerSolver::Random;
            break;
        case SchedulerKind::Exact:
            dopts.inner = InnerSolver::Exact;
            break;
        case SchedulerKind::MTU:
        case SchedulerKind::MCC:
        case SchedulerKind::MNC:
            outcome.assignment = schedule_heuristic(kind, instance, rng);
            return outcome;
        case SchedulerKind::FedAvgLocal:
            outcome.assignment = schedule_fedavg(instance);
            return outcome;
        case SchedulerKind::SplitFedLimited:
            outcome.assignment = schedule_splitfed(instance, true);
            return outcome;
        case SchedulerKind::SplitFedUnlimited:
            outcome.assignment = schedule_splitfed(instance, false);
            return outcome;
    }

    DinkelbachResult result = dinkelbach_solve(instance, dopts, &rng);
    outcome.assignment = std::move(result.assignment);
    outcome.rho_final = result.rho_final;
    outcome.solver_iterations = result.iterations;
    outcome.trace = std::move(result.trace);
    return outcome;
}

std::vector<std::string> validate_assignment(const SchedulingInstance &instance,
                                             const Assignment &assignment) {
    std::vector<std::string> violations;
    const TaskConfig &task = instance.task();
    int n = instance.num_clients();

    std::vector<int> seen(static_cast<size_t>(n), 0);
    for (const auto &e : assignment.admitted) seen[static_cast<size_t>(e.client)] += 1;
    for (int i : assignment.rejected) seen[static_cast<size_t>(i)] += 2;
    for (int i = 0; i < n; ++i) {
        if (seen[static_cast<size_t>(i)] != 1 && seen[static_cast<size_t>(i)] != 2) {
            violations.push_back("C1: client " + instance.clients()[static_cast<size_t>(i)].id +
                                 " is not in exactly one of admitted/rejected");
        }
    }

    std::vector<int> per_site(static_cast<size_t>(instance.num_sites()), 0);
    std::vector<double> per_group(static_cast<size_t>(instance.topology().num_groups()), 0.0);

    for (const auto &e : assignment.admitted) {
        const ClientState &c = instance.clients()[static_cast<size_t>(e.client)];
        double batches = static_cast<double>(task.epochs) * static_cast<double>(c.dataset_size) /
                         static_cast<double>(task.batch_size);
        double transfer =
            (task.sched_msg_size + task.status_msg_size + 2.0 * task.profile.model_size) /
            c.ps_bandwidth;
        double latency;
        if (e.local) {
            if (e.cut != task.profile.num_layers) {
                violations.push_back("local entry for " + c.id + " must use the full model");
            }
            latency = transfer + batches * task.profile.full_client_density() / c.capacity;
        } else {
            if (e.site < 0 || e.site >= instance.num_sites()) {
                violations.push_back("client " + c.id + " assigned to unknown site");
                continue;
            }
            if (!task.profile.has_cut(e.cut)) {
                violations.push_back("client " + c.id + " uses unknown cut " +
                                     std::to_string(e.cut));
                continue;
            }
            if (!(e.bandwidth > 0.0)) {
                violations.push_back("client " + c.id + " has non-positive bandwidth");
                continue;
            }
            const SiteState &s = instance.sites()[static_cast<size_t>(e.site)];
            const auto &paths = instance.pair_paths(e.client, e.site);
            if (e.path < 0 || e.path >= static_cast<int>(paths.size())) {
                violations.push_back("client " + c.id + " uses unknown path index");
                continue;
            }
            const LayerCut &cut = task.profile.cut(e.cut);
            latency = transfer + batches * (cut.client_density / c.capacity +
                                            cut.server_density / s.server_capacity +
                                            cut.exchange_size / e.bandwidth);
            per_site[static_cast<size_t>(e.site)] += 1;
            for (int arc : paths[static_cast<size_t>(e.path)].links) {
                per_group[static_cast<size_t>(instance.topology().link(arc).group)] += e.bandwidth;
            }
        }
        if (latency > task.deadline * (1.0 + kRelTol)) {
            violations.push_back("C4: client " + c.id + " latency " + std::to_string(latency) +
                                 " exceeds deadline");
        }
    }

    if (!assignment.infeasible_bound) {
        for (int j = 0; j < instance.num_sites(); ++j) {
            if (per_site[static_cast<size_t>(j)] >
                instance.sites()[static_cast<size_t>(j)].num_servers) {
                violations.push_back("C2: site " + instance.sites()[static_cast<size_t>(j)].id +
                                     " over its server count");
            }
        }
        for (int g = 0; g < instance.topology().num_groups(); ++g) {
            double cap = instance.topology().group_capacity(g);
            if (per_group[static_cast<size_t>(g)] > cap * (1.0 + kRelTol) + kRelTol) {
                violations.push_back("C3: link group " + std::to_string(g) + " uses " +
                                     std::to_string(per_group[static_cast<size_t>(g)]) +
                                     " of capacity " + std::to_string(cap));
            }
        }
    }
    return violations;
}

SimulationResult run_simulation(const Scenario &scenario, const TaskConfig &task,
                                SchedulerKind kind, const SimOptions &options) {
    SimulationResult result;
    result.scheduler = kind;
    result.layout = scenario.config.layout;
    result.seed = options.seed;

    int n = static_cast<int>(scenario.clients.size());
    result.admission_counts.assign(static_cast<size_t>(n), 0);

    // Environment draws are scheduler independent so that runs with the same
    // seed see identical per-round client states across schedulers.
    Rng env(options.seed ^ 0xD1B54A32D192ED03ULL);
    Rng sched(options.seed ^ 0x9E3779B97F4A7C15ULL);

    std::vector<double> queues(static_cast<size_t>(n), 0.0);
    std::vector<std::pair<double, double>> utility_cost;

    for (int t = 1; t <= options.rounds; ++t) {
        std::vector<ClientState> clients;
        clients.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const ClientTemplate &tmpl = scenario.clients[static_cast<size_t>(i)];
            ClientState c;
            c.id = tmpl.id;
            c.node = tmpl.node;
            c.weight = tmpl.weight;
            c.dataset_size = tmpl.dataset_size;
            c.capacity = tmpl.capacity_tier * env.uniform(scenario.config.client_utilization_range.first,
                                                          scenario.config.client_utilization_range.second);
            c.queue = queues[static_cast<size_t>(i)];
            c.ps_bandwidth = env.uniform(scenario.config.ps_bandwidth_range.first,
                                         scenario.config.ps_bandwidth_range.second);
            c.comm_cost = 0.0;
            clients.push_back(std::move(c));
        }

        SchedulingInstance instance(scenario.topology, scenario.paths, std::move(clients),
                                    scenario.sites, task);
        ScheduleOutcome outcome = run_scheduler(kind, instance, sched, options.scheduler);

        auto violations = validate_assignment(instance, outcome.assignment);
        if (!violations.empty()) {
            std::string joined = to_string(kind) + " round " + std::to_string(t) + ": ";
            for (const auto &v : violations) joined += v + "; ";
            throw Error(ErrorKind::InvalidSchedule, joined);
        }

        RoundLog log;
        log.t = t;
        std::vector<char> admitted(static_cast<size_t>(n), 0);
        for (const auto &e : outcome.assignment.admitted) {
            admitted[static_cast<size_t>(e.client)] = 1;
            log.trained_samples += static_cast<double>(
                                       instance.clients()[static_cast<size_t>(e.client)].dataset_size) *
                                   static_cast<double>(task.epochs);
            log.latencies.push_back(round_latency(e, instance));
            result.admission_counts[static_cast<size_t>(e.client)] += 1;
        }
        log.utility = training_utility(instance.clients(), admitted, task.fairness_weight,
                                       task.utility_scale);
        log.cost = system_cost(outcome.assignment, instance);
        log.ratio = log.cost > 0.0 ? log.utility / log.cost : 0.0;
        log.rho_final = outcome.rho_final;
        log.solver_iterations = outcome.solver_iterations;

        for (int i = 0; i < n; ++i) {
            queues[static_cast<size_t>(i)] =
                update_queue(queues[static_cast<size_t>(i)], admitted[static_cast<size_t>(i)],
                             scenario.clients[static_cast<size_t>(i)].weight);
        }
        log.queues = queues;
        log.assignment = std::move(outcome.assignment);
        utility_cost.emplace_back(log.utility, log.cost);
        if (options.collect_trace) {
            for (auto &rec : outcome.trace) result.trace.emplace_back(t, rec);
        }
        result.rounds.push_back(std::move(log));
    }

    result.rue = rue(utility_cost);
    double total = 0.0;
    for (const auto &r : result.rounds) total += r.trained_samples;
    result.avg_training_amount = total / static_cast<double>(options.rounds);
    return result;
}

}  // namespace refinery
