#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "refinery/model_profile.hpp"
#include "refinery/topology.hpp"

namespace refinery {

struct ClientState {
    std::string id;
    int node = -1;             // topology node
    double weight = 0.0;       // raw p_i, sums to 1 across clients
    long dataset_size = 0;     // |D_i|
    double capacity = 0.0;     // c_it, compute units per second this round
    double queue = 0.0;        // Q_i, may be negative
    double ps_bandwidth = 0.0; // b_it to the parameter server
    double comm_cost = 0.0;    // gamma_i per second
};

struct SiteState {
    std::string id;
    int node = -1;
    double server_capacity = 0.0;  // w_j per virtual server
    int num_servers = 0;           // Omega_j
    double unit_server_cost = 0.0; // alpha_j per second
    double comm_cost = 0.0;        // gamma'_j per second
};

struct TaskConfig {
    ModelProfile profile;
    std::vector<int> candidate_cuts;  // effective partition points, ascending
    int epochs = 1;
    int batch_size = 1;
    double deadline = 0.0;        // Delta, seconds
    double sched_msg_size = 0.0;  // delta
    double status_msg_size = 0.0; // delta'
    double fairness_weight = 1.0; // lambda
    double utility_scale = 1.0;   // p'
};

/// mu: round latency excluding the exchange-transfer term, i.e. parameter
/// server transfers plus client-side and server-side compute.
double compute_mu(const ClientState &client, const SiteState &site, const LayerCut &cut,
                  const TaskConfig &task);

/// Minimal end-to-end bandwidth that finishes the round exactly at the
/// deadline. Empty when the pair cannot meet the deadline at any bandwidth.
std::optional<double> compute_phi(const ClientState &client, const SiteState &site,
                                  const LayerCut &cut, const TaskConfig &task);

/// Cut minimizing phi over the candidate cuts (ties to the smallest k),
/// with the minimizing phi value. Empty when no cut is feasible.
std::optional<std::pair<int, double>> optimal_partition(const ClientState &client,
                                                        const SiteState &site,
                                                        const TaskConfig &task,
                                                        const std::vector<int> &candidate_cuts);

/// U_t with p'-scaled weights: sum over admitted of (p_i * p' + lambda * Q_i).
double training_utility(const std::vector<ClientState> &clients,
                        const std::vector<char> &admitted, double fairness_weight,
                        double utility_scale);

double update_queue(double queue, int admitted, double weight);

/// Mean of per-round U/C ratios; rounds with zero cost contribute zero.
double rue(const std::vector<std::pair<double, double>> &utility_cost);

struct AssignmentEntry {
    int client = -1;
    int site = -1;       // -1 for local training
    int path = -1;       // index into the (client, site) path list
    int cut = 0;         // partition point; num_layers means local training
    double bandwidth = 0.0;
    bool local = false;
};

struct Assignment {
    std::vector<AssignmentEntry> admitted;  // sorted by client index
    std::vector<int> rejected;
    bool infeasible_bound = false;  // capacity constraints intentionally ignored
};

struct LatencyBreakdown {
    double dispatch = 0.0;  // tau0: scheduling message + model download
    double training = 0.0;  // tau1: split training including exchange transfer
    double report = 0.0;    // tau2: model upload + status message
    double total = 0.0;
};

/// Immutable per-round snapshot with the derived coefficients the solver
/// consumes. Everything is computed from the raw states at construction.
class SchedulingInstance {
  public:
    SchedulingInstance(const Topology &topo, const PathSet &paths,
                       std::vector<ClientState> clients, std::vector<SiteState> sites,
                       TaskConfig task);

    const Topology &topology() const { return *topo_; }
    const PathSet &paths() const { return *paths_; }
    const std::vector<ClientState> &clients() const { return clients_; }
    const std::vector<SiteState> &sites() const { return sites_; }
    const TaskConfig &task() const { return task_; }

    int num_clients() const { return static_cast<int>(clients_.size()); }
    int num_sites() const { return static_cast<int>(sites_.size()); }

    double mu(int client, int site, int cut) const;
    std::optional<double> phi(int client, int site, int cut) const;
    /// Theorem-1 optimum (k*, phi*) for the pair, over the task candidate cuts.
    std::optional<std::pair<int, double>> best_option(int client, int site) const;

    /// alpha'_ij = (alpha_j + gamma_i + gamma'_j) * Delta
    double server_round_cost(int client, int site) const;
    /// beta'_e = beta_e * Delta, keyed by capacity group
    double link_round_cost(int group) const;

    const std::vector<Path> &pair_paths(int client, int site) const;

    /// Scaled utility coefficient p_i * p' + lambda * Q_i.
    double client_utility(int client) const;

  private:
    const Topology *topo_;
    const PathSet *paths_;
    std::vector<ClientState> clients_;
    std::vector<SiteState> sites_;
    TaskConfig task_;
    std::vector<std::optional<std::pair<int, double>>> best_;  // per (client, site)
};

double system_cost(const Assignment &assignment, const SchedulingInstance &instance);

LatencyBreakdown round_latency(const AssignmentEntry &entry, const SchedulingInstance &instance);

/// Latency of training the full model locally (no server, no split).
double local_training_latency(const ClientState &client, const TaskConfig &task);

}  // namespace refinery
