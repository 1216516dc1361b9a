#include "refinery/scheduling.hpp"

#include <cmath>

#include "refinery/errors.hpp"

namespace refinery {

double compute_mu(const ClientState &client, const SiteState &site, const LayerCut &cut,
                  const TaskConfig &task) {
    double transfer = (task.sched_msg_size + task.status_msg_size + 2.0 * task.profile.model_size) /
                      client.ps_bandwidth;
    double batches = static_cast<double>(task.epochs) * static_cast<double>(client.dataset_size) /
                     static_cast<double>(task.batch_size);
    return transfer + batches * cut.client_density / client.capacity +
           batches * cut.server_density / site.server_capacity;
}

std::optional<double> compute_phi(const ClientState &client, const SiteState &site,
                                  const LayerCut &cut, const TaskConfig &task) {
    double mu = compute_mu(client, site, cut, task);
    if (!(task.deadline > mu)) return std::nullopt;
    double batches = static_cast<double>(task.epochs) * static_cast<double>(client.dataset_size) /
                     static_cast<double>(task.batch_size);
    return batches * cut.exchange_size / (task.deadline - mu);
}

std::optional<std::pair<int, double>> optimal_partition(const ClientState &client,
                                                        const SiteState &site,
                                                        const TaskConfig &task,
                                                        const std::vector<int> &candidate_cuts) {
    std::optional<std::pair<int, double>> best;
    for (int k : candidate_cuts) {
        auto phi = compute_phi(client, site, task.profile.cut(k), task);
        if (!phi) continue;
        if (!best || *phi < best->second) best = {k, *phi};
    }
    return best;
}

double training_utility(const std::vector<ClientState> &clients,
                        const std::vector<char> &admitted, double fairness_weight,
                        double utility_scale) {
    double total = 0.0;
    for (size_t i = 0; i < clients.size(); ++i) {
        if (!admitted[i]) continue;
        total += clients[i].weight * utility_scale + fairness_weight * clients[i].queue;
    }
    return total;
}

double update_queue(double queue, int admitted, double weight) {
    return queue - static_cast<double>(admitted) + weight;
}

double rue(const std::vector<std::pair<double, double>> &utility_cost) {
    if (utility_cost.empty()) return 0.0;
    double total = 0.0;
    for (const auto &[utility, cost] : utility_cost) {
        if (cost > 0.0) total += utility / cost;
    }
    return total / static_cast<double>(utility_cost.size());
}

SchedulingInstance::SchedulingInstance(const Topology &topo, const PathSet &paths,
                                       std::vector<ClientState> clients,
                                       std::vector<SiteState> sites, TaskConfig task)
    : topo_(&topo),
      paths_(&paths),
      clients_(std::move(clients)),
      sites_(std::move(sites)),
      task_(std::move(task)) {
    for (const auto &c : clients_) {
        if (!(c.weight > 0.0) || c.dataset_size < 1 || !(c.capacity > 0.0) ||
            !(c.ps_bandwidth > 0.0)) {
            throw Error(ErrorKind::InvariantViolation, "client " + c.id + " has invalid state");
        }
    }
    for (const auto &s : sites_) {
        if (!(s.server_capacity > 0.0) || s.num_servers < 1 || s.unit_server_cost < 0.0) {
            throw Error(ErrorKind::InvariantViolation, "site " + s.id + " has invalid state");
        }
    }
    best_.resize(clients_.size() * sites_.size());
    for (int i = 0; i < num_clients(); ++i) {
        for (int j = 0; j < num_sites(); ++j) {
            best_[static_cast<size_t>(i * num_sites() + j)] =
                optimal_partition(clients_[static_cast<size_t>(i)],
                                  sites_[static_cast<size_t>(j)], task_, task_.candidate_cuts);
        }
    }
}

double SchedulingInstance::mu(int client, int site, int cut) const {
    return compute_mu(clients_[static_cast<size_t>(client)], sites_[static_cast<size_t>(site)],
                      task_.profile.cut(cut), task_);
}

std::optional<double> SchedulingInstance::phi(int client, int site, int cut) const {
    return compute_phi(clients_[static_cast<size_t>(client)], sites_[static_cast<size_t>(site)],
                       task_.profile.cut(cut), task_);
}

std::optional<std::pair<int, double>> SchedulingInstance::best_option(int client, int site) const {
    return best_[static_cast<size_t>(client * num_sites() + site)];
}

double SchedulingInstance::server_round_cost(int client, int site) const {
    const ClientState &c = clients_[static_cast<size_t>(client)];
    const SiteState &s = sites_[static_cast<size_t>(site)];
    return (s.unit_server_cost + c.comm_cost + s.comm_cost) * task_.deadline;
}

double SchedulingInstance::link_round_cost(int group) const {
    return topo_->group_cost(group) * task_.deadline;
}

const std::vector<Path> &SchedulingInstance::pair_paths(int client, int site) const {
    return paths_->paths(clients_[static_cast<size_t>(client)].node,
                         sites_[static_cast<size_t>(site)].node);
}

double SchedulingInstance::client_utility(int client) const {
    const ClientState &c = clients_[static_cast<size_t>(client)];
    return c.weight * task_.utility_scale + task_.fairness_weight * c.queue;
}

double system_cost(const Assignment &assignment, const SchedulingInstance &instance) {
    double total = 0.0;
    for (const auto &entry : assignment.admitted) {
        const ClientState &c = instance.clients()[static_cast<size_t>(entry.client)];
        if (entry.local) {
            total += c.comm_cost * instance.task().deadline;
            continue;
        }
        total += instance.server_round_cost(entry.client, entry.site);
        const Path &path =
            instance.pair_paths(entry.client, entry.site)[static_cast<size_t>(entry.path)];
        for (int arc : path.links) {
            int group = instance.topology().link(arc).group;
            total += instance.link_round_cost(group) * entry.bandwidth;
        }
    }
    return total;
}

LatencyBreakdown round_latency(const AssignmentEntry &entry, const SchedulingInstance &instance) {
    const TaskConfig &task = instance.task();
    const ClientState &c = instance.clients()[static_cast<size_t>(entry.client)];
    LatencyBreakdown out;
    out.dispatch = (task.sched_msg_size + task.profile.model_size) / c.ps_bandwidth;
    out.report = (task.profile.model_size + task.status_msg_size) / c.ps_bandwidth;
    double batches = static_cast<double>(task.epochs) * static_cast<double>(c.dataset_size) /
                     static_cast<double>(task.batch_size);
    if (entry.local) {
        out.training = batches * task.profile.full_client_density() / c.capacity;
    } else {
        const SiteState &s = instance.sites()[static_cast<size_t>(entry.site)];
        const LayerCut &cut = task.profile.cut(entry.cut);
        double exchange = cut.exchange_size > 0.0 ? cut.exchange_size / entry.bandwidth : 0.0;
        out.training = batches * (cut.client_density / c.capacity +
                                  cut.server_density / s.server_capacity + exchange);
    }
    out.total = out.dispatch + out.training + out.report;
    return out;
}

double local_training_latency(const ClientState &client, const TaskConfig &task) {
    double transfer = (task.sched_msg_size + task.status_msg_size + 2.0 * task.profile.model_size) /
                      client.ps_bandwidth;
    double batches = static_cast<double>(task.epochs) * static_cast<double>(client.dataset_size) /
                     static_cast<double>(task.batch_size);
    return transfer + batches * task.profile.full_client_density() / client.capacity;
}

}  // namespace refinery
