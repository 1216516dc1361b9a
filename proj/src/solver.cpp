#include "refinery/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "refinery/errors.hpp"
#include "refinery/lp.hpp"

namespace refinery {

namespace {
constexpr double kFeasTol = 1e-9;

double capacity_tolerance(double capacity) {
    return kFeasTol * std::max(1.0, capacity);
}
}  // namespace

P1Problem build_p1(const SchedulingInstance &instance, double rho,
                   const BuildP1Options &options) {
    P1Problem p1;
    p1.rho = rho;
    p1.num_clients = instance.num_clients();
    p1.client_vars.resize(static_cast<size_t>(p1.num_clients));
    p1.site_servers.reserve(static_cast<size_t>(instance.num_sites()));
    for (const auto &site : instance.sites()) p1.site_servers.push_back(site.num_servers);
    p1.group_capacity.resize(static_cast<size_t>(instance.topology().num_groups()));
    for (int g = 0; g < instance.topology().num_groups(); ++g) {
        p1.group_capacity[static_cast<size_t>(g)] = instance.topology().group_capacity(g);
    }

    double lambda = options.lambda_override.value_or(instance.task().fairness_weight);
    for (int i = 0; i < instance.num_clients(); ++i) {
        if (options.client_mask && !(*options.client_mask)[static_cast<size_t>(i)]) continue;
        const ClientState &client = instance.clients()[static_cast<size_t>(i)];
        double utility = client.weight * instance.task().utility_scale + lambda * client.queue;
        for (int j = 0; j < instance.num_sites(); ++j) {
            std::optional<std::pair<int, double>> option;
            if (options.fixed_cut >= 0) {
                auto phi = instance.phi(i, j, options.fixed_cut);
                if (phi) option = {options.fixed_cut, *phi};
            } else {
                option = instance.best_option(i, j);
            }
            if (!option) continue;
            const auto &paths = instance.pair_paths(i, j);
            int limit = static_cast<int>(paths.size());
            if (options.max_paths > 0) limit = std::min(limit, options.max_paths);
            for (int l = 0; l < limit; ++l) {
                P1Variable var;
                var.client = i;
                var.site = j;
                var.path = l;
                var.cut = option->first;
                var.demand = option->second;
                var.utility = utility;
                var.cost = instance.server_round_cost(i, j);
                bool fits = true;
                for (int arc : paths[static_cast<size_t>(l)].links) {
                    int group = instance.topology().link(arc).group;
                    var.groups.push_back(group);
                    var.cost += instance.link_round_cost(group) * var.demand;
                    if (var.demand > p1.group_capacity[static_cast<size_t>(group)] +
                                         capacity_tolerance(p1.group_capacity[static_cast<size_t>(group)])) {
                        fits = false;
                    }
                }
                if (!fits) continue;  // can never be rounded to one
                p1.client_vars[static_cast<size_t>(i)].push_back(static_cast<int>(p1.vars.size()));
                p1.vars.push_back(std::move(var));
            }
        }
    }
    return p1;
}

bool feasibility_check(const std::vector<int> &chosen, const P1Problem &p1) {
    std::vector<int> per_client(static_cast<size_t>(p1.num_clients), 0);
    std::vector<int> per_site(p1.site_servers.size(), 0);
    std::vector<double> per_group(p1.group_capacity.size(), 0.0);
    for (int v : chosen) {
        const P1Variable &var = p1.vars[static_cast<size_t>(v)];
        if (++per_client[static_cast<size_t>(var.client)] > 1) return false;
        if (++per_site[static_cast<size_t>(var.site)] >
            p1.site_servers[static_cast<size_t>(var.site)]) {
            return false;
        }
        for (int g : var.groups) per_group[static_cast<size_t>(g)] += var.demand;
    }
    for (size_t g = 0; g < per_group.size(); ++g) {
        if (per_group[g] > p1.group_capacity[g] + capacity_tolerance(p1.group_capacity[g])) {
            return false;
        }
    }
    return true;
}

std::vector<double> solve_relaxation(const P1Problem &p1, const std::vector<int> &fixed_ones,
                                     const std::vector<char> &excluded) {
    const int n = static_cast<int>(p1.vars.size());
    LpProblem lp;
    std::vector<char> pinned_client(static_cast<size_t>(p1.num_clients), 0);
    for (int v : fixed_ones) {
        pinned_client[static_cast<size_t>(p1.vars[static_cast<size_t>(v)].client)] = 1;
    }
    std::vector<char> is_fixed(static_cast<size_t>(n), 0);
    for (int v : fixed_ones) is_fixed[static_cast<size_t>(v)] = 1;

    for (int v = 0; v < n; ++v) {
        const P1Variable &var = p1.vars[static_cast<size_t>(v)];
        double lo = 0.0, hi = 1.0;
        if (is_fixed[static_cast<size_t>(v)]) {
            lo = hi = 1.0;
        } else if ((!excluded.empty() && excluded[static_cast<size_t>(v)]) ||
                   pinned_client[static_cast<size_t>(var.client)]) {
            hi = 0.0;
        }
        lp.add_variable(p1.omega(v), lo, hi);
    }

    std::vector<int> client_row(static_cast<size_t>(p1.num_clients), -1);
    std::vector<int> site_row(p1.site_servers.size(), -1);
    std::vector<int> group_row(p1.group_capacity.size(), -1);
    for (int v = 0; v < n; ++v) {
        const P1Variable &var = p1.vars[static_cast<size_t>(v)];
        size_t ci = static_cast<size_t>(var.client);
        if (client_row[ci] < 0) client_row[ci] = lp.add_row(1.0);
        lp.add_coefficient(client_row[ci], v, 1.0);
        size_t si = static_cast<size_t>(var.site);
        if (site_row[si] < 0) {
            site_row[si] = lp.add_row(static_cast<double>(p1.site_servers[si]));
        }
        lp.add_coefficient(site_row[si], v, 1.0);
        for (int g : var.groups) {
            size_t gi = static_cast<size_t>(g);
            if (group_row[gi] < 0) group_row[gi] = lp.add_row(p1.group_capacity[gi]);
            lp.add_coefficient(group_row[gi], v, var.demand);
        }
    }
    return solve_lp(lp).x;
}

namespace {

RoundedSolution make_solution(std::vector<int> chosen, const P1Problem &p1) {
    std::sort(chosen.begin(), chosen.end());
    RoundedSolution out;
    out.chosen = std::move(chosen);
    for (int v : out.chosen) {
        out.objective += p1.omega(v);
        out.utility += p1.vars[static_cast<size_t>(v)].utility;
        out.cost += p1.vars[static_cast<size_t>(v)].cost;
    }
    return out;
}

}  // namespace

RoundedSolution greedy_round(const P1Problem &p1) {
    const int n = static_cast<int>(p1.vars.size());
    enum Status { Undecided, Accepted, Rejected };
    std::vector<Status> status(static_cast<size_t>(p1.num_clients), Rejected);
    int undecided = 0;
    for (int i = 0; i < p1.num_clients; ++i) {
        if (!p1.client_vars[static_cast<size_t>(i)].empty()) {
            status[static_cast<size_t>(i)] = Undecided;
            ++undecided;
        }
    }

    std::vector<char> excluded(static_cast<size_t>(n), 0);
    std::vector<int> accepted_vars;

    while (undecided > 0) {
        std::vector<double> theta = solve_relaxation(p1, accepted_vars, excluded);

        std::vector<int> order;
        for (int v = 0; v < n; ++v) {
            const P1Variable &var = p1.vars[static_cast<size_t>(v)];
            if (status[static_cast<size_t>(var.client)] != Undecided) continue;
            if (excluded[static_cast<size_t>(v)]) continue;
            order.push_back(v);
        }
        // Candidates with a zero LP value still tie on omega so that cheap
        // triples are tried before expensive ones.
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            double sa = p1.omega(a) * theta[static_cast<size_t>(a)];
            double sb = p1.omega(b) * theta[static_cast<size_t>(b)];
            if (sa != sb) return sa > sb;
            return p1.omega(a) > p1.omega(b);
        });

        for (int v : order) {
            std::vector<int> tentative = accepted_vars;
            tentative.push_back(v);
            if (feasibility_check(tentative, p1)) {
                accepted_vars.push_back(v);
                status[static_cast<size_t>(p1.vars[static_cast<size_t>(v)].client)] = Accepted;
                --undecided;
                break;
            }
            excluded[static_cast<size_t>(v)] = 1;
        }

        for (int i = 0; i < p1.num_clients; ++i) {
            if (status[static_cast<size_t>(i)] != Undecided) continue;
            bool alive = false;
            for (int v : p1.client_vars[static_cast<size_t>(i)]) {
                if (!excluded[static_cast<size_t>(v)]) {
                    alive = true;
                    break;
                }
            }
            if (!alive) {
                status[static_cast<size_t>(i)] = Rejected;
                --undecided;
            }
        }
    }
    return make_solution(std::move(accepted_vars), p1);
}

namespace {

struct ExactSearch {
    const P1Problem &p1;
    long long budget;
    std::vector<int> clients;  // clients that own at least one variable
    std::vector<double> best_omega_suffix;
    std::vector<double> best_gamma_suffix;
    std::vector<int> site_used;
    std::vector<double> group_used;
    std::vector<int> current;
    double current_obj = 0.0;
    double current_gamma = 0.0;
    std::vector<int> best;
    double best_obj = 0.0;
    double best_gamma = 0.0;

    explicit ExactSearch(const P1Problem &problem, long long budget_limit)
        : p1(problem), budget(budget_limit) {
        long long combos = 1;
        for (int i = 0; i < p1.num_clients; ++i) {
            if (p1.client_vars[static_cast<size_t>(i)].empty()) continue;
            clients.push_back(i);
            long long options =
                static_cast<long long>(p1.client_vars[static_cast<size_t>(i)].size()) + 1;
            if (combos > budget / options) {
                throw Error(ErrorKind::BudgetExceeded,
                            "exact solve: candidate combinations exceed budget " +
                                std::to_string(budget));
            }
            combos *= options;
        }
        size_t depth = clients.size();
        best_omega_suffix.assign(depth + 1, 0.0);
        best_gamma_suffix.assign(depth + 1, 0.0);
        for (size_t d = depth; d-- > 0;) {
            double w = 0.0, g = 0.0;
            for (int v : p1.client_vars[static_cast<size_t>(clients[d])]) {
                w = std::max(w, p1.omega(v));
                g = std::max(g, p1.vars[static_cast<size_t>(v)].utility);
            }
            best_omega_suffix[d] = best_omega_suffix[d + 1] + w;
            best_gamma_suffix[d] = best_gamma_suffix[d + 1] + std::max(0.0, g);
        }
        site_used.assign(p1.site_servers.size(), 0);
        group_used.assign(p1.group_capacity.size(), 0.0);
    }

    bool improves(double obj, double gamma) const {
        if (obj > best_obj + 1e-12) return true;
        return obj > best_obj - 1e-12 && gamma > best_gamma + 1e-12;
    }

    void dfs(size_t depth) {
        double obj_bound = current_obj + best_omega_suffix[depth];
        double gamma_bound = current_gamma + best_gamma_suffix[depth];
        if (!improves(obj_bound, gamma_bound)) return;
        if (depth == clients.size()) {
            if (improves(current_obj, current_gamma)) {
                best = current;
                best_obj = current_obj;
                best_gamma = current_gamma;
            }
            return;
        }
        int client = clients[depth];
        for (int v : p1.client_vars[static_cast<size_t>(client)]) {
            const P1Variable &var = p1.vars[static_cast<size_t>(v)];
            // Strictly negative weights never help a maximizer; the epsilon
            // keeps boundary variables whose omega is zero up to rounding,
            // where the utility tie-break must still see them.
            double noise = 1e-9 * std::max(1.0, std::fabs(var.utility) + p1.rho * var.cost);
            if (p1.omega(v) < -noise) continue;
            size_t si = static_cast<size_t>(var.site);
            if (site_used[si] + 1 > p1.site_servers[si]) continue;
            bool fits = true;
            for (int g : var.groups) {
                size_t gi = static_cast<size_t>(g);
                if (group_used[gi] + var.demand >
                    p1.group_capacity[gi] + capacity_tolerance(p1.group_capacity[gi])) {
                    fits = false;
                    break;
                }
            }
            if (!fits) continue;
            ++site_used[si];
            for (int g : var.groups) group_used[static_cast<size_t>(g)] += var.demand;
            current.push_back(v);
            current_obj += p1.omega(v);
            current_gamma += var.utility;
            dfs(depth + 1);
            current_gamma -= var.utility;
            current_obj -= p1.omega(v);
            current.pop_back();
            for (int g : var.groups) group_used[static_cast<size_t>(g)] -= var.demand;
            --site_used[si];
        }
        dfs(depth + 1);  // leave this client unassigned
    }
};

}  // namespace

RoundedSolution exact_solve(const P1Problem &p1, long long budget) {
    ExactSearch search(p1, budget);
    search.dfs(0);
    return make_solution(std::move(search.best), p1);
}

namespace {

RoundedSolution sample_rounding(const P1Problem &p1, Rng &rng, bool weighted) {
    std::vector<double> theta = solve_relaxation(p1, {}, {});
    std::vector<int> accepted;
    for (int i = 0; i < p1.num_clients; ++i) {
        const auto &vars = p1.client_vars[static_cast<size_t>(i)];
        if (vars.empty()) continue;
        int sampled = -1;
        if (weighted) {
            std::vector<double> scores;
            double total = 0.0;
            for (int v : vars) {
                double s = p1.omega(v) * theta[static_cast<size_t>(v)];
                s = s > 0.0 ? s : 0.0;
                scores.push_back(s);
                total += s;
            }
            if (total > 0.0) sampled = vars[rng.categorical(scores)];
        } else {
            // Residual mass 1 - sum(theta) is a genuine no-admit outcome.
            double r = rng.uniform();
            double acc = 0.0;
            for (int v : vars) {
                acc += theta[static_cast<size_t>(v)];
                if (r < acc) {
                    sampled = v;
                    break;
                }
            }
        }
        if (sampled < 0) continue;
        std::vector<int> tentative = accepted;
        tentative.push_back(sampled);
        if (feasibility_check(tentative, p1)) accepted.push_back(sampled);
    }
    return make_solution(std::move(accepted), p1);
}

}  // namespace

RoundedSolution weighted_randomized_rounding(const P1Problem &p1, Rng &rng) {
    return sample_rounding(p1, rng, true);
}

RoundedSolution randomized_rounding(const P1Problem &p1, Rng &rng) {
    return sample_rounding(p1, rng, false);
}

Assignment assignment_from_solution(const RoundedSolution &solution, const P1Problem &p1,
                                    int num_clients) {
    Assignment assignment;
    std::vector<char> admitted(static_cast<size_t>(num_clients), 0);
    for (int v : solution.chosen) {
        const P1Variable &var = p1.vars[static_cast<size_t>(v)];
        assignment.admitted.push_back(
            {var.client, var.site, var.path, var.cut, var.demand, false});
        admitted[static_cast<size_t>(var.client)] = 1;
    }
    std::sort(assignment.admitted.begin(), assignment.admitted.end(),
              [](const AssignmentEntry &a, const AssignmentEntry &b) {
                  return a.client < b.client;
              });
    for (int i = 0; i < num_clients; ++i) {
        if (!admitted[static_cast<size_t>(i)]) assignment.rejected.push_back(i);
    }
    return assignment;
}

DinkelbachResult dinkelbach_solve(const SchedulingInstance &instance,
                                  const DinkelbachOptions &options, Rng *rng) {
    if (!(options.tolerance > 0.0)) {
        throw Error(ErrorKind::InvariantViolation, "dinkelbach tolerance must be positive");
    }
    if ((options.inner == InnerSolver::WeightedRandom || options.inner == InnerSolver::Random) &&
        rng == nullptr) {
        throw Error(ErrorKind::InvariantViolation, "randomized inner solver needs an rng");
    }

    DinkelbachResult result;
    double rho = 0.0;
    RoundedSolution last;
    P1Problem last_p1;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        P1Problem p1 = build_p1(instance, rho, options.build);
        RoundedSolution sol;
        switch (options.inner) {
            case InnerSolver::Greedy: sol = greedy_round(p1); break;
            case InnerSolver::Exact: sol = exact_solve(p1, options.exact_budget); break;
            case InnerSolver::WeightedRandom: sol = weighted_randomized_rounding(p1, *rng); break;
            case InnerSolver::Random: sol = randomized_rounding(p1, *rng); break;
        }
        double objective = sol.utility - rho * sol.cost;
        result.trace.push_back({rho, sol.utility, sol.cost, objective,
                                static_cast<int>(sol.chosen.size()),
                                instance.num_clients() - static_cast<int>(sol.chosen.size())});
        result.iterations = iter;
        last = sol;
        last_p1 = std::move(p1);

        if (sol.chosen.empty()) {
            // No admittable client at this rho; rho stays as it is.
            result.assignment = assignment_from_solution(sol, last_p1, instance.num_clients());
            result.rho_final = rho;
            return result;
        }
        if (std::fabs(objective) <= options.tolerance) {
            result.assignment = assignment_from_solution(sol, last_p1, instance.num_clients());
            result.rho_final = rho;
            return result;
        }
        if (!(sol.cost > 0.0)) {
            // Zero-cost schedules make the ratio degenerate; stop with what we have.
            result.assignment = assignment_from_solution(sol, last_p1, instance.num_clients());
            result.rho_final = rho;
            result.converged = false;
            return result;
        }
        double next_rho = sol.utility / sol.cost;
        if (next_rho < rho - 1e-9 * std::max(1.0, std::fabs(rho))) {
            result.rho_monotone = false;
            if (options.inner == InnerSolver::Exact) {
                throw Error(ErrorKind::InvariantViolation,
                            "dinkelbach rho decreased with the exact inner solver");
            }
        }
        rho = next_rho;
    }
    result.max_iter_exceeded = true;
    result.converged = false;
    result.assignment = assignment_from_solution(last, last_p1, instance.num_clients());
    result.rho_final = rho;
    return result;
}

}  // namespace refinery
