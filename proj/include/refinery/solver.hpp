#pragma once

#include <optional>
#include <vector>

#include "refinery/rng.hpp"
#include "refinery/scheduling.hpp"

namespace refinery {

/// One selectable triple (client, site, path) with its Theorem-1 cut pinned.
struct P1Variable {
    int client = -1;
    int site = -1;
    int path = -1;
    int cut = 0;
    double demand = 0.0;   // phi*, the bandwidth this triple consumes if chosen
    double utility = 0.0;  // p_i p' + lambda Q_i
    double cost = 0.0;     // alpha'_ij + phi* . sum of beta'_e along the path
    std::vector<int> groups;  // capacity groups traversed by the path
};

struct P1Problem {
    std::vector<P1Variable> vars;  // sorted by (client, site, path)
    int num_clients = 0;
    std::vector<int> site_servers;        // Omega per site
    std::vector<double> group_capacity;   // B_e per capacity group
    std::vector<std::vector<int>> client_vars;
    double rho = 0.0;

    double omega(int var) const {
        return vars[static_cast<size_t>(var)].utility - rho * vars[static_cast<size_t>(var)].cost;
    }
};

struct BuildP1Options {
    const std::vector<char> *client_mask = nullptr;  // admission pre-filter
    int fixed_cut = -1;                              // force one shared cut
    int max_paths = 0;                               // 0 = all candidate paths
    std::optional<double> lambda_override;           // fairness weight override
};

P1Problem build_p1(const SchedulingInstance &instance, double rho,
                   const BuildP1Options &options = {});

struct RoundedSolution {
    std::vector<int> chosen;  // variable indices, ascending
    double objective = 0.0;   // sum of omega
    double utility = 0.0;     // Gamma
    double cost = 0.0;        // Psi
};

/// Direct evaluation of the three P1 constraint families for a fully fixed
/// set of triples.
bool feasibility_check(const std::vector<int> &chosen, const P1Problem &p1);

/// Continuous relaxation with the given variables pinned to one (and their
/// clients' alternatives to zero) and the excluded variables pinned to zero.
std::vector<double> solve_relaxation(const P1Problem &p1, const std::vector<int> &fixed_ones,
                                     const std::vector<char> &excluded);

RoundedSolution greedy_round(const P1Problem &p1);

/// Branch and bound over per-client choices; exact optimum of P1. Throws
/// BudgetExceeded when the product of per-client choice counts exceeds budget.
RoundedSolution exact_solve(const P1Problem &p1, long long budget = 1LL << 20);

RoundedSolution weighted_randomized_rounding(const P1Problem &p1, Rng &rng);
RoundedSolution randomized_rounding(const P1Problem &p1, Rng &rng);

enum class InnerSolver { Greedy, Exact, WeightedRandom, Random };

struct DinkelbachOptions {
    double tolerance = 1e-6;
    int max_iterations = 50;
    InnerSolver inner = InnerSolver::Greedy;
    long long exact_budget = 1LL << 20;
    BuildP1Options build;
};

struct DinkelbachIteration {
    double rho = 0.0;
    double gamma = 0.0;
    double psi = 0.0;
    double objective = 0.0;
    int accepted = 0;
    int rejected = 0;
};

struct DinkelbachResult {
    Assignment assignment;
    double rho_final = 0.0;
    int iterations = 0;
    bool converged = true;
    bool rho_monotone = true;
    bool max_iter_exceeded = false;
    std::vector<DinkelbachIteration> trace;
};

/// Ratio maximization: iterate rho <- Gamma/Psi of the inner solution until
/// the parametric objective Gamma - rho Psi is within tolerance of zero.
DinkelbachResult dinkelbach_solve(const SchedulingInstance &instance,
                                  const DinkelbachOptions &options, Rng *rng = nullptr);

Assignment assignment_from_solution(const RoundedSolution &solution, const P1Problem &p1,
                                    int num_clients);

}  // namespace refinery
