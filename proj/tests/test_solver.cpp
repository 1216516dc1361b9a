#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "refinery/errors.hpp"
#include "refinery/rng.hpp"
#include "refinery/solver.hpp"
#include "test_helpers.hpp"

using namespace refinery;
using refinery::testing::StarWorldConfig;
using refinery::testing::TinyWorld;
using refinery::testing::make_star_world;
using refinery::testing::make_unit_task;

namespace {

struct P1Builder {
    P1Problem p1;

    explicit P1Builder(int clients, std::vector<int> servers, std::vector<double> caps) {
        p1.num_clients = clients;
        p1.client_vars.resize(static_cast<size_t>(clients));
        p1.site_servers = std::move(servers);
        p1.group_capacity = std::move(caps);
    }

    int add(int client, int site, double demand, double utility, double cost,
            std::vector<int> groups) {
        P1Variable v;
        v.client = client;
        v.site = site;
        v.path = static_cast<int>(p1.client_vars[static_cast<size_t>(client)].size());
        v.cut = 1;
        v.demand = demand;
        v.utility = utility;
        v.cost = cost;
        v.groups = std::move(groups);
        int index = static_cast<int>(p1.vars.size());
        p1.client_vars[static_cast<size_t>(client)].push_back(index);
        p1.vars.push_back(std::move(v));
        return index;
    }
};

// Test-side oracle: enumerate every per-client choice combination, keep the
// best (objective, utility) pair among feasible ones.
struct EnumBest {
    double objective = 0.0;
    double utility = 0.0;
    std::vector<int> chosen;
};

void enumerate_all(const P1Problem &p1, size_t client, std::vector<int> &chosen, EnumBest &best) {
    if (client == p1.client_vars.size()) {
        if (!feasibility_check(chosen, p1)) return;
        double obj = 0.0, util = 0.0;
        for (int v : chosen) {
            obj += p1.omega(v);
            util += p1.vars[static_cast<size_t>(v)].utility;
        }
        bool better = obj > best.objective + 1e-12 ||
                      (obj > best.objective - 1e-12 && util > best.utility + 1e-12);
        if (better) best = {obj, util, chosen};
        return;
    }
    enumerate_all(p1, client + 1, chosen, best);
    for (int v : p1.client_vars[client]) {
        chosen.push_back(v);
        enumerate_all(p1, client + 1, chosen, best);
        chosen.pop_back();
    }
}

EnumBest enumerate_best(const P1Problem &p1) {
    EnumBest best;
    std::vector<int> chosen;
    enumerate_all(p1, 0, chosen, best);
    return best;
}

}  // namespace

TEST_CASE("build_p1 variable counting") {
    SUBCASE("one client, one site, one path") {
        StarWorldConfig cfg;
        cfg.clients.push_back({});
        cfg.sites.push_back({});
        cfg.task = make_unit_task(1.0);
        TinyWorld world = make_star_world(cfg);
        SchedulingInstance instance = world.instance();
        P1Problem p1 = build_p1(instance, 0.0);
        CHECK(p1.vars.size() == 1);
    }
    SUBCASE("infeasible pair contributes no variables") {
        StarWorldConfig cfg;
        StarWorldConfig::Client slow;
        slow.dataset = 100;
        slow.capacity = 1.0;
        cfg.clients.push_back(slow);
        cfg.sites.push_back({});
        cfg.task = make_unit_task(1.0, 1.0, /*q_client=*/10.0);  // mu far beyond deadline
        TinyWorld world = make_star_world(cfg);
        SchedulingInstance instance = world.instance();
        P1Problem p1 = build_p1(instance, 0.0);
        CHECK(p1.vars.empty());
    }
    SUBCASE("2 clients x 2 sites x 2 paths gives 8 variables") {
        // Two hubs in parallel make two paths per pair.
        std::vector<NodeSpec> nodes = {{"c0", NodeKind::Client}, {"c1", NodeKind::Client},
                                       {"h1", NodeKind::Router}, {"h2", NodeKind::Router},
                                       {"s0", NodeKind::Site},   {"s1", NodeKind::Site}};
        std::vector<LinkSpec> links;
        int id = 0;
        for (const char *c : {"c0", "c1"}) {
            for (const char *h : {"h1", "h2"}) {
                links.push_back({"e" + std::to_string(id++), c, h, 1e9, 0.0, true});
            }
        }
        for (const char *h : {"h1", "h2"}) {
            for (const char *s : {"s0", "s1"}) {
                links.push_back({"e" + std::to_string(id++), h, s, 1e9, 0.0, true});
            }
        }
        Topology topo = build_topology(nodes, links);
        PathSet paths(topo, 2);
        TaskConfig task = make_unit_task(1.0);
        std::vector<ClientState> clients(2);
        std::vector<SiteState> sites(2);
        for (int i = 0; i < 2; ++i) {
            clients[static_cast<size_t>(i)].id = "c" + std::to_string(i);
            clients[static_cast<size_t>(i)].node = topo.node_index("c" + std::to_string(i));
            clients[static_cast<size_t>(i)].weight = 1.0;
            clients[static_cast<size_t>(i)].dataset_size = 1;
            clients[static_cast<size_t>(i)].capacity = 1.0;
            clients[static_cast<size_t>(i)].ps_bandwidth = 1.0;
            sites[static_cast<size_t>(i)].id = "s" + std::to_string(i);
            sites[static_cast<size_t>(i)].node = topo.node_index("s" + std::to_string(i));
            sites[static_cast<size_t>(i)].server_capacity = 1.0;
            sites[static_cast<size_t>(i)].num_servers = 1;
        }
        SchedulingInstance instance(topo, paths, clients, sites, task);
        P1Problem p1 = build_p1(instance, 0.0);
        CHECK(p1.vars.size() == 8);
    }
}

TEST_CASE("feasibility_check evaluates the three constraint families") {
    P1Builder b(2, {2}, {5.0});
    int v0 = b.add(0, 0, 3.0, 1.0, 1.0, {0});
    int v1 = b.add(1, 0, 3.0, 1.0, 1.0, {0});

    SUBCASE("bandwidth violation") { CHECK(!feasibility_check({v0, v1}, b.p1)); }
    SUBCASE("boundary load is feasible") {
        b.p1.group_capacity[0] = 6.0;
        CHECK(feasibility_check({v0, v1}, b.p1));
    }
    SUBCASE("server count violation") {
        b.p1.group_capacity[0] = 100.0;
        b.p1.site_servers[0] = 1;
        CHECK(!feasibility_check({v0, v1}, b.p1));
    }
}

TEST_CASE("greedy_round on the two-client one-server instance") {
    // Enumeration oracle over the four subsets confirms {client 0} is optimal.
    P1Builder b(2, {1}, {100.0});
    b.add(0, 0, 1.0, 5.0, 1.0, {0});
    b.add(1, 0, 1.0, 3.0, 1.0, {0});

    EnumBest oracle = enumerate_best(b.p1);
    CHECK(oracle.objective == doctest::Approx(5.0));
    REQUIRE(oracle.chosen.size() == 1);
    CHECK(b.p1.vars[static_cast<size_t>(oracle.chosen[0])].client == 0);

    RoundedSolution sol = greedy_round(b.p1);
    REQUIRE(sol.chosen.size() == 1);
    CHECK(b.p1.vars[static_cast<size_t>(sol.chosen[0])].client == 0);
    CHECK(sol.objective == doctest::Approx(5.0));
}

TEST_CASE("greedy_round accepts a single feasible candidate") {
    P1Builder b(1, {1}, {10.0});
    b.add(0, 0, 1.0, 2.0, 1.0, {0});
    RoundedSolution sol = greedy_round(b.p1);
    CHECK(sol.chosen == std::vector<int>{0});
}

TEST_CASE("greedy_round admits disjoint clients regardless of order") {
    P1Builder b(2, {1, 1}, {10.0, 10.0});
    b.add(0, 0, 1.0, 4.0, 1.0, {0});
    b.add(1, 1, 1.0, 2.0, 1.0, {1});
    RoundedSolution sol = greedy_round(b.p1);
    CHECK(sol.chosen.size() == 2);

    // Brute force over both acceptance orders gives the same admitted set.
    EnumBest oracle = enumerate_best(b.p1);
    CHECK(oracle.chosen.size() == 2);
    CHECK(sol.objective == doctest::Approx(oracle.objective));
}

TEST_CASE("exact_solve basics") {
    SUBCASE("two clients, one server") {
        P1Builder b(2, {1}, {100.0});
        b.add(0, 0, 1.0, 5.0, 1.0, {0});
        b.add(1, 0, 1.0, 3.0, 1.0, {0});
        RoundedSolution sol = exact_solve(b.p1);
        REQUIRE(sol.chosen.size() == 1);
        CHECK(b.p1.vars[static_cast<size_t>(sol.chosen[0])].client == 0);
        CHECK(sol.objective == doctest::Approx(5.0));
    }
    SUBCASE("empty problem") {
        P1Builder b(2, {1}, {1.0});
        RoundedSolution sol = exact_solve(b.p1);
        CHECK(sol.chosen.empty());
        CHECK(sol.objective == doctest::Approx(0.0));
    }
    SUBCASE("budget gate") {
        P1Builder b(2, {2}, {100.0});
        for (int c = 0; c < 2; ++c) {
            for (int v = 0; v < 3; ++v) b.add(c, 0, 1.0, 1.0, 1.0, {0});
        }
        try {
            exact_solve(b.p1, 8);  // 4 * 4 combinations > 8
            FAIL("expected BudgetExceeded");
        } catch (const Error &e) {
            CHECK(e.kind() == ErrorKind::BudgetExceeded);
        }
    }
}

TEST_CASE("regression: greedy pays the rounding gap, exact does not") {
    // Client 0's only triple hogs the shared link; clients 1 and 2 together
    // are worth more but the LP steers the rounding order to client 0 first.
    P1Builder b(3, {1, 1, 1}, {6.0});
    b.add(0, 0, 5.0, 5.5, 1.0, {0});
    b.add(1, 1, 3.0, 3.0, 1.0, {0});
    b.add(2, 2, 3.0, 3.0, 1.0, {0});

    EnumBest oracle = enumerate_best(b.p1);
    CHECK(oracle.objective == doctest::Approx(6.0));

    RoundedSolution exact = exact_solve(b.p1);
    CHECK(exact.objective == doctest::Approx(6.0));
    CHECK(exact.chosen.size() == 2);

    RoundedSolution greedy = greedy_round(b.p1);
    CHECK(greedy.objective == doctest::Approx(5.5));
    REQUIRE(greedy.chosen.size() == 1);
    CHECK(b.p1.vars[static_cast<size_t>(greedy.chosen[0])].client == 0);
}

TEST_CASE("exact_solve matches exhaustive enumeration on random instances") {
    Rng rng(31337);
    for (int trial = 0; trial < 150; ++trial) {
        int clients = rng.uniform_int(1, 4);
        int sites = rng.uniform_int(1, 2);
        std::vector<int> servers;
        for (int j = 0; j < sites; ++j) servers.push_back(rng.uniform_int(1, 2));
        int groups = rng.uniform_int(1, 3);
        std::vector<double> caps;
        for (int g = 0; g < groups; ++g) caps.push_back(rng.uniform(1.0, 6.0));
        P1Builder b(clients, servers, caps);
        for (int c = 0; c < clients; ++c) {
            int vars = rng.uniform_int(0, 3);
            for (int v = 0; v < vars; ++v) {
                std::vector<int> gs = {rng.uniform_int(0, groups - 1)};
                b.add(c, rng.uniform_int(0, sites - 1), rng.uniform(0.2, 4.0),
                      rng.uniform(-2.0, 6.0), rng.uniform(0.1, 3.0), gs);
            }
        }
        b.p1.rho = rng.uniform(0.0, 2.0);

        if (b.p1.vars.size() > 12) continue;
        EnumBest oracle = enumerate_best(b.p1);
        RoundedSolution sol = exact_solve(b.p1);
        CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
        CHECK(feasibility_check(sol.chosen, b.p1));
    }
}

TEST_CASE("greedy_round output is feasible, deterministic and never beats exact") {
    Rng rng(8088);
    for (int trial = 0; trial < 200; ++trial) {
        int clients = rng.uniform_int(1, 5);
        int sites = rng.uniform_int(1, 2);
        std::vector<int> servers;
        for (int j = 0; j < sites; ++j) servers.push_back(rng.uniform_int(1, 2));
        int groups = rng.uniform_int(1, 3);
        std::vector<double> caps;
        for (int g = 0; g < groups; ++g) caps.push_back(rng.uniform(1.0, 8.0));
        P1Builder b(clients, servers, caps);
        for (int c = 0; c < clients; ++c) {
            int vars = rng.uniform_int(0, 3);
            for (int v = 0; v < vars; ++v) {
                double demand = rng.uniform(0.2, 5.0);
                if (demand > caps[0]) demand = caps[0];  // single admission feasible
                b.add(c, rng.uniform_int(0, sites - 1), demand, rng.uniform(-2.0, 6.0),
                      rng.uniform(0.1, 3.0), {rng.uniform_int(0, groups - 1)});
            }
        }
        RoundedSolution sol = greedy_round(b.p1);
        CHECK(feasibility_check(sol.chosen, b.p1));
        CHECK(greedy_round(b.p1).chosen == sol.chosen);

        // The exact parametric maximizer never loses to the rounder.
        RoundedSolution exact = exact_solve(b.p1, 1LL << 22);
        CHECK(exact.objective >= sol.objective - 1e-9);
    }
}

TEST_CASE("dinkelbach on two mutually exclusive options") {
    // Option A: Gamma 4, Psi 2. Option B: Gamma 3, Psi 1. Exhaustive ratio
    // comparison: max(4/2, 3/1) = 3, achieved by B.
    StarWorldConfig cfg;
    cfg.clients.push_back({4.0, 2.0, 1, 1.0, 1.0, 0.0});
    cfg.clients.push_back({3.0, 1.0, 1, 1.0, 1.0, 0.0});
    cfg.sites.push_back({0.0, 1.0, 1, 0.0, 1e9, 0.0});
    cfg.task = make_unit_task(1.0);
    TinyWorld world = make_star_world(cfg);
    SchedulingInstance instance = world.instance();

    for (InnerSolver inner : {InnerSolver::Greedy, InnerSolver::Exact}) {
        DinkelbachOptions opts;
        opts.inner = inner;
        DinkelbachResult result = dinkelbach_solve(instance, opts);
        CHECK(result.rho_final == doctest::Approx(3.0));
        REQUIRE(result.assignment.admitted.size() == 1);
        CHECK(result.assignment.admitted[0].client == 1);
        CHECK(result.iterations == 3);
        CHECK(result.converged);
        CHECK(result.rho_monotone);
    }
}

TEST_CASE("dinkelbach with a single option converges in two iterations") {
    StarWorldConfig cfg;
    cfg.clients.push_back({6.0, 2.0, 1, 1.0, 1.0, 0.0});
    cfg.sites.push_back({0.0, 1.0, 1, 0.0, 1e9, 0.0});
    cfg.task = make_unit_task(1.0);
    TinyWorld world = make_star_world(cfg);
    SchedulingInstance instance = world.instance();
    DinkelbachResult result = dinkelbach_solve(instance, {});
    CHECK(result.rho_final == doctest::Approx(3.0));
    CHECK(result.iterations == 2);
    CHECK(result.assignment.admitted.size() == 1);
}

TEST_CASE("dinkelbach with no feasible option rejects everyone") {
    StarWorldConfig cfg;
    StarWorldConfig::Client slow;
    slow.dataset = 100;
    slow.capacity = 1.0;
    cfg.clients.push_back(slow);
    cfg.sites.push_back({});
    cfg.task = make_unit_task(1.0, 1.0, /*q_client=*/50.0);
    TinyWorld world = make_star_world(cfg);
    SchedulingInstance instance = world.instance();
    DinkelbachResult result = dinkelbach_solve(instance, {});
    CHECK(result.assignment.admitted.empty());
    CHECK(result.assignment.rejected.size() == 1);
    CHECK(result.rho_final == doctest::Approx(0.0));
}

TEST_CASE("dinkelbach reconstruction matches utility and cost scoring") {
    StarWorldConfig cfg;
    Rng rng(17);
    for (int i = 0; i < 5; ++i) {
        cfg.clients.push_back({rng.uniform(0.5, 4.0), rng.uniform(0.5, 2.0),
                               rng.uniform_int(1, 4), rng.uniform(0.5, 2.0),
                               rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)});
    }
    cfg.sites.push_back({1.0, 2.0, 2, 0.0, 8.0, 0.5});
    cfg.sites.push_back({3.0, 4.0, 2, 0.0, 8.0, 0.25});
    cfg.task = make_unit_task(2.0, 1.5, 0.1, 0.1);
    TinyWorld world = make_star_world(cfg);
    SchedulingInstance instance = world.instance();

    DinkelbachResult result = dinkelbach_solve(instance, {});
    REQUIRE(!result.trace.empty());
    const DinkelbachIteration &final_iter = result.trace.back();

    std::vector<char> admitted(static_cast<size_t>(instance.num_clients()), 0);
    for (const auto &e : result.assignment.admitted) admitted[static_cast<size_t>(e.client)] = 1;
    double gamma = training_utility(instance.clients(), admitted,
                                    instance.task().fairness_weight,
                                    instance.task().utility_scale);
    double psi = system_cost(result.assignment, instance);
    CHECK(gamma == doctest::Approx(final_iter.gamma).epsilon(1e-9));
    CHECK(psi == doctest::Approx(final_iter.psi).epsilon(1e-9));
}

TEST_CASE("randomized rounding: declared sampling distribution") {
    // Client 0 owns two triples held at theta = 0.5 by capacity shared with
    // client 1, whose high weight keeps its own variable at one.
    P1Builder b(2, {2, 2, 2}, {1.5, 1.5});
    b.add(0, 0, 1.0, 1.0, 1.0, {0});
    b.add(0, 1, 1.0, 1.0, 1.0, {1});
    b.add(1, 2, 1.0, 50.0, 1.0, {0, 1});

    std::vector<double> theta = solve_relaxation(b.p1, {}, {});
    CHECK(theta[0] == doctest::Approx(0.5));
    CHECK(theta[1] == doctest::Approx(0.5));
    CHECK(theta[2] == doctest::Approx(1.0));

    Rng rng(2025);
    int first = 0, second = 0, none = 0;
    const int samples = 10000;
    for (int i = 0; i < samples; ++i) {
        RoundedSolution sol = randomized_rounding(b.p1, rng);
        bool saw = false;
        for (int v : sol.chosen) {
            if (b.p1.vars[static_cast<size_t>(v)].client == 0) {
                saw = true;
                (v == 0 ? first : second) += 1;
            }
        }
        if (!saw) ++none;
    }
    CHECK(none == 0);  // theta sums to one, so the residual no-admit mass is zero
    double expected = samples / 2.0;
    double chi2 = (first - expected) * (first - expected) / expected +
                  (second - expected) * (second - expected) / expected;
    CHECK(chi2 < 10.83);  // 99.9% quantile, 1 dof
}

TEST_CASE("randomized rounding returns integral relaxations as-is") {
    P1Builder b(1, {1}, {10.0});
    b.add(0, 0, 1.0, 3.0, 1.0, {0});
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        CHECK(randomized_rounding(b.p1, rng).chosen == std::vector<int>{0});
        CHECK(weighted_randomized_rounding(b.p1, rng).chosen == std::vector<int>{0});
    }
}

TEST_CASE("weighted rounding with nonpositive weights admits nobody") {
    P1Builder b(2, {2}, {10.0});
    b.add(0, 0, 1.0, -1.0, 1.0, {0});
    b.add(1, 0, 1.0, 0.0, 1.0, {0});
    Rng rng(9);
    CHECK(weighted_randomized_rounding(b.p1, rng).chosen.empty());
}

TEST_CASE("solve_relaxation pins accepted clients and their alternatives") {
    P1Builder b(2, {2}, {10.0});
    b.add(0, 0, 1.0, 2.0, 1.0, {0});  // var 0
    b.add(0, 0, 1.0, 9.0, 1.0, {0});  // var 1, better but same client
    b.add(1, 0, 1.0, 1.0, 1.0, {0});
    std::vector<char> excluded(3, 0);
    std::vector<double> theta = solve_relaxation(b.p1, {0}, excluded);
    CHECK(theta[0] == doctest::Approx(1.0));
    CHECK(theta[1] == doctest::Approx(0.0));
    CHECK(theta[2] == doctest::Approx(1.0));
}
