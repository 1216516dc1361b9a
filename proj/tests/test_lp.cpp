#include <cmath>
#include <vector>

#include "doctest.h"
#include "refinery/errors.hpp"
#include "refinery/lp.hpp"
#include "refinery/rng.hpp"

using namespace refinery;

TEST_CASE("single variable with positive weight saturates") {
    LpProblem lp;
    lp.add_variable(3.0, 0.0, 1.0);
    int row = lp.add_row(10.0);
    lp.add_coefficient(row, 0, 1.0);
    LpSolution sol = solve_lp(lp);
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.objective == doctest::Approx(3.0));
}

TEST_CASE("single variable with negative weight stays at zero") {
    LpProblem lp;
    lp.add_variable(-2.0, 0.0, 1.0);
    LpSolution sol = solve_lp(lp);
    CHECK(sol.x[0] == doctest::Approx(0.0));
    CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("two equal-weight variables sharing one server slot") {
    // Derived check: enumerate the polytope's vertices (0,0), (1,0), (0,1)
    // and confirm the LP matches the best of them.
    double omega = 2.5;
    LpProblem lp;
    lp.add_variable(omega, 0.0, 1.0);
    lp.add_variable(omega, 0.0, 1.0);
    int row = lp.add_row(1.0);
    lp.add_coefficient(row, 0, 1.0);
    lp.add_coefficient(row, 1, 1.0);
    LpSolution sol = solve_lp(lp);

    double best_vertex = 0.0;
    for (auto [a, b] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}) {
        if (a + b <= 1.0) best_vertex = std::max(best_vertex, omega * a + omega * b);
    }
    CHECK(sol.objective == doctest::Approx(best_vertex));
    CHECK(sol.x[0] + sol.x[1] == doctest::Approx(1.0));
}

TEST_CASE("pinned variables stay pinned and consume capacity") {
    LpProblem lp;
    lp.add_variable(1.0, 1.0, 1.0);  // pinned to one
    lp.add_variable(5.0, 0.0, 1.0);
    int row = lp.add_row(1.5);
    lp.add_coefficient(row, 0, 1.0);
    lp.add_coefficient(row, 1, 1.0);
    LpSolution sol = solve_lp(lp);
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(0.5));
}

TEST_CASE("infeasible pinning is reported") {
    LpProblem lp;
    lp.add_variable(1.0, 1.0, 1.0);
    int row = lp.add_row(0.5);
    lp.add_coefficient(row, 0, 1.0);
    try {
        solve_lp(lp);
        FAIL("expected LpInfeasible");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::LpInfeasible);
    }
}

TEST_CASE("random LPs: solution is feasible and dominates sampled feasible points") {
    Rng rng(4242);
    for (int trial = 0; trial < 120; ++trial) {
        int n = rng.uniform_int(1, 6);
        int m = rng.uniform_int(1, 4);
        LpProblem lp;
        for (int j = 0; j < n; ++j) lp.add_variable(rng.uniform(-3.0, 5.0), 0.0, 1.0);
        std::vector<std::vector<double>> rows(static_cast<size_t>(m),
                                              std::vector<double>(static_cast<size_t>(n), 0.0));
        for (int i = 0; i < m; ++i) {
            int r = lp.add_row(rng.uniform(0.5, 3.0));
            for (int j = 0; j < n; ++j) {
                if (rng.uniform() < 0.6) {
                    double c = rng.uniform(0.1, 2.0);
                    rows[static_cast<size_t>(i)][static_cast<size_t>(j)] = c;
                    lp.add_coefficient(r, j, c);
                }
            }
        }
        LpSolution sol = solve_lp(lp);

        for (int j = 0; j < n; ++j) {
            CHECK(sol.x[static_cast<size_t>(j)] >= -1e-7);
            CHECK(sol.x[static_cast<size_t>(j)] <= 1.0 + 1e-7);
        }
        for (int i = 0; i < m; ++i) {
            double used = 0.0;
            for (int j = 0; j < n; ++j) {
                used += rows[static_cast<size_t>(i)][static_cast<size_t>(j)] *
                        sol.x[static_cast<size_t>(j)];
            }
            CHECK(used <= lp.row_bound_[static_cast<size_t>(i)] + 1e-7);
        }

        // No rejected-sampled feasible point may beat the reported optimum.
        for (int probe = 0; probe < 300; ++probe) {
            std::vector<double> x(static_cast<size_t>(n));
            for (int j = 0; j < n; ++j) x[static_cast<size_t>(j)] = rng.uniform();
            bool ok = true;
            for (int i = 0; i < m && ok; ++i) {
                double used = 0.0;
                for (int j = 0; j < n; ++j) {
                    used += rows[static_cast<size_t>(i)][static_cast<size_t>(j)] *
                            x[static_cast<size_t>(j)];
                }
                ok = used <= lp.row_bound_[static_cast<size_t>(i)];
            }
            if (!ok) continue;
            double value = 0.0;
            for (int j = 0; j < n; ++j) {
                value += lp.objective_[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
            }
            CHECK(sol.objective >= value - 1e-7);
        }
    }
}
