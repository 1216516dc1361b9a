#include "refinery/lp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "refinery/errors.hpp"

namespace refinery {

namespace {
constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBlandThreshold = 5000;
constexpr int kIterationCap = 200000;

enum class VarState { Basic, AtLower, AtUpper };
}  // namespace

int LpProblem::add_variable(double objective, double lower, double upper) {
    objective_.push_back(objective);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return static_cast<int>(objective_.size()) - 1;
}

int LpProblem::add_row(double bound) {
    row_coeffs_.emplace_back();
    row_bound_.push_back(bound);
    return static_cast<int>(row_bound_.size()) - 1;
}

void LpProblem::add_coefficient(int row, int var, double value) {
    row_coeffs_[static_cast<size_t>(row)].emplace_back(var, value);
}

LpSolution solve_lp(const LpProblem &problem) {
    const int n = problem.num_variables();
    const int m = problem.num_rows();
    const int total = n + m;  // structural variables then one slack per row

    std::vector<double> lower(problem.lower_);
    std::vector<double> upper(problem.upper_);
    std::vector<double> cost(problem.objective_);
    lower.resize(static_cast<size_t>(total), 0.0);
    upper.resize(static_cast<size_t>(total), kInf);
    cost.resize(static_cast<size_t>(total), 0.0);

    for (int j = 0; j < n; ++j) {
        if (lower[static_cast<size_t>(j)] > upper[static_cast<size_t>(j)] + kTol) {
            throw Error(ErrorKind::LpInfeasible,
                        "variable " + std::to_string(j) + " has lower > upper");
        }
    }

    // Dense tableau [A | I], reduced against the current basis as we pivot.
    std::vector<std::vector<double>> tab(static_cast<size_t>(m),
                                         std::vector<double>(static_cast<size_t>(total), 0.0));
    for (int i = 0; i < m; ++i) {
        for (const auto &[var, value] : problem.row_coeffs_[static_cast<size_t>(i)]) {
            tab[static_cast<size_t>(i)][static_cast<size_t>(var)] += value;
        }
        tab[static_cast<size_t>(i)][static_cast<size_t>(n + i)] = 1.0;
    }

    std::vector<VarState> state(static_cast<size_t>(total), VarState::AtLower);
    std::vector<int> basis(static_cast<size_t>(m));
    std::vector<double> beta(static_cast<size_t>(m));  // values of basic variables

    auto nonbasic_value = [&](int j) {
        return state[static_cast<size_t>(j)] == VarState::AtUpper ? upper[static_cast<size_t>(j)]
                                                                  : lower[static_cast<size_t>(j)];
    };

    double objective = 0.0;
    for (int j = 0; j < n; ++j) objective += cost[static_cast<size_t>(j)] * nonbasic_value(j);

    for (int i = 0; i < m; ++i) {
        basis[static_cast<size_t>(i)] = n + i;
        state[static_cast<size_t>(n + i)] = VarState::Basic;
        double used = 0.0;
        for (const auto &[var, value] : problem.row_coeffs_[static_cast<size_t>(i)]) {
            used += value * nonbasic_value(var);
        }
        double slack = problem.row_bound_[static_cast<size_t>(i)] - used;
        if (slack < -1e-7) {
            throw Error(ErrorKind::LpInfeasible,
                        "initial point violates row " + std::to_string(i) + " by " +
                            std::to_string(-slack));
        }
        beta[static_cast<size_t>(i)] = slack < 0.0 ? 0.0 : slack;
    }

    // Reduced costs; slacks start basic with zero cost so d = c initially.
    std::vector<double> reduced(cost);

    int iterations = 0;
    while (true) {
        if (++iterations > kIterationCap) {
            throw Error(ErrorKind::LpInfeasible, "simplex iteration cap exceeded");
        }
        bool bland = iterations > kBlandThreshold;

        int entering = -1;
        double best_score = kTol;
        int direction = 0;
        for (int j = 0; j < total; ++j) {
            size_t sj = static_cast<size_t>(j);
            if (state[sj] == VarState::Basic) continue;
            if (upper[sj] - lower[sj] < kTol) continue;  // pinned
            double d = reduced[sj];
            if (state[sj] == VarState::AtLower && d > best_score) {
                entering = j;
                direction = 1;
                if (bland) break;
                best_score = d;
            } else if (state[sj] == VarState::AtUpper && -d > best_score) {
                entering = j;
                direction = -1;
                if (bland) break;
                best_score = -d;
            }
        }
        if (entering < 0) break;  // optimal

        size_t se = static_cast<size_t>(entering);
        double t_limit = upper[se] - lower[se];
        int leaving_row = -1;
        bool leaving_at_upper = false;
        double t = t_limit;
        for (int i = 0; i < m; ++i) {
            size_t si = static_cast<size_t>(i);
            double delta = direction * tab[si][se];
            int bvar = basis[si];
            size_t sb = static_cast<size_t>(bvar);
            double candidate = kInf;
            bool hits_upper = false;
            if (delta > kTol) {
                candidate = (beta[si] - lower[sb]) / delta;
            } else if (delta < -kTol && upper[sb] < kInf) {
                candidate = (beta[si] - upper[sb]) / delta;
                hits_upper = true;
            } else {
                continue;
            }
            if (candidate < 0.0) candidate = 0.0;
            if (candidate < t - kTol ||
                (candidate < t + kTol && leaving_row >= 0 &&
                 bvar < basis[static_cast<size_t>(leaving_row)])) {
                t = candidate;
                leaving_row = i;
                leaving_at_upper = hits_upper;
            }
        }

        if (t == kInf) {
            throw Error(ErrorKind::LpInfeasible, "LP is unbounded");
        }

        objective += reduced[se] * direction * t;
        for (int i = 0; i < m; ++i) {
            beta[static_cast<size_t>(i)] -= direction * t * tab[static_cast<size_t>(i)][se];
        }

        if (leaving_row < 0) {
            // Bound flip: the entering variable runs to its opposite bound.
            state[se] = direction > 0 ? VarState::AtUpper : VarState::AtLower;
            continue;
        }

        size_t sr = static_cast<size_t>(leaving_row);
        int leaving = basis[sr];
        double entering_value = nonbasic_value(entering) + direction * t;

        double pivot = tab[sr][se];
        double inv = 1.0 / pivot;
        for (int j = 0; j < total; ++j) tab[sr][static_cast<size_t>(j)] *= inv;
        for (int i = 0; i < m; ++i) {
            if (i == leaving_row) continue;
            size_t si = static_cast<size_t>(i);
            double factor = tab[si][se];
            if (std::fabs(factor) < 1e-12) continue;
            for (int j = 0; j < total; ++j) {
                tab[si][static_cast<size_t>(j)] -= factor * tab[sr][static_cast<size_t>(j)];
            }
        }
        double dfactor = reduced[se];
        if (std::fabs(dfactor) > 0.0) {
            for (int j = 0; j < total; ++j) {
                reduced[static_cast<size_t>(j)] -= dfactor * tab[sr][static_cast<size_t>(j)];
            }
        }

        basis[sr] = entering;
        state[se] = VarState::Basic;
        beta[sr] = entering_value;
        state[static_cast<size_t>(leaving)] =
            leaving_at_upper ? VarState::AtUpper : VarState::AtLower;
    }

    LpSolution solution;
    solution.iterations = iterations;
    solution.x.assign(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        solution.x[static_cast<size_t>(j)] = nonbasic_value(j);
    }
    for (int i = 0; i < m; ++i) {
        int bvar = basis[static_cast<size_t>(i)];
        if (bvar < n) {
            double v = beta[static_cast<size_t>(i)];
            size_t sb = static_cast<size_t>(bvar);
            if (v < lower[sb]) v = lower[sb];
            if (v > upper[sb]) v = upper[sb];
            solution.x[sb] = v;
        }
    }
    solution.objective = 0.0;
    for (int j = 0; j < n; ++j) {
        solution.objective += problem.objective_[static_cast<size_t>(j)] *
                              solution.x[static_cast<size_t>(j)];
    }
    return solution;
}

}  // namespace refinery
