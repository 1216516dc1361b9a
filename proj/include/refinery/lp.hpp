#pragma once

#include <utility>
#include <vector>

namespace refinery {

/// maximize c.x subject to  A x <= b,  lower <= x <= upper.
/// Rows are entered sparsely; variables with lower == upper are pinned and
/// never leave their bound.
class LpProblem {
  public:
    int add_variable(double objective, double lower, double upper);
    int add_row(double bound);
    void add_coefficient(int row, int var, double value);

    int num_variables() const { return static_cast<int>(objective_.size()); }
    int num_rows() const { return static_cast<int>(row_bound_.size()); }

    std::vector<double> objective_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::vector<std::pair<int, double>>> row_coeffs_;
    std::vector<double> row_bound_;
};

struct LpSolution {
    double objective = 0.0;
    std::vector<double> x;
    int iterations = 0;
};

/// Bounded-variable primal simplex over a dense tableau. The initial point
/// (pinned variables at their bound, everything else at its lower bound) must
/// satisfy the row constraints; with that precondition no phase-1 is needed.
LpSolution solve_lp(const LpProblem &problem);

}  // namespace refinery
