#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace flexcoord {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

enum class RowOp { Equal, LessEqual, GreaterEqual };

struct LinRow {
    std::string name;
    std::vector<std::pair<int, double>> terms; // (variable index, coefficient)
    RowOp op = RowOp::Equal;
    double rhs = 0.0;
};

// Minimization problem: min c'x + constant s.t. rows, lower <= x <= upper.
struct LinearProgram {
    std::vector<std::string> var_names;
    std::vector<double> objective;
    double objective_constant = 0.0;
    std::vector<LinRow> rows;
    std::vector<double> lower, upper;

    int add_variable(std::string name, double lo, double hi, double cost = 0.0);
    void add_row(std::string name, RowOp op, double rhs,
                 std::vector<std::pair<int, double>> terms);
    int n_vars() const { return static_cast<int>(var_names.size()); }
    int variable(const std::string& name) const; // -1 when unknown

    // Plain-text dump: objective row, constraint rows, bounds.
    std::string dump() const;

private:
    mutable std::unordered_map<std::string, int> index_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0; // c'x + constant
    std::vector<double> x;  // full original variable space
    long iterations = 0;
    std::string message; // offending phase on failure

    double value(const LinearProgram& lp, const std::string& name) const;
};

// Primal simplex over bounded variables, two phases, Dantzig pricing with a
// permanent switch to Bland's rule after a degenerate streak. A presolve pass
// first substitutes out free variables through equality rows and folds
// singleton/forcing rows into bounds.
LpSolution solve_lp(const LinearProgram& lp);

// Largest violation of any row or bound at x (for post-solve verification).
double max_violation(const LinearProgram& lp, const std::vector<double>& x);

} // namespace flexcoord
