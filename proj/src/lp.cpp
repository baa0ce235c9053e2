#include "flexcoord/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flexcoord/util.hpp"

namespace flexcoord {

namespace {
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-9;
constexpr double kDropTol = 1e-11;
} // namespace

int LinearProgram::add_variable(std::string name, double lo, double hi, double cost) {
    const int id = n_vars();
    index_[name] = id;
    var_names.push_back(std::move(name));
    lower.push_back(lo);
    upper.push_back(hi);
    objective.push_back(cost);
    return id;
}

void LinearProgram::add_row(std::string name, RowOp op, double rhs,
                            std::vector<std::pair<int, double>> terms) {
    rows.push_back({std::move(name), std::move(terms), op, rhs});
}

int LinearProgram::variable(const std::string& name) const {
    if (index_.size() != var_names.size()) {
        index_.clear();
        for (int i = 0; i < n_vars(); ++i) index_[var_names[i]] = i;
    }
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

std::string LinearProgram::dump() const {
    std::string out = "min:";
    for (int j = 0; j < n_vars(); ++j)
        if (objective[j] != 0.0)
            out += " " + format_double(objective[j]) + " " + var_names[j];
    if (objective_constant != 0.0) out += " + " + format_double(objective_constant);
    out += "\n";
    for (const LinRow& r : rows) {
        out += r.name + ":";
        for (const auto& [j, a] : r.terms) out += " " + format_double(a) + " " + var_names[j];
        out += r.op == RowOp::Equal ? " = " : (r.op == RowOp::LessEqual ? " <= " : " >= ");
        out += format_double(r.rhs) + "\n";
    }
    for (int j = 0; j < n_vars(); ++j)
        out += format_double(lower[j]) + " <= " + var_names[j] + " <= " + format_double(upper[j]) +
               "\n";
    return out;
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

double LpSolution::value(const LinearProgram& lp, const std::string& name) const {
    const int j = lp.variable(name);
    if (j < 0) throw std::out_of_range("LpSolution::value: unknown variable " + name);
    return x.at(j);
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
    double worst = 0.0;
    for (int j = 0; j < lp.n_vars(); ++j) {
        worst = std::max(worst, lp.lower[j] - x[j]);
        worst = std::max(worst, x[j] - lp.upper[j]);
    }
    for (const LinRow& r : lp.rows) {
        double act = 0.0;
        for (const auto& [j, a] : r.terms) act += a * x[j];
        switch (r.op) {
            case RowOp::Equal: worst = std::max(worst, std::abs(act - r.rhs)); break;
            case RowOp::LessEqual: worst = std::max(worst, act - r.rhs); break;
            case RowOp::GreaterEqual: worst = std::max(worst, r.rhs - act); break;
        }
    }
    return worst;
}

namespace {

struct WorkRow {
    std::vector<std::pair<int, double>> terms; // sorted by variable id
    RowOp op = RowOp::Equal;
    double rhs = 0.0;
    bool active = true;
};

double find_coef(const WorkRow& r, int var) {
    for (const auto& [j, a] : r.terms)
        if (j == var) return a;
    return 0.0;
}

// dst += factor * src, dropping negligible fill
void add_scaled(WorkRow& dst, const WorkRow& src, double factor, int skip_var) {
    std::vector<std::pair<int, double>> merged;
    merged.reserve(dst.terms.size() + src.terms.size());
    std::size_t i = 0, k = 0;
    while (i < dst.terms.size() || k < src.terms.size()) {
        if (k == src.terms.size() ||
            (i < dst.terms.size() && dst.terms[i].first < src.terms[k].first)) {
            if (dst.terms[i].first != skip_var) merged.push_back(dst.terms[i]);
            ++i;
        } else if (i == dst.terms.size() || src.terms[k].first < dst.terms[i].first) {
            if (src.terms[k].first != skip_var) {
                const double v = factor * src.terms[k].second;
                if (std::abs(v) > kDropTol) merged.emplace_back(src.terms[k].first, v);
            }
            ++k;
        } else {
            if (dst.terms[i].first != skip_var) {
                const double v = dst.terms[i].second + factor * src.terms[k].second;
                if (std::abs(v) > kDropTol) merged.emplace_back(dst.terms[i].first, v);
            }
            ++i;
            ++k;
        }
    }
    dst.terms = std::move(merged);
    dst.rhs += factor * src.rhs;
}

struct Presolve {
    const LinearProgram* lp;
    std::vector<WorkRow> rows;
    std::vector<std::vector<int>> col_rows; // var -> row ids (may contain stale entries)
    std::vector<double> lo, up, cost;
    std::vector<int> state; // 0 live, 1 fixed, 2 eliminated
    std::vector<double> fixed_value;
    struct Elim {
        int var;
        WorkRow row; // row at elimination time (terms exclude var)
        double coef; // coefficient of var in that row
    };
    std::vector<Elim> eliminated;
    std::string error;

    bool run();
    void substitute_fixed(int var, double value);
    bool fix(int var, double value);
};

void Presolve::substitute_fixed(int var, double value) {
    for (int r : col_rows[var]) {
        WorkRow& row = rows[r];
        if (!row.active) continue;
        const double a = find_coef(row, var);
        if (a == 0.0) continue;
        row.rhs -= a * value;
        std::erase_if(row.terms, [&](const auto& t) { return t.first == var; });
    }
    col_rows[var].clear();
}

bool Presolve::fix(int var, double value) {
    if (value < lo[var] - 1e-7 || value > up[var] + 1e-7) {
        error = "variable " + lp->var_names[var] + " forced outside its bounds";
        return false;
    }
    state[var] = 1;
    fixed_value[var] = std::clamp(value, lo[var], up[var]);
    substitute_fixed(var, fixed_value[var]);
    return true;
}

bool Presolve::run() {
    const int n = lp->n_vars();
    lo = lp->lower;
    up = lp->upper;
    cost = lp->objective;
    state.assign(n, 0);
    fixed_value.assign(n, 0.0);
    rows.reserve(lp->rows.size());
    col_rows.assign(n, {});
    for (const LinRow& r : lp->rows) {
        WorkRow w;
        w.terms = r.terms;
        std::sort(w.terms.begin(), w.terms.end());
        // merge duplicate variable entries
        std::vector<std::pair<int, double>> merged;
        for (const auto& t : w.terms) {
            if (!merged.empty() && merged.back().first == t.first) merged.back().second += t.second;
            else merged.push_back(t);
        }
        w.terms = std::move(merged);
        w.op = r.op;
        w.rhs = r.rhs;
        const int id = static_cast<int>(rows.size());
        for (const auto& [j, a] : w.terms) {
            (void)a;
            col_rows[j].push_back(id);
        }
        rows.push_back(std::move(w));
    }

    // substitute free variables out through equality rows
    for (int j = 0; j < n; ++j) {
        if (state[j] != 0 || lo[j] != -kLpInf || up[j] != kLpInf) continue;
        int pivot_row = -1;
        double pivot = 0.0;
        std::size_t best_len = SIZE_MAX;
        for (int r : col_rows[j]) {
            if (!rows[r].active || rows[r].op != RowOp::Equal) continue;
            const double a = find_coef(rows[r], j);
            if (std::abs(a) <= kPivotTol) continue;
            if (rows[r].terms.size() < best_len) {
                best_len = rows[r].terms.size();
                pivot_row = r;
                pivot = a;
            }
        }
        if (pivot_row < 0) continue;
        WorkRow& pr = rows[pivot_row];
        for (int r : col_rows[j]) {
            if (r == pivot_row || !rows[r].active) continue;
            const double a = find_coef(rows[r], j);
            if (a == 0.0) continue;
            add_scaled(rows[r], pr, -a / pivot, j);
            for (const auto& [k, v] : pr.terms) {
                (void)v;
                if (k != j) col_rows[k].push_back(r);
            }
        }
        // fold into the objective: x_j = (rhs - sum a_k x_k) / pivot
        if (cost[j] != 0.0) {
            const double f = cost[j] / pivot;
            for (const auto& [k, v] : pr.terms)
                if (k != j) cost[k] -= f * v;
            // constant contribution handled when the objective is evaluated on
            // the reconstructed full solution
        }
        Elim e;
        e.var = j;
        e.coef = pivot;
        e.row = pr;
        std::erase_if(e.row.terms, [&](const auto& t) { return t.first == j; });
        eliminated.push_back(std::move(e));
        pr.active = false;
        state[j] = 2;
        col_rows[j].clear();
    }

    // singleton and forcing rows until stable
    bool changed = true;
    while (changed) {
        changed = false;
        for (WorkRow& row : rows) {
            if (!row.active) continue;
            if (row.terms.empty()) {
                const bool bad = (row.op == RowOp::Equal && std::abs(row.rhs) > 1e-7) ||
                                 (row.op == RowOp::LessEqual && row.rhs < -1e-7) ||
                                 (row.op == RowOp::GreaterEqual && row.rhs > 1e-7);
                if (bad) {
                    error = "empty row with nonzero right-hand side";
                    return false;
                }
                row.active = false;
                continue;
            }
            if (row.terms.size() == 1) {
                const auto [j, a] = row.terms[0];
                const double v = row.rhs / a;
                if (row.op == RowOp::Equal) {
                    if (!fix(j, v)) return false;
                } else {
                    const bool tightens_upper = (row.op == RowOp::LessEqual) == (a > 0.0);
                    if (tightens_upper) up[j] = std::min(up[j], v);
                    else lo[j] = std::max(lo[j], v);
                    if (lo[j] > up[j] + 1e-7) {
                        error = "bounds on " + lp->var_names[j] + " became empty";
                        return false;
                    }
                }
                row.active = false;
                changed = true;
                continue;
            }
            if (row.op == RowOp::Equal) {
                double minact = 0.0, maxact = 0.0;
                bool bounded = true;
                for (const auto& [j, a] : row.terms) {
                    const double l = a > 0 ? lo[j] : up[j];
                    const double u = a > 0 ? up[j] : lo[j];
                    if (std::abs(l) == kLpInf || std::abs(u) == kLpInf) {
                        bounded = false;
                        break;
                    }
                    minact += a * l;
                    maxact += a * u;
                }
                if (!bounded) continue;
                if (minact > row.rhs + 1e-7 || maxact < row.rhs - 1e-7) {
                    error = "row " + std::to_string(&row - rows.data()) + " cannot be satisfied";
                    return false;
                }
                if (std::abs(minact - row.rhs) <= kFeasTol) {
                    auto terms = row.terms;
                    row.active = false;
                    for (const auto& [j, a] : terms)
                        if (state[j] == 0 && !fix(j, a > 0 ? lo[j] : up[j])) return false;
                    changed = true;
                } else if (std::abs(maxact - row.rhs) <= kFeasTol) {
                    auto terms = row.terms;
                    row.active = false;
                    for (const auto& [j, a] : terms)
                        if (state[j] == 0 && !fix(j, a > 0 ? up[j] : lo[j])) return false;
                    changed = true;
                }
            }
        }
    }
    return true;
}

// --- bounded-variable two-phase primal simplex on the presolved problem ---

struct Simplex {
    int m = 0, n = 0;
    std::vector<double> a;    // m x n, row-major: B^-1 A
    std::vector<double> rhs;  // B^-1 b
    std::vector<double> z;    // reduced costs for the current phase
    std::vector<double> lo, up, xval;
    std::vector<int> basis;        // row -> var
    std::vector<signed char> pos;  // 0 at lower, 1 at upper, 2 free at zero, 3 basic
    std::vector<double> phase_cost;
    long iterations = 0;
    bool bland = false;
    int degenerate_streak = 0;

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }

    void compute_reduced_costs() {
        z = phase_cost;
        for (int r = 0; r < m; ++r) {
            const double cb = phase_cost[basis[r]];
            if (cb == 0.0) continue;
            const double* row = &a[static_cast<std::size_t>(r) * n];
            for (int j = 0; j < n; ++j) z[j] -= cb * row[j];
        }
    }

    void refresh_basic_values() {
        for (int r = 0; r < m; ++r) {
            double v = rhs[r];
            const double* row = &a[static_cast<std::size_t>(r) * n];
            for (int j = 0; j < n; ++j) {
                if (pos[j] == 3 || xval[j] == 0.0) continue;
                v -= row[j] * xval[j];
            }
            xval[basis[r]] = v;
        }
    }

    // returns LpStatus for this phase; Optimal means reduced costs clean
    LpStatus iterate(long max_iter) {
        while (iterations < max_iter) {
            // entering variable
            int enter = -1;
            double best = kCostTol;
            int dir = +1;
            for (int j = 0; j < n; ++j) {
                if (pos[j] == 3) continue;
                double score = 0.0;
                int d = 0;
                if (pos[j] == 0 && z[j] < -kCostTol) { score = -z[j]; d = +1; }
                else if (pos[j] == 1 && z[j] > kCostTol) { score = z[j]; d = -1; }
                else if (pos[j] == 2 && std::abs(z[j]) > kCostTol) {
                    score = std::abs(z[j]);
                    d = z[j] > 0 ? -1 : +1;
                }
                if (d == 0) continue;
                if (bland) { enter = j; dir = d; break; }
                if (score > best) { best = score; enter = j; dir = d; }
            }
            if (enter < 0) return LpStatus::Optimal;

            // ratio test: tightest blocking row, then compare with a bound flip
            int leave_row = -1;
            double row_limit = kLpInf;
            double leave_bound = 0.0;
            double best_piv = 0.0;
            for (int r = 0; r < m; ++r) {
                const double d = at(r, enter) * dir; // basic changes by -d * delta
                const int b = basis[r];
                double cand, bound;
                if (d > kPivotTol) {
                    if (lo[b] == -kLpInf) continue;
                    cand = (xval[b] - lo[b]) / d;
                    bound = lo[b];
                } else if (d < -kPivotTol) {
                    if (up[b] == kLpInf) continue;
                    cand = (up[b] - xval[b]) / (-d);
                    bound = up[b];
                } else {
                    continue;
                }
                cand = std::max(cand, 0.0);
                bool take = cand < row_limit - 1e-12;
                if (!take && cand < row_limit + 1e-12 && leave_row >= 0) {
                    take = bland ? b < basis[leave_row] : std::abs(d) > best_piv;
                }
                if (take) {
                    row_limit = std::min(row_limit, cand);
                    leave_row = r;
                    leave_bound = bound;
                    best_piv = std::abs(d);
                }
            }
            const double own_limit = up[enter] - lo[enter]; // inf for one-sided ranges
            const bool flip = own_limit <= row_limit;
            const double delta = flip ? own_limit : row_limit;
            if (delta == kLpInf) return LpStatus::Unbounded;

            ++iterations;
            if (delta <= 1e-11) {
                if (++degenerate_streak > 40) bland = true;
            } else {
                degenerate_streak = 0;
            }

            // apply the move
            for (int r = 0; r < m; ++r) {
                const double d = at(r, enter) * dir;
                if (d != 0.0) xval[basis[r]] -= d * delta;
            }
            xval[enter] += dir * delta;

            if (flip) {
                pos[enter] = pos[enter] == 0 ? 1 : 0;
                xval[enter] = pos[enter] == 1 ? up[enter] : lo[enter];
                continue;
            }

            const int leave = basis[leave_row];
            xval[leave] = leave_bound;
            pos[leave] = leave_bound == lo[leave] ? 0 : 1;
            basis[leave_row] = enter;
            pos[enter] = 3;

            // pivot row operations
            const double piv = at(leave_row, enter);
            double* prow = &a[static_cast<std::size_t>(leave_row) * n];
            const double inv = 1.0 / piv;
            for (int j = 0; j < n; ++j) prow[j] *= inv;
            rhs[leave_row] *= inv;
            for (int r = 0; r < m; ++r) {
                if (r == leave_row) continue;
                const double f = at(r, enter);
                if (f == 0.0) continue;
                double* row = &a[static_cast<std::size_t>(r) * n];
                for (int j = 0; j < n; ++j) row[j] -= f * prow[j];
                rhs[r] -= f * rhs[leave_row];
            }
            const double fz = z[enter];
            if (fz != 0.0)
                for (int j = 0; j < n; ++j) z[j] -= fz * prow[j];

            if (iterations % 256 == 0) refresh_basic_values();
        }
        return LpStatus::IterationLimit;
    }
};

} // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    LpSolution sol;
    sol.x.assign(lp.n_vars(), 0.0);

    Presolve pre;
    pre.lp = &lp;
    if (!pre.run()) {
        sol.status = LpStatus::Infeasible;
        sol.message = "presolve: " + pre.error;
        return sol;
    }

    // compact surviving variables
    std::vector<int> compact(lp.n_vars(), -1);
    std::vector<int> orig; // compact -> original
    for (int j = 0; j < lp.n_vars(); ++j)
        if (pre.state[j] == 0) {
            compact[j] = static_cast<int>(orig.size());
            orig.push_back(j);
        }
    const int ns = static_cast<int>(orig.size());

    std::vector<const WorkRow*> live;
    for (const WorkRow& r : pre.rows)
        if (r.active) live.push_back(&r);
    const int m = static_cast<int>(live.size());

    Simplex sx;
    if (m > 0 && ns >= 0) {
        // columns: structural survivors, slacks, artificials
        const int n_slack = static_cast<int>(
            std::count_if(live.begin(), live.end(), [](const WorkRow* r) { return r->op != RowOp::Equal; }));
        const int total = ns + n_slack + m;
        sx.m = m;
        sx.n = total;
        sx.a.assign(static_cast<std::size_t>(m) * total, 0.0);
        sx.rhs.assign(m, 0.0);
        sx.lo.assign(total, 0.0);
        sx.up.assign(total, kLpInf);
        sx.xval.assign(total, 0.0);
        sx.pos.assign(total, 0);
        sx.basis.assign(m, -1);
        sx.phase_cost.assign(total, 0.0);

        for (int k = 0; k < ns; ++k) {
            sx.lo[k] = pre.lo[orig[k]];
            sx.up[k] = pre.up[orig[k]];
            if (sx.lo[k] != -kLpInf) { sx.pos[k] = 0; sx.xval[k] = sx.lo[k]; }
            else if (sx.up[k] != kLpInf) { sx.pos[k] = 1; sx.xval[k] = sx.up[k]; }
            else { sx.pos[k] = 2; sx.xval[k] = 0.0; }
        }

        int slack_id = ns;
        int art_id = ns + n_slack;
        for (int r = 0; r < m; ++r) {
            const WorkRow& row = *live[r];
            // normalize to <= / = with slack coefficient +1
            const double sign = row.op == RowOp::GreaterEqual ? -1.0 : 1.0;
            double res = row.rhs * sign;
            for (const auto& [j, av] : row.terms) {
                sx.at(r, compact[j]) = av * sign;
                res -= av * sign * sx.xval[compact[j]];
            }
            sx.rhs[r] = row.rhs * sign;
            if (row.op != RowOp::Equal) {
                sx.at(r, slack_id) = 1.0;
                if (res >= 0.0) { // slack can carry the residual
                    sx.basis[r] = slack_id;
                    sx.pos[slack_id] = 3;
                    sx.xval[slack_id] = res;
                }
                ++slack_id;
            }
            if (sx.basis[r] < 0) { // artificial carries |res|
                if (res < 0.0) {
                    for (int j = 0; j < sx.n; ++j) sx.at(r, j) = -sx.at(r, j);
                    sx.rhs[r] = -sx.rhs[r];
                    res = -res;
                }
                sx.at(r, art_id) = 1.0;
                sx.basis[r] = art_id;
                sx.pos[art_id] = 3;
                sx.xval[art_id] = res;
                sx.phase_cost[art_id] = 1.0;
                ++art_id;
            }
        }
        const int first_art = ns + n_slack;

        const long max_iter = 20000 + 60L * m;
        sx.compute_reduced_costs();
        LpStatus st = sx.iterate(max_iter);
        sol.iterations = sx.iterations;
        if (st == LpStatus::IterationLimit) {
            sol.status = st;
            sol.message = "phase 1 iteration limit";
            return sol;
        }
        double infeas = 0.0;
        for (int j = first_art; j < sx.n; ++j) infeas += sx.xval[j];
        if (infeas > 1e-7) {
            sol.status = LpStatus::Infeasible;
            sol.message = "phase 1 residual " + format_double(infeas);
            return sol;
        }

        // phase 2: pin artificials, swap in the real objective
        for (int j = first_art; j < sx.n; ++j) { sx.lo[j] = 0.0; sx.up[j] = 0.0; }
        std::fill(sx.phase_cost.begin(), sx.phase_cost.end(), 0.0);
        for (int k = 0; k < ns; ++k) sx.phase_cost[k] = pre.cost[orig[k]];
        sx.compute_reduced_costs();
        sx.bland = false;
        sx.degenerate_streak = 0;
        st = sx.iterate(max_iter + sx.iterations);
        sol.iterations = sx.iterations;
        if (st == LpStatus::Unbounded) {
            sol.status = st;
            sol.message = "phase 2 unbounded ray";
            return sol;
        }
        if (st == LpStatus::IterationLimit) {
            sol.status = st;
            sol.message = "phase 2 iteration limit";
            return sol;
        }
        sx.refresh_basic_values();
    } else if (m == 0 && ns > 0) {
        // no rows: every survivor sits at its cheapest bound
        sx.n = ns;
        sx.xval.assign(ns, 0.0);
        for (int k = 0; k < ns; ++k) {
            const double c = pre.cost[orig[k]];
            const double l = pre.lo[orig[k]], u = pre.up[orig[k]];
            if (c > 0.0 || (c == 0.0 && l != -kLpInf)) {
                if (l == -kLpInf) { sol.status = LpStatus::Unbounded; sol.message = "free fall"; return sol; }
                sx.xval[k] = l;
            } else if (c < 0.0) {
                if (u == kLpInf) { sol.status = LpStatus::Unbounded; sol.message = "free rise"; return sol; }
                sx.xval[k] = u;
            } else {
                sx.xval[k] = u != kLpInf ? std::min(std::max(0.0, l), u) : std::max(0.0, l);
            }
        }
    }

    // assemble the full solution: survivors, fixed, then eliminated in reverse
    for (int j = 0; j < lp.n_vars(); ++j) {
        if (pre.state[j] == 0) sol.x[j] = sx.xval.empty() ? 0.0 : sx.xval[compact[j]];
        else if (pre.state[j] == 1) sol.x[j] = pre.fixed_value[j];
    }
    for (auto it = pre.eliminated.rbegin(); it != pre.eliminated.rend(); ++it) {
        double v = it->row.rhs;
        for (const auto& [k, av] : it->row.terms) v -= av * sol.x[k];
        sol.x[it->var] = v / it->coef;
    }

    sol.objective = lp.objective_constant;
    for (int j = 0; j < lp.n_vars(); ++j) sol.objective += lp.objective[j] * sol.x[j];
    sol.status = LpStatus::Optimal;
    return sol;
}

} // namespace flexcoord
