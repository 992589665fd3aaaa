#include "causalrl/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace causalrl {

void LinearProgram::validate() const {
    if (A.size() != b.size()) throw std::invalid_argument("lp: constraint/rhs count mismatch");
    for (const auto& row : A)
        if (row.size() != c.size()) throw std::invalid_argument("lp: constraint width mismatch");
    if (!upper.empty() && upper.size() != c.size())
        throw std::invalid_argument("lp: upper-bound vector width mismatch");
    auto check = [](const std::vector<double>& v, const char* what) {
        for (double x : v)
            if (!std::isfinite(x)) throw std::invalid_argument(std::string("lp: non-finite ") + what);
    };
    check(c, "objective");
    check(b, "rhs");
    for (const auto& row : A) check(row, "coefficient");
    for (double u : upper)
        if (std::isnan(u)) throw std::invalid_argument("lp: NaN upper bound");
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

bool KktReport::ok(double tol) const {
    return primal_residual <= tol && dual_residual <= tol && complementarity <= tol && duality_gap <= tol;
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

/// Canonical minimize-form program with upper bounds turned into slack rows.
/// Both solve_lp and verify_kkt derive this the same way, so basis indices in
/// an LpSolution are meaningful to either.
struct StandardForm {
    LinearProgram lp;       // sense == minimize, no upper bounds
    std::size_t n_orig = 0; // leading variables are the caller's
    bool trivially_infeasible = false;
};

StandardForm standard_form(const LinearProgram& input) {
    StandardForm sf;
    sf.n_orig = input.n_vars();
    const double sign = input.sense == LpSense::maximize ? -1.0 : 1.0;

    std::vector<std::size_t> bounded;
    for (std::size_t j = 0; j < input.upper.size(); j++) {
        if (!std::isfinite(input.upper[j])) continue;
        if (input.upper[j] < 0.0) {
            sf.trivially_infeasible = true;
            return sf;
        }
        bounded.push_back(j);
    }
    const std::size_t n_total = sf.n_orig + bounded.size();

    sf.lp.sense = LpSense::minimize;
    sf.lp.c.assign(n_total, 0.0);
    for (std::size_t j = 0; j < sf.n_orig; j++) sf.lp.c[j] = sign * input.c[j];
    sf.lp.A.reserve(input.n_rows() + bounded.size());
    for (std::size_t i = 0; i < input.n_rows(); i++) {
        std::vector<double> row(n_total, 0.0);
        std::copy(input.A[i].begin(), input.A[i].end(), row.begin());
        sf.lp.A.push_back(std::move(row));
        sf.lp.b.push_back(input.b[i]);
    }
    for (std::size_t k = 0; k < bounded.size(); k++) {
        std::vector<double> row(n_total, 0.0);
        row[bounded[k]] = 1.0;
        row[sf.n_orig + k] = 1.0;
        sf.lp.A.push_back(std::move(row));
        sf.lp.b.push_back(input.upper[bounded[k]]);
    }
    return sf;
}

/// Solve M z = rhs by Gaussian elimination with partial pivoting.
/// Returns false when M is numerically singular.
bool dense_solve(std::vector<std::vector<double>> M, std::vector<double> rhs, std::vector<double>& out) {
    const std::size_t n = M.size();
    for (std::size_t col = 0; col < n; col++) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; i++)
            if (std::abs(M[i][col]) > std::abs(M[piv][col])) piv = i;
        if (std::abs(M[piv][col]) < 1e-13) return false;
        std::swap(M[piv], M[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t i = col + 1; i < n; i++) {
            double f = M[i][col] / M[col][col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; j++) M[i][j] -= f * M[col][j];
            rhs[i] -= f * rhs[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double v = rhs[i];
        for (std::size_t j = i + 1; j < n; j++) v -= M[i][j] * out[j];
        out[i] = v / M[i][i];
    }
    return true;
}

struct RowSelection {
    std::vector<std::size_t> rows;
    bool infeasible = false;
};

/// Keep a maximal linearly independent subset of constraint rows, in input
/// order. A dependent row whose rhs disagrees with the implied combination
/// marks the program infeasible.
RowSelection drop_dependent_rows(const LinearProgram& lp, const LpOptions& opt) {
    const std::size_t n = lp.n_vars();
    std::vector<std::vector<double>> echelon;
    std::vector<double> echelon_rhs;
    std::vector<std::size_t> pivot_col;
    RowSelection out;
    for (std::size_t i = 0; i < lp.n_rows(); i++) {
        std::vector<double> row = lp.A[i];
        double rhs = lp.b[i];
        double scale = 1.0;
        for (double v : row) scale = std::max(scale, std::abs(v));
        scale = std::max(scale, std::abs(rhs));
        for (std::size_t k = 0; k < echelon.size(); k++) {
            double f = row[pivot_col[k]] / echelon[k][pivot_col[k]];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; j++) row[j] -= f * echelon[k][j];
            rhs -= f * echelon_rhs[k];
            row[pivot_col[k]] = 0.0;
        }
        std::size_t piv = kNone;
        double best = 0.0;
        for (std::size_t j = 0; j < n; j++)
            if (std::abs(row[j]) > best) {
                best = std::abs(row[j]);
                piv = j;
            }
        if (best <= opt.zero_tol * scale) {
            if (std::abs(rhs) > opt.feas_tol * scale) {
                out.infeasible = true;
                return out;
            }
            continue; // redundant row
        }
        echelon.push_back(std::move(row));
        echelon_rhs.push_back(rhs);
        pivot_col.push_back(piv);
        out.rows.push_back(i);
    }
    return out;
}

/// Dense simplex tableau over columns [structural | artificial | rhs].
struct Tableau {
    std::size_t m = 0;     ///< active rows
    std::size_t width = 0; ///< structural + artificial + 1
    std::vector<std::vector<double>> t;
    std::vector<double> cost; ///< reduced-cost row; last entry holds -objective
    std::vector<std::size_t> basis;

    double rhs(std::size_t i) const { return t[i][width - 1]; }

    void pivot(std::size_t prow, std::size_t pcol) {
        std::vector<double>& pr = t[prow];
        const double p = pr[pcol];
        for (double& v : pr) v /= p;
        pr[pcol] = 1.0;
        for (std::size_t i = 0; i < m; i++) {
            if (i == prow) continue;
            double f = t[i][pcol];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; j++) t[i][j] -= f * pr[j];
            t[i][pcol] = 0.0;
        }
        double f = cost[pcol];
        if (f != 0.0) {
            for (std::size_t j = 0; j < width; j++) cost[j] -= f * pr[j];
            cost[pcol] = 0.0;
        }
        basis[prow] = pcol;
    }
};

/// Bland's rule: entering column is the lowest eligible index; the leaving row
/// attains the minimum ratio, ties broken by the lowest basic-variable index.
LpStatus run_simplex(Tableau& tb, std::size_t n_usable, const LpOptions& opt, std::size_t& iterations) {
    for (;;) {
        std::size_t enter = kNone;
        for (std::size_t j = 0; j < n_usable; j++)
            if (tb.cost[j] < -opt.opt_tol) {
                enter = j;
                break;
            }
        if (enter == kNone) return LpStatus::optimal;

        std::size_t leave = kNone;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < tb.m; i++) {
            double a = tb.t[i][enter];
            if (a <= 1e-11) continue;
            double ratio = tb.rhs(i) / a;
            if (ratio < best_ratio - 1e-12) {
                best_ratio = ratio;
                leave = i;
            } else if (ratio <= best_ratio + 1e-12 && leave != kNone && tb.basis[i] < tb.basis[leave]) {
                leave = i;
            }
        }
        if (leave == kNone) return LpStatus::unbounded;
        tb.pivot(leave, enter);
        if (++iterations > opt.max_iters) throw std::runtime_error("lp: simplex iteration limit exceeded");
    }
}

/// Core solver for a minimize-form program without upper bounds.
LpSolution solve_standard(const LinearProgram& lp, const LpOptions& opt) {
    const std::size_t n = lp.n_vars();
    LpSolution sol;
    RowSelection sel = drop_dependent_rows(lp, opt);
    if (sel.infeasible) {
        sol.status = LpStatus::infeasible;
        return sol;
    }
    const std::size_t m = sel.rows.size();

    if (m == 0) {
        // Unconstrained over the nonnegative orthant.
        for (std::size_t j = 0; j < n; j++)
            if (lp.c[j] < -opt.opt_tol) {
                sol.status = LpStatus::unbounded;
                return sol;
            }
        sol.x.assign(n, 0.0);
        return sol;
    }

    Tableau tb;
    tb.m = m;
    tb.width = n + m + 1;
    tb.t.assign(m, std::vector<double>(tb.width, 0.0));
    tb.basis.resize(m);
    for (std::size_t i = 0; i < m; i++) {
        const std::vector<double>& src = lp.A[sel.rows[i]];
        double rhs = lp.b[sel.rows[i]];
        double sign = rhs < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; j++) tb.t[i][j] = sign * src[j];
        tb.t[i][n + i] = 1.0;
        tb.t[i][tb.width - 1] = sign * rhs;
        tb.basis[i] = n + i;
    }

    // Phase 1: minimize the artificial mass. Reduced costs with the identity
    // artificial basis are the negated column sums.
    tb.cost.assign(tb.width, 0.0);
    for (std::size_t i = 0; i < m; i++)
        for (std::size_t j = 0; j < n; j++) tb.cost[j] -= tb.t[i][j];
    for (std::size_t i = 0; i < m; i++) tb.cost[tb.width - 1] -= tb.rhs(i);

    LpStatus phase1 = run_simplex(tb, n, opt, sol.iterations);
    double artificial_mass = -tb.cost[tb.width - 1];
    if (phase1 != LpStatus::optimal || artificial_mass > opt.feas_tol) {
        sol.status = LpStatus::infeasible;
        return sol;
    }

    // Drive remaining artificials out of the basis. After the dependent-row
    // pass every row has a structural pivot; the drop branch is a safety net.
    std::vector<std::size_t> kept_rows = sel.rows;
    for (std::size_t i = 0; i < tb.m;) {
        if (tb.basis[i] < n) {
            i++;
            continue;
        }
        std::size_t piv = kNone;
        double best = 0.0;
        for (std::size_t j = 0; j < n; j++)
            if (std::abs(tb.t[i][j]) > best) {
                best = std::abs(tb.t[i][j]);
                piv = j;
            }
        if (best > 1e-9) {
            tb.pivot(i, piv);
            i++;
        } else {
            tb.t.erase(tb.t.begin() + static_cast<std::ptrdiff_t>(i));
            tb.basis.erase(tb.basis.begin() + static_cast<std::ptrdiff_t>(i));
            kept_rows.erase(kept_rows.begin() + static_cast<std::ptrdiff_t>(i));
            tb.m--;
        }
    }

    // Phase 2: rebuild the cost row for the true objective from the current
    // basis (the tableau holds B^{-1}A), then optimize over structural columns.
    tb.cost.assign(tb.width, 0.0);
    for (std::size_t j = 0; j < n; j++) tb.cost[j] = lp.c[j];
    for (std::size_t i = 0; i < tb.m; i++) {
        double cb = lp.c[tb.basis[i]];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j < n; j++) tb.cost[j] -= cb * tb.t[i][j];
        tb.cost[tb.width - 1] -= cb * tb.rhs(i);
    }
    for (std::size_t i = 0; i < tb.m; i++) tb.cost[tb.basis[i]] = 0.0;

    LpStatus phase2 = run_simplex(tb, n, opt, sol.iterations);
    if (phase2 == LpStatus::unbounded) {
        sol.status = LpStatus::unbounded;
        return sol;
    }

    // Re-solve the basic point against the original data so that accumulated
    // tableau round-off does not contaminate the reported solution.
    sol.rows = kept_rows;
    sol.basis = tb.basis;
    sol.x.assign(n, 0.0);
    std::vector<std::vector<double>> B(tb.m, std::vector<double>(tb.m, 0.0));
    std::vector<double> rhs(tb.m, 0.0);
    for (std::size_t i = 0; i < tb.m; i++) {
        rhs[i] = lp.b[kept_rows[i]];
        for (std::size_t k = 0; k < tb.m; k++) B[i][k] = lp.A[kept_rows[i]][tb.basis[k]];
    }
    std::vector<double> xb;
    if (dense_solve(B, rhs, xb)) {
        for (std::size_t k = 0; k < tb.m; k++) sol.x[tb.basis[k]] = xb[k];
    } else {
        for (std::size_t k = 0; k < tb.m; k++) sol.x[tb.basis[k]] = tb.rhs(k);
    }
    for (double& v : sol.x)
        if (v < 0.0 && v > -opt.feas_tol) v = 0.0;
    return sol;
}

KktReport kkt_standard(const LinearProgram& lp, const std::vector<double>& x,
                       const std::vector<std::size_t>& rows, const std::vector<std::size_t>& basis) {
    KktReport rep;
    const std::size_t n = lp.n_vars();
    for (std::size_t i = 0; i < lp.n_rows(); i++) {
        double ax = 0.0;
        for (std::size_t j = 0; j < n; j++) ax += lp.A[i][j] * x[j];
        rep.primal_residual = std::max(rep.primal_residual, std::abs(ax - lp.b[i]));
    }
    for (double v : x) rep.primal_residual = std::max(rep.primal_residual, -v);

    const std::size_t m = basis.size();
    std::vector<double> y;
    if (m > 0) {
        std::vector<std::vector<double>> Bt(m, std::vector<double>(m, 0.0));
        std::vector<double> cb(m, 0.0);
        for (std::size_t i = 0; i < m; i++) {
            cb[i] = lp.c[basis[i]];
            for (std::size_t k = 0; k < m; k++) Bt[i][k] = lp.A[rows[k]][basis[i]];
        }
        if (!dense_solve(Bt, cb, y)) {
            rep.dual_residual = std::numeric_limits<double>::infinity();
            return rep;
        }
    }
    double primal_obj = 0.0, dual_obj = 0.0;
    for (std::size_t j = 0; j < n; j++) primal_obj += lp.c[j] * x[j];
    for (std::size_t i = 0; i < m; i++) dual_obj += y[i] * lp.b[rows[i]];
    rep.duality_gap = std::abs(primal_obj - dual_obj);
    for (std::size_t j = 0; j < n; j++) {
        double ya = 0.0;
        for (std::size_t i = 0; i < m; i++) ya += y[i] * lp.A[rows[i]][j];
        double reduced = lp.c[j] - ya;
        rep.dual_residual = std::max(rep.dual_residual, -reduced);
        rep.complementarity = std::max(rep.complementarity, std::abs(x[j] * reduced));
    }
    return rep;
}

/// Extend the caller-visible point with the slack values of upper-bound rows.
std::vector<double> extend_point(const StandardForm& sf, const LinearProgram& input,
                                 const std::vector<double>& x) {
    std::vector<double> full(sf.lp.n_vars(), 0.0);
    std::copy(x.begin(), x.end(), full.begin());
    std::size_t k = sf.n_orig;
    for (std::size_t j = 0; j < input.upper.size(); j++) {
        if (!std::isfinite(input.upper[j])) continue;
        full[k++] = input.upper[j] - x[j];
    }
    return full;
}

} // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt) {
    lp.validate();
    if (lp.n_vars() == 0) throw std::invalid_argument("lp: no variables");

    StandardForm sf = standard_form(lp);
    if (sf.trivially_infeasible) {
        LpSolution sol;
        sol.status = LpStatus::infeasible;
        return sol;
    }
    LpSolution sol = solve_standard(sf.lp, opt);
    if (sol.status != LpStatus::optimal) return sol;

    sol.x.resize(sf.n_orig);
    sol.objective = 0.0;
    for (std::size_t j = 0; j < sf.n_orig; j++) sol.objective += lp.c[j] * sol.x[j];

    if (opt.verify) {
        KktReport rep = verify_kkt(lp, sol);
        double scale = 1.0;
        for (double v : lp.b) scale = std::max(scale, std::abs(v));
        for (double v : lp.c) scale = std::max(scale, std::abs(v));
        if (!rep.ok(opt.verify_tol * scale))
            throw std::runtime_error("lp: reported optimum failed KKT verification");
    }
    return sol;
}

KktReport verify_kkt(const LinearProgram& lp, const LpSolution& sol) {
    KktReport rep;
    if (sol.status != LpStatus::optimal || sol.x.size() != lp.n_vars()) {
        rep.primal_residual = std::numeric_limits<double>::infinity();
        return rep;
    }
    StandardForm sf = standard_form(lp);
    if (sf.trivially_infeasible) {
        rep.primal_residual = std::numeric_limits<double>::infinity();
        return rep;
    }
    return kkt_standard(sf.lp, extend_point(sf, lp, sol.x), sol.rows, sol.basis);
}

} // namespace causalrl
