#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace causalrl {

enum class LpSense { minimize, maximize };

/// Dense linear program:
///
///   minimize / maximize   c . x
///   subject to            A x = b,   0 <= x  (<= upper, when given).
struct LinearProgram {
    LpSense sense = LpSense::minimize;
    std::vector<double> c;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    /// Optional per-variable upper bounds. Empty means unbounded above;
    /// otherwise one entry per variable, +infinity allowed.
    std::vector<double> upper;

    std::size_t n_vars() const { return c.size(); }
    std::size_t n_rows() const { return A.size(); }
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::optimal;
    double objective = 0.0; ///< c . x in the requested sense
    std::vector<double> x;  ///< original variables only
    /// Internal certificate: retained rows of the standard-form program and
    /// the basic variable chosen for each. Consumed by verify_kkt.
    std::vector<std::size_t> rows;
    std::vector<std::size_t> basis;
    std::size_t iterations = 0; ///< simplex pivots across both phases
};

struct LpOptions {
    double zero_tol = 1e-11;   ///< relative threshold for treating entries as zero
    double feas_tol = 1e-8;    ///< tolerance when checking dropped-row consistency
    double opt_tol = 1e-9;     ///< reduced-cost threshold for optimality
    double verify_tol = 1e-7;  ///< KKT residual allowance on the returned optimum
    bool verify = true;        ///< re-check every reported optimum against KKT
    std::size_t max_iters = 200000;
};

/// First-order optimality residuals for a solved program.
struct KktReport {
    double primal_residual = 0.0; ///< max |Ax - b| over all rows and max(0, -x_j)
    double dual_residual = 0.0;   ///< max(0, y.A_j - c_j) over all columns (min form)
    double complementarity = 0.0; ///< max |x_j (c_j - y.A_j)|
    double duality_gap = 0.0;     ///< |c.x - y.b| in the standard min form
    bool ok(double tol = 1e-7) const;
};

/// Two-phase primal simplex with Bland's rule; fully deterministic.
/// Linearly dependent constraint rows are dropped up front (inconsistent ones
/// make the program infeasible), and the final point is re-solved from the
/// basis against the original data so tableau round-off does not reach the
/// result. With `options.verify` set, an optimum that fails the KKT check at
/// `verify_tol` raises std::runtime_error instead of being returned.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Recomputes the KKT residuals of an optimal solution from scratch.
/// Only meaningful when `solution.status == LpStatus::optimal`.
KktReport verify_kkt(const LinearProgram& lp, const LpSolution& solution);

} // namespace causalrl
