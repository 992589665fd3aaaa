#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "causalrl/lp.hpp"
#include "causalrl/rng.hpp"

using namespace causalrl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LinearProgram simplex_lp(LpSense sense, std::vector<double> c) {
    LinearProgram lp;
    lp.sense = sense;
    lp.A = {std::vector<double>(c.size(), 1.0)};
    lp.b = {1.0};
    lp.c = std::move(c);
    return lp;
}

/// Brute-force reference: enumerate every basis (column subset of size
/// n_rows), solve the square system, keep the best feasible vertex. Valid for
/// programs whose optimum is attained at a basic feasible solution, i.e. any
/// bounded program in this equality form.
struct BruteResult {
    bool feasible = false;
    double objective = 0.0;
};

bool solve_square(std::vector<std::vector<double>> m, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; col++) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; r++)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-10) return false;
        std::swap(m[pivot], m[col]);
        std::swap(rhs[pivot], rhs[col]);
        for (std::size_t r = 0; r < n; r++) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (std::size_t k = col; k < n; k++) m[r][k] -= f * m[col][k];
            rhs[r] -= f * rhs[col];
        }
    }
    for (std::size_t i = 0; i < n; i++) rhs[i] /= m[i][i];
    return true;
}

BruteResult brute_force(const LinearProgram& lp) {
    const std::size_t n = lp.n_vars();
    const std::size_t m = lp.n_rows();
    BruteResult best;
    for (std::uint32_t mask = 0; mask < (1u << n); mask++) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
        std::vector<std::size_t> pick;
        for (std::size_t j = 0; j < n; j++)
            if (mask & (1u << j)) pick.push_back(j);
        std::vector<std::vector<double>> sq(m, std::vector<double>(m));
        std::vector<double> rhs = lp.b;
        for (std::size_t r = 0; r < m; r++)
            for (std::size_t k = 0; k < m; k++) sq[r][k] = lp.A[r][pick[k]];
        if (!solve_square(sq, rhs)) continue;
        bool feasible = true;
        for (double v : rhs)
            if (v < -1e-9) feasible = false;
        if (!feasible) continue;
        double obj = 0.0;
        for (std::size_t k = 0; k < m; k++) obj += lp.c[pick[k]] * rhs[k];
        bool better = lp.sense == LpSense::minimize ? obj < best.objective : obj > best.objective;
        if (!best.feasible || better) {
            best.feasible = true;
            best.objective = obj;
        }
    }
    return best;
}

} // namespace

TEST_CASE("linear objectives over the probability simplex") {
    SUBCASE("minimize picks the cheapest coordinate") {
        LpSolution sol = solve_lp(simplex_lp(LpSense::minimize, {1.0, 2.0, 5.0}));
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("maximize picks the dearest coordinate") {
        LpSolution sol = solve_lp(simplex_lp(LpSense::maximize, {1.0, 2.0, 5.0}));
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(sol.x[2] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("objective reports the requested sense") {
        LpSolution lo = solve_lp(simplex_lp(LpSense::minimize, {-3.0, 4.0}));
        CHECK(lo.objective == doctest::Approx(-3.0).epsilon(1e-12));
    }
}

TEST_CASE("upper bounds participate in the optimum") {
    LinearProgram lp;
    lp.sense = LpSense::maximize;
    lp.c = {1.0, 0.0};
    lp.A = {{1.0, 1.0}};
    lp.b = {10.0};
    lp.upper = {3.0, kInf};
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sol.x[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sol.x[1] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("infeasible programs are reported, not solved") {
    SUBCASE("inconsistent duplicate rows") {
        LinearProgram lp;
        lp.c = {1.0};
        lp.A = {{1.0}, {1.0}};
        lp.b = {1.0, 2.0};
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
    SUBCASE("negative mass demanded from nonnegative variables") {
        LinearProgram lp;
        lp.c = {1.0, 1.0};
        lp.A = {{1.0, 1.0}};
        lp.b = {-1.0};
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
    SUBCASE("upper bounds that pinch the feasible set away") {
        LinearProgram lp;
        lp.c = {1.0, 1.0};
        lp.A = {{1.0, 1.0}};
        lp.b = {5.0};
        lp.upper = {2.0, 2.0};
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
}

TEST_CASE("unbounded programs are reported") {
    LinearProgram lp;
    lp.sense = LpSense::maximize;
    lp.c = {1.0, 0.0};
    lp.A = {{1.0, -1.0}};
    lp.b = {0.0};
    CHECK(solve_lp(lp).status == LpStatus::unbounded);
}

TEST_CASE("redundant duplicate rows are tolerated") {
    LinearProgram lp = simplex_lp(LpSense::maximize, {1.0, 4.0, 2.0});
    lp.A.push_back(lp.A[0]);
    lp.b.push_back(lp.b[0]);
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("validation rejects malformed programs") {
    LinearProgram lp = simplex_lp(LpSense::minimize, {1.0, 2.0});
    lp.validate();
    SUBCASE("row width mismatch") {
        lp.A[0] = {1.0};
        CHECK_THROWS_AS(lp.validate(), std::invalid_argument);
    }
    SUBCASE("rhs count mismatch") {
        lp.b = {1.0, 2.0};
        CHECK_THROWS_AS(lp.validate(), std::invalid_argument);
    }
    SUBCASE("upper-bound width mismatch") {
        lp.upper = {1.0};
        CHECK_THROWS_AS(lp.validate(), std::invalid_argument);
    }
    SUBCASE("non-finite coefficients") {
        lp.c[0] = kInf;
        CHECK_THROWS_AS(lp.validate(), std::invalid_argument);
    }
    SUBCASE("no variables at all") {
        LinearProgram empty;
        CHECK_THROWS_AS(solve_lp(empty), std::invalid_argument);
    }
}

TEST_CASE("random programs agree with brute-force vertex enumeration") {
    Rng rng(2024);
    std::size_t solved = 0;
    for (std::size_t trial = 0; trial < 200; trial++) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 8.0); // 2..9
        const std::size_t extra = static_cast<std::size_t>(rng.uniform() * 3.0); // 0..2
        const std::size_t m = std::min(n - 1, 1 + extra);

        // Feasibility by construction: rows are evaluated at a strictly
        // positive interior point of the simplex.
        std::vector<double> interior(n);
        double total = 0.0;
        for (double& v : interior) {
            v = 0.05 + rng.uniform();
            total += v;
        }
        for (double& v : interior) v /= total;

        LinearProgram lp;
        lp.sense = rng.uniform() < 0.5 ? LpSense::minimize : LpSense::maximize;
        lp.c.resize(n);
        for (double& v : lp.c) v = -5.0 + 10.0 * rng.uniform();
        lp.A.assign(m, std::vector<double>(n, 1.0));
        lp.b.assign(m, 1.0);
        for (std::size_t r = 1; r < m; r++) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; j++) {
                lp.A[r][j] = -1.0 + 2.0 * rng.uniform();
                dot += lp.A[r][j] * interior[j];
            }
            lp.b[r] = dot;
        }

        LpSolution sol = solve_lp(lp);
        REQUIRE(sol.status == LpStatus::optimal);
        BruteResult ref = brute_force(lp);
        REQUIRE(ref.feasible);
        CHECK(std::abs(sol.objective - ref.objective) <= 1e-7);

        KktReport kkt = verify_kkt(lp, sol);
        CHECK(kkt.ok(1e-7));
        solved++;
    }
    CHECK(solved == 200);
}

TEST_CASE("the solver is deterministic") {
    LinearProgram lp;
    lp.sense = LpSense::maximize;
    lp.c = {0.3, -1.2, 2.4, 0.9, -0.5};
    lp.A = {{1.0, 1.0, 1.0, 1.0, 1.0}, {0.2, -0.4, 0.6, 0.1, -0.9}};
    lp.b = {1.0, 0.1};
    LpSolution a = solve_lp(lp);
    LpSolution b = solve_lp(lp);
    REQUIRE(a.status == LpStatus::optimal);
    CHECK(a.x == b.x);
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
    CHECK(a.basis == b.basis);
}

TEST_CASE("kkt residuals of a reported optimum are tiny") {
    LinearProgram lp = simplex_lp(LpSense::minimize, {2.0, 1.0, 3.0});
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    KktReport kkt = verify_kkt(lp, sol);
    CHECK(kkt.primal_residual <= 1e-9);
    CHECK(kkt.dual_residual <= 1e-9);
    CHECK(kkt.complementarity <= 1e-9);
    CHECK(kkt.duality_gap <= 1e-9);
    CHECK(kkt.ok());
}
