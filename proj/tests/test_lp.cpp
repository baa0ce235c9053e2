#include <doctest.h>

#include <random>

#include "flexcoord/lp.hpp"
#include "lp_oracles.hpp"

using namespace flexcoord;
using flexcoord::testing::vertex_enumerate;

TEST_CASE("textbook one-variable problem") {
    LinearProgram lp;
    const int x = lp.add_variable("x", 0.0, kLpInf, 1.0);
    lp.add_row("floor", RowOp::GreaterEqual, 3.0, {{x, 1.0}});
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(sol.value(lp, "x") == doctest::Approx(3.0));
}

TEST_CASE("two-variable corner") {
    // min -x - 2y s.t. x + y <= 4, x <= 3, y <= 3
    LinearProgram lp;
    const int x = lp.add_variable("x", 0.0, 3.0, -1.0);
    const int y = lp.add_variable("y", 0.0, 3.0, -2.0);
    lp.add_row("cap", RowOp::LessEqual, 4.0, {{x, 1.0}, {y, 1.0}});
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-7.0)); // x=1, y=3
    CHECK(sol.x[x] == doctest::Approx(1.0));
    CHECK(sol.x[y] == doctest::Approx(3.0));
}

TEST_CASE("equality row with free variable is eliminated") {
    // min y s.t. f = 2y - 3 (f free),  f >= 1  ->  y = 2
    LinearProgram lp;
    const int f = lp.add_variable("f", -kLpInf, kLpInf, 0.0);
    const int y = lp.add_variable("y", 0.0, kLpInf, 1.0);
    lp.add_row("def", RowOp::Equal, -3.0, {{f, 1.0}, {y, -2.0}});
    lp.add_row("floor", RowOp::GreaterEqual, 1.0, {{f, 1.0}});
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.x[y] == doctest::Approx(2.0));
    CHECK(sol.x[f] == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded detection") {
    SUBCASE("infeasible") {
        LinearProgram lp;
        const int x = lp.add_variable("x", 0.0, 1.0, 1.0);
        lp.add_row("high", RowOp::GreaterEqual, 2.0, {{x, 1.0}});
        auto sol = solve_lp(lp);
        CHECK(sol.status == LpStatus::Infeasible);
        CHECK_FALSE(sol.message.empty());
    }
    SUBCASE("unbounded") {
        LinearProgram lp;
        const int x = lp.add_variable("x", 0.0, kLpInf, -1.0);
        const int y = lp.add_variable("y", 0.0, kLpInf, 0.0);
        lp.add_row("link", RowOp::LessEqual, 5.0, {{x, 1.0}, {y, -1.0}});
        auto sol = solve_lp(lp);
        CHECK(sol.status == LpStatus::Unbounded);
    }
}

TEST_CASE("degenerate problem still terminates") {
    // many redundant constraints through the same vertex
    LinearProgram lp;
    const int x = lp.add_variable("x", 0.0, kLpInf, -1.0);
    const int y = lp.add_variable("y", 0.0, kLpInf, -1.0);
    for (int k = 1; k <= 6; ++k)
        lp.add_row("r" + std::to_string(k), RowOp::LessEqual, 0.0,
                   {{x, 1.0 * k}, {y, -1.0 * k}});
    lp.add_row("cap", RowOp::LessEqual, 2.0, {{x, 1.0}, {y, 1.0}});
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-2.0));
}

TEST_CASE("random boxes match vertex enumeration") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> rhs(0.5, 2.0);
    std::uniform_int_distribution<int> nd(2, 6);
    std::uniform_int_distribution<int> md(2, 6);

    int solved = 0;
    for (int inst = 0; inst < 40; ++inst) {
        const int n = nd(rng), m = md(rng);
        LinearProgram lp;
        for (int j = 0; j < n; ++j)
            lp.add_variable("x" + std::to_string(j), 0.0, 3.0, coef(rng));
        for (int r = 0; r < m; ++r) {
            std::vector<std::pair<int, double>> terms;
            for (int j = 0; j < n; ++j) terms.emplace_back(j, coef(rng));
            lp.add_row("r" + std::to_string(r), RowOp::LessEqual, rhs(rng), std::move(terms));
        }
        auto want = vertex_enumerate(lp);
        REQUIRE(want.feasible); // x = 0 is feasible by construction
        auto sol = solve_lp(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.objective == doctest::Approx(want.objective).epsilon(1e-8));
        CHECK(max_violation(lp, sol.x) <= 1e-7);
        ++solved;
    }
    CHECK(solved == 40);
}

TEST_CASE("random problems with equalities match vertex enumeration") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> nd(3, 5);

    for (int inst = 0; inst < 25; ++inst) {
        const int n = nd(rng);
        LinearProgram lp;
        for (int j = 0; j < n; ++j)
            lp.add_variable("x" + std::to_string(j), 0.0, 2.0, coef(rng));
        // one equality anchored at an interior point, a couple of inequalities
        std::vector<double> anchor(n);
        for (double& v : anchor) v = 0.5 + 0.5 * std::abs(coef(rng));
        std::vector<std::pair<int, double>> eq;
        double eq_rhs = 0.0;
        for (int j = 0; j < n; ++j) {
            const double a = coef(rng);
            eq.emplace_back(j, a);
            eq_rhs += a * anchor[j];
        }
        lp.add_row("eq", RowOp::Equal, eq_rhs, std::move(eq));
        for (int r = 0; r < 3; ++r) {
            std::vector<std::pair<int, double>> terms;
            double slackful = 0.0;
            for (int j = 0; j < n; ++j) {
                const double a = coef(rng);
                terms.emplace_back(j, a);
                slackful += a * anchor[j];
            }
            lp.add_row("r" + std::to_string(r), RowOp::LessEqual, slackful + 0.2,
                       std::move(terms));
        }
        auto want = vertex_enumerate(lp);
        REQUIRE(want.feasible);
        auto sol = solve_lp(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.objective == doctest::Approx(want.objective).epsilon(1e-8));
        CHECK(max_violation(lp, sol.x) <= 1e-7);
    }
}

TEST_CASE("dump contains objective, rows and bounds") {
    LinearProgram lp;
    const int x = lp.add_variable("x", 0.0, 5.0, 2.0);
    lp.add_row("cap", RowOp::LessEqual, 4.0, {{x, 1.0}});
    auto text = lp.dump();
    CHECK(text.find("min:") != std::string::npos);
    CHECK(text.find("cap:") != std::string::npos);
    CHECK(text.find("<=") != std::string::npos);
}
