#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cesplan/errors.hpp"
#include "cesplan/milp.hpp"
#include "doctest.h"

using namespace cesplan;
using milp::RowSense;

namespace {

// Exhaustive reference for small mixed-binary programs: enumerate every
// binary assignment, pin the binaries, solve the remaining LP, and keep
// the best objective.  Independent of branch-and-bound except for the LP
// kernel, which the hand-checked cases below pin down first.
struct EnumResult {
    bool feasible = false;
    double objective = milp::kInf;
};

EnumResult enumerate_best(const milp::MilpProblem& p, const std::string& obj) {
    std::vector<int> bin_cols;
    for (int j = 0; j < p.n_cols(); ++j)
        if (p.cols[j].integral) bin_cols.push_back(j);
    REQUIRE(bin_cols.size() <= 16);
    EnumResult out;
    for (unsigned mask = 0; mask < (1u << bin_cols.size()); ++mask) {
        milp::MilpProblem q = p;
        for (std::size_t k = 0; k < bin_cols.size(); ++k) {
            const double v = (mask >> k) & 1u ? 1.0 : 0.0;
            q.cols[bin_cols[k]].lb = v;
            q.cols[bin_cols[k]].ub = v;
        }
        milp::SolveResult r = milp::solve_lp(q, obj);
        if (r.status == milp::SolveStatus::Optimal && r.objective < out.objective) {
            out.feasible = true;
            out.objective = r.objective;
        }
    }
    return out;
}

milp::MilpProblem random_problem(std::mt19937& gen) {
    std::uniform_int_distribution<int> nb(1, 8), nc(0, 12), nr(2, 10);
    std::uniform_real_distribution<double> coef(-5.0, 5.0), cost(-10.0, 10.0), width(0.5, 8.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    milp::MilpProblem p;
    const int n_bin = nb(gen), n_cont = nc(gen);
    for (int j = 0; j < n_bin; ++j) p.add_col("b" + std::to_string(j), 0.0, 1.0, true);
    for (int j = 0; j < n_cont; ++j) {
        const double lb = (u01(gen) < 0.5) ? 0.0 : -width(gen);
        p.add_col("x" + std::to_string(j), lb, lb + width(gen), false);
    }
    // Anchor every row at a random in-box point so the instance is feasible.
    std::vector<double> ref(p.n_cols());
    for (int j = 0; j < p.n_cols(); ++j) {
        const milp::Column& c = p.cols[j];
        const double v = c.lb + u01(gen) * (c.ub - c.lb);
        ref[j] = c.integral ? std::round(v) : v;
    }
    const int rows = nr(gen);
    for (int i = 0; i < rows; ++i) {
        std::vector<milp::RowEntry> es;
        for (int j = 0; j < p.n_cols(); ++j)
            if (u01(gen) < 0.4) es.push_back({j, coef(gen)});
        if (es.empty()) es.push_back({0, coef(gen)});
        double at_ref = 0.0;
        for (const milp::RowEntry& e : es) at_ref += e.coef * ref[e.col];
        const double pick = u01(gen);
        const std::string name = "r" + std::to_string(i);
        if (pick < 0.4)
            p.add_row(name, RowSense::LE, at_ref + 2.0 * u01(gen), std::move(es));
        else if (pick < 0.8)
            p.add_row(name, RowSense::GE, at_ref - 2.0 * u01(gen), std::move(es));
        else
            p.add_row(name, RowSense::EQ, at_ref, std::move(es));
    }
    for (double& v : p.objective("z")) v = cost(gen);
    return p;
}

}  // namespace

TEST_CASE("lp solves hand-checked instances") {
    SUBCASE("resource allocation") {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36.
        milp::MilpProblem p;
        int x = p.add_col("x", 0.0, milp::kInf);
        int y = p.add_col("y", 0.0, milp::kInf);
        p.add_row("cap_x", RowSense::LE, 4.0, {{x, 1.0}});
        p.add_row("cap_y", RowSense::LE, 12.0, {{y, 2.0}});
        p.add_row("joint", RowSense::LE, 18.0, {{x, 3.0}, {y, 2.0}});
        p.objective("z") = {-3.0, -5.0};
        milp::SolveResult r = milp::solve_lp(p, "z");
        REQUIRE(r.status == milp::SolveStatus::Optimal);
        CHECK(r.objective == doctest::Approx(-36.0).epsilon(1e-9));
        CHECK(r.primal[x] == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(r.primal[y] == doctest::Approx(6.0).epsilon(1e-8));
        CHECK(milp::check_solution(p, r.primal, 1e-7, 1e-6));
        CHECK(r.gap <= 1e-6);
    }
    SUBCASE("equality pins the variable") {
        milp::MilpProblem p;
        int x = p.add_col("x", 0.0, 10.0);
        p.add_row("fix", RowSense::EQ, 3.0, {{x, 1.0}});
        p.objective("z") = {1.0};
        milp::SolveResult r = milp::solve_lp(p, "z");
        REQUIRE(r.status == milp::SolveStatus::Optimal);
        CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-10));
    }
    SUBCASE("ge row against an upper bound is infeasible") {
        milp::MilpProblem p;
        int x = p.add_col("x", 0.0, 5.0);
        p.add_row("need", RowSense::GE, 6.0, {{x, 1.0}});
        p.objective("z") = {1.0};
        CHECK(milp::solve_lp(p, "z").status == milp::SolveStatus::Infeasible);
    }
    SUBCASE("free improving ray is unbounded") {
        milp::MilpProblem p;
        p.add_col("x", 0.0, milp::kInf);
        p.objective("z") = {-1.0};
        CHECK(milp::solve_lp(p, "z").status == milp::SolveStatus::Unbounded);
    }
    SUBCASE("relaxation ignores integrality") {
        milp::MilpProblem p;
        int x = p.add_col("x", 0.0, 10.0, true);
        p.add_row("floor", RowSense::GE, 1.5, {{x, 1.0}});
        p.objective("z") = {1.0};
        CHECK(milp::solve_lp(p, "z").objective == doctest::Approx(1.5));
        CHECK(milp::solve_milp(p, "z").objective == doctest::Approx(2.0));
    }
}

TEST_CASE("milp solves a hand-checked knapsack") {
    // max 6 b0 + 5 b1 + 4 b2  s.t. 5 b0 + 4 b1 + 3 b2 <= 9  ->  {b0, b1}, 11.
    milp::MilpProblem p;
    for (int j = 0; j < 3; ++j) p.add_col("b" + std::to_string(j), 0.0, 1.0, true);
    p.add_row("weight", RowSense::LE, 9.0, {{0, 5.0}, {1, 4.0}, {2, 3.0}});
    p.objective("z") = {-6.0, -5.0, -4.0};
    milp::SolveResult r = milp::solve_milp(p, "z");
    REQUIRE(r.status == milp::SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-11.0).epsilon(1e-9));
    CHECK(r.primal[0] == doctest::Approx(1.0));
    CHECK(r.primal[1] == doctest::Approx(1.0));
    CHECK(r.primal[2] == doctest::Approx(0.0));
    std::string msg;
    CHECK(milp::check_solution(p, r.primal, 1e-7, 1e-6, &msg));
    CHECK(msg.empty());
}

TEST_CASE("milp detects infeasibility across every assignment") {
    milp::MilpProblem p;
    int b = p.add_col("b", 0.0, 1.0, true);
    p.add_row("half", RowSense::EQ, 0.5, {{b, 1.0}});
    p.objective("z") = {1.0};
    CHECK(milp::solve_milp(p, "z").status == milp::SolveStatus::Infeasible);
}

TEST_CASE("random mixed-binary programs match exhaustive enumeration") {
    std::mt19937 gen(20260815u);
    for (int it = 0; it < 25; ++it) {
        CAPTURE(it);
        milp::MilpProblem p = random_problem(gen);
        EnumResult ref = enumerate_best(p, "z");
        milp::SolveResult r = milp::solve_milp(p, "z");
        REQUIRE(ref.feasible);  // rows are anchored at an in-box point
        REQUIRE(r.status == milp::SolveStatus::Optimal);
        CHECK(std::fabs(r.objective - ref.objective) <=
              1e-6 * std::max(1.0, std::fabs(ref.objective)));
        std::string msg;
        CHECK_MESSAGE(milp::check_solution(p, r.primal, 1e-6, 1e-6, &msg), msg);
    }
}

TEST_CASE("repeated solves are bit-identical") {
    std::mt19937 gen(99u);
    milp::MilpProblem p = random_problem(gen);
    milp::SolveResult a = milp::solve_milp(p, "z");
    milp::SolveResult b = milp::solve_milp(p, "z");
    REQUIRE(a.status == b.status);
    CHECK(a.objective == b.objective);
    CHECK(a.primal == b.primal);
    CHECK(a.incumbents == b.incumbents);
}

TEST_CASE("solution checker reports the first violation") {
    milp::MilpProblem p;
    int b = p.add_col("b", 0.0, 1.0, true);
    int x = p.add_col("x", 0.0, 2.0);
    p.add_row("link", RowSense::LE, 0.0, {{x, 1.0}, {b, -2.0}});
    std::string msg;
    CHECK_FALSE(milp::check_solution(p, std::vector<double>{0.0, 1.0}, 1e-7, 1e-6, &msg));
    CHECK(!msg.empty());  // row violated: x=1 > 2b=0
    msg.clear();
    CHECK_FALSE(milp::check_solution(p, std::vector<double>{0.5, 1.0}, 1e-7, 1e-6, &msg));
    CHECK(!msg.empty());  // fractional binary
    msg.clear();
    CHECK_FALSE(milp::check_solution(p, std::vector<double>{0.0, 3.0}, 1e-7, 1e-6, &msg));
    CHECK(!msg.empty());  // bound violated
    CHECK(milp::check_solution(p, std::vector<double>{1.0, 1.5}, 1e-7, 1e-6, &msg));
}

TEST_CASE("limits surface as their own statuses") {
    // Fractional relaxation forces branching, so a one-node budget cannot
    // prove optimality.
    milp::MilpProblem p;
    for (int j = 0; j < 12; ++j) p.add_col("b" + std::to_string(j), 0.0, 1.0, true);
    std::vector<milp::RowEntry> es;
    for (int j = 0; j < 12; ++j) es.push_back({j, 1.0});
    p.add_row("halfsum", RowSense::LE, 5.5, es);
    std::vector<double>& c = p.objective("z");
    for (int j = 0; j < 12; ++j) c[j] = -1.0 - 0.01 * j;

    milp::SolverOptions opt;
    opt.node_limit = 1;
    milp::SolveResult r = milp::solve_milp(p, "z", opt);
    CHECK(r.status == milp::SolveStatus::NodeLimit);
    CHECK(std::string(milp::to_string(r.status)) == "node_limit");

    milp::SolverOptions topt;
    topt.time_limit_s = 1e-9;
    CHECK(milp::solve_milp(p, "z", topt).status == milp::SolveStatus::TimeLimit);

    milp::SolverOptions gopt;
    gopt.stop_gap = 10.0;  // any incumbent is acceptable at this gap
    milp::SolveResult g = milp::solve_milp(p, "z", gopt);
    CHECK(g.status == milp::SolveStatus::GapLimit);
    CHECK(g.has_solution());
}
