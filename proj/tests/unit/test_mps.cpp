#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "cesplan/errors.hpp"
#include "cesplan/milp.hpp"
#include "cesplan/mps.hpp"
#include "doctest.h"

using namespace cesplan;
using milp::RowSense;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// One column per bound flavour, plus every row sense, plus an awkward
// coefficient that needs full precision to survive.
milp::MilpProblem exercise_problem() {
    milp::MilpProblem p;
    int fx = p.add_col("frozen", 2.5, 2.5);
    int fr = p.add_col("free", -milp::kInf, milp::kInf);
    int mi = p.add_col("down_open", -milp::kInf, 4.0);
    int lo = p.add_col("up_open", -1.25, milp::kInf);
    int up = p.add_col("boxed", 0.0, 7.5);
    int ib = p.add_col("flag", 0.0, 1.0, true);
    int ig = p.add_col("count", 0.0, 9.0, true);
    p.add_row("le", RowSense::LE, 10.0, {{fx, 1.0}, {fr, 0.1234567890123456}});
    p.add_row("ge", RowSense::GE, -3.0, {{mi, -2.0}, {lo, 3.0}});
    p.add_row("eq", RowSense::EQ, 1.0, {{up, 1.0}, {ib, -1.0}, {ig, 0.5}});
    p.objective("main") = {1.0, -2.0, 0.0, 4.0, 1e-3, -7.0, 2.0};
    return p;
}

}  // namespace

TEST_CASE("mps survives a write-read round trip") {
    milp::MilpProblem p = exercise_problem();
    const std::string path = temp_path("cesplan_roundtrip.mps");
    mps::write_mps(p, "main", path);
    mps::MpsModel m = mps::read_mps(path);

    CHECK(m.problem.n_cols() == p.n_cols());
    CHECK(m.problem.n_rows() == p.n_rows());
    CHECK(m.problem.n_integral() == p.n_integral());
    CHECK(m.problem.n_nonzeros() == p.n_nonzeros());
    CHECK(m.objective_constant == 0.0);
    CHECK(mps::problem_digest(m.problem, m.objective) == mps::problem_digest(p, "main"));

    // Bound kinds mapped back exactly, in writer order.
    CHECK(m.problem.cols[0].lb == 2.5);
    CHECK(m.problem.cols[0].ub == 2.5);
    CHECK(m.problem.cols[1].lb == -milp::kInf);
    CHECK(m.problem.cols[1].ub == milp::kInf);
    CHECK(m.problem.cols[2].lb == -milp::kInf);
    CHECK(m.problem.cols[2].ub == 4.0);
    CHECK(m.problem.cols[3].lb == -1.25);
    CHECK(m.problem.cols[3].ub == milp::kInf);
    CHECK(m.problem.cols[4].ub == 7.5);
    CHECK(m.problem.cols[5].integral);
    CHECK(m.problem.cols[6].integral);
    CHECK(m.problem.cols[6].ub == 9.0);
    CHECK_FALSE(m.problem.cols[4].integral);

    // Awkward coefficient kept to the last bit.
    bool found = false;
    for (const milp::RowEntry& e : m.problem.rows[0].entries)
        if (e.col == 1) {
            CHECK(e.coef == 0.1234567890123456);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("digest ignores order but sees every structural change") {
    milp::MilpProblem p = exercise_problem();
    const std::uint64_t base = mps::problem_digest(p, "main");

    // Duplicate entries that merge to the same coefficient hash equal.
    milp::MilpProblem split = exercise_problem();
    for (milp::Row& r : split.rows)
        if (r.name == "le") {
            double c = 0.0;
            for (auto& e : r.entries)
                if (e.col == 0) c = e.coef;
            for (auto& e : r.entries)
                if (e.col == 0) e.coef = c / 2;
            r.entries.push_back({0, c / 2});
        }
    CHECK(mps::problem_digest(split, "main") == base);

    // An explicit zero coefficient is structurally invisible.
    milp::MilpProblem zero = exercise_problem();
    zero.rows[1].entries.push_back({4, 0.0});
    CHECK(mps::problem_digest(zero, "main") == base);

    milp::MilpProblem rhs = exercise_problem();
    rhs.rows[0].rhs += 1e-9;
    CHECK(mps::problem_digest(rhs, "main") != base);

    milp::MilpProblem sense = exercise_problem();
    sense.rows[0].sense = RowSense::GE;
    CHECK(mps::problem_digest(sense, "main") != base);

    milp::MilpProblem bound = exercise_problem();
    bound.cols[4].ub = 7.5000001;
    CHECK(mps::problem_digest(bound, "main") != base);

    milp::MilpProblem integ = exercise_problem();
    integ.cols[5].integral = false;
    CHECK(mps::problem_digest(integ, "main") != base);

    milp::MilpProblem cost = exercise_problem();
    cost.objective("main")[0] = 1.5;
    CHECK(mps::problem_digest(cost, "main") != base);
}

TEST_CASE("solving the reread model reproduces the original optimum") {
    std::mt19937 gen(4242u);
    std::uniform_real_distribution<double> coef(-4.0, 4.0);
    milp::MilpProblem p;
    for (int j = 0; j < 3; ++j) p.add_col("b" + std::to_string(j), 0.0, 1.0, true);
    for (int j = 0; j < 4; ++j) p.add_col("x" + std::to_string(j), -2.0, 5.0);
    for (int i = 0; i < 5; ++i) {
        std::vector<milp::RowEntry> es;
        for (int j = 0; j < p.n_cols(); ++j) es.push_back({j, coef(gen)});
        p.add_row("r" + std::to_string(i), RowSense::LE, 6.0 + i, std::move(es));
    }
    for (double& v : p.objective("z")) v = coef(gen);

    const std::string path = temp_path("cesplan_resolve.mps");
    mps::write_mps(p, "z", path);
    mps::MpsModel m = mps::read_mps(path);

    milp::SolveResult a = milp::solve_milp(p, "z");
    milp::SolveResult b = milp::solve_milp(m.problem, m.objective);
    REQUIRE(a.status == milp::SolveStatus::Optimal);
    REQUIRE(b.status == a.status);
    CHECK(b.objective == a.objective);  // identical model, identical path
}

TEST_CASE("name map sidecar pairs every mangled name") {
    milp::MilpProblem p = exercise_problem();
    const std::string path = temp_path("cesplan_names.mps");
    mps::write_mps(p, "main", path);
    std::ifstream side(path + ".names.csv");
    REQUIRE(side.good());
    std::string line;
    REQUIRE(std::getline(side, line));
    CHECK(line == "mps_name,kind,original");
    int n_cols = 0, n_rows = 0, n_obj = 0;
    bool saw_frozen = false;
    while (std::getline(side, line)) {
        if (line.find(",column,") != std::string::npos) ++n_cols;
        if (line.find(",row,") != std::string::npos) ++n_rows;
        if (line.find(",objective,") != std::string::npos) ++n_obj;
        if (line.size() >= 7 && line.substr(line.size() - 7) == ",frozen") saw_frozen = true;
    }
    CHECK(n_cols == p.n_cols());
    CHECK(n_rows == p.n_rows());
    CHECK(n_obj == 1);
    CHECK(saw_frozen);

    mps::write_mps(p, "main", temp_path("cesplan_nomap.mps"), false);
    CHECK_FALSE(std::filesystem::exists(temp_path("cesplan_nomap.mps") + ".names.csv"));
}

TEST_CASE("reader accepts comments and rejects damage") {
    const std::string path = temp_path("cesplan_handwritten.mps");
    std::ofstream(path) << "* handwritten fixture\n"
                           "NAME          TINY\n"
                           "ROWS\n"
                           " N  COST\n"
                           " L  LIM\n"
                           "COLUMNS\n"
                           "    X  COST  1.0  LIM  1.0\n"
                           "RHS\n"
                           "    RHS  LIM  4.0\n"
                           "BOUNDS\n"
                           " UP BND  X  9.0\n"
                           "ENDATA\n";
    mps::MpsModel m = mps::read_mps(path);
    CHECK(m.objective == "COST");
    CHECK(m.problem.n_cols() == 1);
    CHECK(m.problem.cols[0].ub == 9.0);
    REQUIRE(m.problem.n_rows() == 1);
    CHECK(m.problem.rows[0].sense == RowSense::LE);
    CHECK(m.problem.rows[0].rhs == 4.0);

    std::ofstream(path) << "ROWS\n N COST\nCOLUMNS\n    X  NOPE  1.0\nENDATA\n";
    CHECK_THROWS_AS(mps::read_mps(path), ParseError);
    CHECK_THROWS_AS(mps::read_mps(temp_path("cesplan_missing.mps")), ParseError);
}
