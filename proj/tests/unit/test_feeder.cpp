#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "cesplan/errors.hpp"
#include "cesplan/feeder.hpp"
#include "cesplan/milp.hpp"
#include "cesplan/scenario.hpp"
#include "doctest.h"

using namespace cesplan;

namespace {

feeder::FeederGraph chain(int n_nodes, double r, double x) {
    feeder::FeederGraph g;
    g.n_nodes = n_nodes;
    for (int i = 0; i + 1 < n_nodes; ++i) g.lines.push_back({i, i + 1, r, x});
    g.prosumers_at.assign(n_nodes, {});
    return g;
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("radial validation orders lines parent before child") {
    feeder::FeederGraph g;
    g.n_nodes = 5;
    // Deliberately scrambled: 2->4, 0->1, 2->3, 1->2.
    g.lines = {{2, 4, .01, .01}, {0, 1, .01, .01}, {2, 3, .01, .01}, {1, 2, .01, .01}};
    g.prosumers_at.assign(5, {});
    std::vector<int> order = feeder::validate_radial(g);
    REQUIRE(order.size() == 4);
    std::vector<char> reached(5, 0);
    reached[0] = 1;
    for (int l : order) {
        CHECK(reached[g.lines[l].from]);  // parent must already be reached
        reached[g.lines[l].to] = 1;
    }
    for (int v = 0; v < 5; ++v) CHECK(reached[v]);
}

TEST_CASE("radial validation rejects broken topologies") {
    {
        feeder::FeederGraph g = chain(3, .01, .01);
        g.lines.push_back({0, 2, .01, .01});  // second parent for node 2
        CHECK_THROWS_AS(feeder::validate_radial(g), TopologyError);
    }
    {
        feeder::FeederGraph g = chain(3, .01, .01);
        g.lines.push_back({2, 0, .01, .01});  // feeds the slack bus
        CHECK_THROWS_AS(feeder::validate_radial(g), TopologyError);
    }
    {
        feeder::FeederGraph g = chain(3, .01, .01);
        g.lines.push_back({1, 2, .02, .02});  // duplicate edge
        CHECK_THROWS_AS(feeder::validate_radial(g), TopologyError);
    }
    {
        feeder::FeederGraph g = chain(3, .01, .01);
        g.n_nodes = 4;  // node 3 exists but has no line
        g.prosumers_at.assign(4, {});
        CHECK_THROWS_AS(feeder::validate_radial(g), TopologyError);
    }
}

TEST_CASE("zero injections leave every voltage at the slack value") {
    feeder::FeederGraph g = chain(6, 0.05, 0.02);
    std::vector<double> zeros(6, 0.0);
    feeder::FlowSolution fs = feeder::propagate_flows(g, zeros, zeros, 1.02);
    for (double f : fs.flow_p) CHECK(f == 0.0);
    for (double f : fs.flow_q) CHECK(f == 0.0);
    for (double u : fs.u_sq) CHECK(u == doctest::Approx(1.02 * 1.02).epsilon(1e-15));
}

TEST_CASE("single line drop matches the hand computation") {
    feeder::FeederGraph g = chain(2, 0.04, 0.02);
    std::vector<double> p{0.0, 0.3}, q{0.0, 0.1};
    feeder::FlowSolution fs = feeder::propagate_flows(g, p, q, 1.0);
    CHECK(std::fabs(fs.flow_p[0] - 0.3) < 1e-12);
    CHECK(std::fabs(fs.flow_q[0] - 0.1) < 1e-12);
    // U1 = U0 - 2 (r P + x Q) = 1 - 2 (0.04*0.3 + 0.02*0.1) = 0.972
    CHECK(std::fabs(fs.u_sq[1] - 0.972) < 1e-12);
}

TEST_CASE("root flow telescopes to the sum of all demands") {
    feeder::FeederGraph g;
    g.n_nodes = 6;
    g.lines = {{0, 1, .01, .01}, {1, 2, .02, .01}, {1, 3, .03, .02}, {3, 4, .01, .01}, {3, 5, .02, .02}};
    g.prosumers_at.assign(6, {});
    std::vector<double> p{0, 0.1, -0.05, 0.2, 0.15, -0.1};
    std::vector<double> q{0, 0.02, 0.01, 0.03, 0.0, 0.01};
    feeder::FlowSolution fs = feeder::propagate_flows(g, p, q, 1.0);
    double psum = 0.0, qsum = 0.0;
    for (int v = 1; v < 6; ++v) {
        psum += p[v];
        qsum += q[v];
    }
    CHECK(fs.flow_p[0] == doctest::Approx(psum).epsilon(1e-14));
    CHECK(fs.flow_q[0] == doctest::Approx(qsum).epsilon(1e-14));
    // Interior balance: flow into node 3 covers its own demand plus children.
    CHECK(fs.flow_p[2] == doctest::Approx(p[3] + p[4] + p[5]).epsilon(1e-14));
}

TEST_CASE("network rows reproduce the closed-form flow solution") {
    // Build distflow rows for a two-scenario, two-interval chain, fix the
    // injections, and check the unique LP solution equals propagate_flows.
    feeder::FeederGraph g = chain(4, 0.03, 0.015);
    g.bases.s_base_kva = 100.0;

    scenario::ScenarioSet set;
    set.n_scenarios = 2;
    set.n_prosumers = 3;
    set.horizon = 2;
    set.delta_t = 1.0;
    set.e_load = Grid3(2, 3, 2);
    set.e_reactive = Grid3(2, 3, 2);
    set.e_pv = Grid3(2, 3, 2);
    set.omega = Grid2(2, 2, 0.5);
    g.prosumers_at = {{}, {0}, {1}, {2}};
    for (int s = 0; s < 2; ++s)
        for (int u = 0; u < 3; ++u)
            for (int t = 0; t < 2; ++t) {
                set.e_load(s, u, t) = 3.0 + u + s + t;
                set.e_reactive(s, u, t) = 1.0 + 0.1 * u;
                set.e_pv(s, u, t) = (u == 2) ? 6.0 : 0.0;
            }

    feeder::NodalInjection inj = feeder::injections_from(set, g);
    CHECK(inj.coef_pu == doctest::Approx(1.0 / 100.0));

    milp::MilpProblem p;
    VoltageBounds vb;
    vb.v_min = 0.5;  // wide-open so the equalities pin the solution alone
    vb.v_max = 1.5;
    feeder::DistflowVars vars = feeder::distflow_rows(g, inj, vb, p);
    std::vector<double>& c = p.objective("zero");
    (void)c;
    milp::SolveResult r = milp::solve_lp(p, "zero");
    REQUIRE(r.status == milp::SolveStatus::Optimal);

    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
            std::vector<double> pn(4, 0.0), qn(4, 0.0);
            for (int node = 1; node < 4; ++node) {
                pn[node] = inj.p_const(node, s, t);
                qn[node] = inj.q_const(node, s, t);
            }
            feeder::FlowSolution fs = feeder::propagate_flows(g, pn, qn, vb.v0);
            for (int l = 0; l < 3; ++l) {
                CHECK(r.primal[vars.flow_p(l, s, t)] == doctest::Approx(fs.flow_p[l]).epsilon(1e-9));
                CHECK(r.primal[vars.flow_q(l, s, t)] == doctest::Approx(fs.flow_q[l]).epsilon(1e-9));
            }
            for (int node = 1; node < 4; ++node)
                CHECK(r.primal[vars.u_sq(node, s, t)] == doctest::Approx(fs.u_sq[node]).epsilon(1e-9));
        }
}

TEST_CASE("feeder files load with directives and strict assignment checks") {
    const std::string lines = temp_file("cesplan_lines.csv");
    const std::string assign = temp_file("cesplan_assign.csv");
    std::ofstream(lines) << "# s_base_kva = 250\n# v_base_kv = 0.6\n"
                            "alpha,beta,r_pu,x_pu\n0,1,0.05,0.02\n1,2,0.04,0.01\n";
    std::ofstream(assign) << "node,prosumer_id\n1,a\n2,b\n2,c\n";

    feeder::FeederGraph g = feeder::load_feeder(lines, assign, {"a", "b", "c"});
    CHECK(g.n_nodes == 3);
    CHECK(g.bases.s_base_kva == doctest::Approx(250.0));
    CHECK(g.bases.v_base_kv == doctest::Approx(0.6));
    CHECK(g.prosumers_at[1] == std::vector<int>{0});
    CHECK(g.prosumers_at[2] == std::vector<int>{1, 2});

    // Prosumer missing from the assignment.
    CHECK_THROWS_AS(feeder::load_feeder(lines, assign, {"a", "b", "c", "d"}), ValidationError);
    // Assignment to the slack bus.
    std::ofstream(assign) << "node,prosumer_id\n0,a\n";
    CHECK_THROWS_AS(feeder::load_feeder(lines, assign, {"a"}), ParseError);
    // Duplicate assignment.
    std::ofstream(assign) << "node,prosumer_id\n1,a\n2,a\n";
    CHECK_THROWS_AS(feeder::load_feeder(lines, assign, {"a"}), ParseError);
    // Unknown prosumer id.
    std::ofstream(assign) << "node,prosumer_id\n1,zz\n";
    CHECK_THROWS_AS(feeder::load_feeder(lines, assign, {"a"}), ParseError);
}
