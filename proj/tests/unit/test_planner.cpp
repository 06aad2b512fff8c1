#include <algorithm>
#include <cmath>
#include <vector>

#include "cesplan/errors.hpp"
#include "cesplan/feeder.hpp"
#include "cesplan/model.hpp"
#include "cesplan/planner.hpp"
#include "cesplan/scenario.hpp"
#include "cesplan/tariff.hpp"
#include "doctest.h"

using namespace cesplan;

namespace {

struct SmallCase {
    ProsumerTraceSet traces;
    feeder::FeederGraph g;
    std::vector<double> lambda_g;
    CaseConfig cfg;
};

// Two prosumers on a three-node chain, one day, mild uncertainty.  Sized
// so the staged solve finishes in well under a second.
SmallCase small_case() {
    SmallCase c;
    c.traces.prosumer_ids = {"a", "b"};
    c.traces.horizon_hours = 24;
    c.traces.delta_t = 1.0;
    c.traces.mu_load = Grid2(2, 24);
    c.traces.mu_reactive = Grid2(2, 24);
    c.traces.mu_pv = Grid2(2, 24);
    for (int u = 0; u < 2; ++u)
        for (int t = 0; t < 24; ++t) {
            const double evening = (t >= 17 && t <= 21) ? 2.0 : 1.0;
            c.traces.mu_load(u, t) = (1.0 + 0.3 * u) * evening;
            c.traces.mu_reactive(u, t) = 0.2;
            c.traces.mu_pv(u, t) = (t >= 9 && t <= 15) ? 2.5 : 0.0;
        }

    c.g.n_nodes = 3;
    c.g.lines = {{0, 1, 0.02, 0.01}, {1, 2, 0.03, 0.015}};
    c.g.prosumers_at = {{}, {0}, {1}};
    c.g.prosumer_ids = {"a", "b"};

    c.lambda_g.assign(24, 0.2);
    for (int t = 17; t <= 21; ++t) c.lambda_g[t] = 0.7;
    for (int t = 9; t <= 15; ++t) c.lambda_g[t] = 0.1;

    c.cfg.sigma_fraction = 0.05;
    c.cfg.n_initial_scenarios = 6;
    c.cfg.n_reduced_scenarios = 2;
    c.cfg.rng_seed = 11;
    c.cfg.ces = {10.0, 1.0, 60.0};
    c.cfg.eff = {0.95, 0.95};
    c.cfg.soc = {0.05, 1.0};
    c.cfg.theta_kwh = 1e-4;
    c.cfg.volt = {1.0, 0.9, 1.1};
    c.cfg.eps1 = 0.2;
    c.cfg.eps2 = 0.2;
    c.cfg.annualization_factor = 365.0;
    c.cfg.candidate_nodes = {1, 2};
    c.cfg.n_oos = 4;
    return c;
}

}  // namespace

TEST_CASE("staged planning respects the relaxation chain and the physics") {
    SmallCase c = small_case();
    tariff::TariffSchedule tf = tariff::derive_ces_price(c.lambda_g, tariff::Scheme::avg());
    planner::PlanningSolution sol = planner::plan(c.traces, c.g, tf, c.cfg);

    CHECK((sol.node == 1 || sol.node == 2));
    CHECK(sol.capacity_kwh >= c.cfg.ces.e_min_kwh - 1e-6);
    CHECK(sol.capacity_kwh <= c.cfg.ces.e_max_kwh + 1e-6);
    CHECK(sol.rated_kw <= c.cfg.ces.p_max_kw + 1e-6);
    CHECK(sol.ets == "avg");

    // Stage bookkeeping: each stage records the objective it minimized,
    // and the final dispatch honours the first two relaxed bounds.
    CHECK(sol.stages[0].objective == model::kInv);
    CHECK(sol.stages[1].objective == model::kOpC);
    CHECK(sol.stages[2].objective == model::kOpP);
    CHECK(sol.f_inv_star == sol.stages[0].optimum);
    CHECK(sol.f_opC_star == sol.stages[1].optimum);
    CHECK(sol.f_opP == doctest::Approx(sol.stages[2].optimum));
    CHECK(sol.f_inv <= model::epsilon_bound(sol.f_inv_star, sol.eps1) + 1e-6);
    CHECK(sol.f_opC <= model::epsilon_bound(sol.f_opC_star, sol.eps2) + 1e-6);
    CHECK(sol.f_inv_star <= sol.f_inv + 1e-6);  // the bound came from a true optimum

    const int S = sol.e_ch.dim0(), T = sol.e_ch.dim1();
    REQUIRE(S == c.cfg.n_reduced_scenarios);
    REQUIRE(T == 24);
    const double lo = c.cfg.soc.sigma_lo * sol.capacity_kwh;
    const double hi = c.cfg.soc.sigma_hi * sol.capacity_kwh;
    for (int s = 0; s < S; ++s) {
        double prev = sol.soc_init_kwh;
        for (int t = 0; t < T; ++t) {
            // Charging and discharging never overlap.
            CHECK(std::min(sol.e_ch(s, t), sol.e_dis(s, t)) <= 1e-6);
            CHECK(sol.e_ch(s, t) <= sol.rated_kw * sol.delta_t + 1e-6);
            CHECK(sol.e_dis(s, t) <= sol.rated_kw * sol.delta_t + 1e-6);
            // Energy-level recursion with the configured efficiencies.
            const double want = prev + c.cfg.eff.mu_ch * sol.e_ch(s, t) -
                                sol.e_dis(s, t) / c.cfg.eff.mu_dis;
            CHECK(sol.soc(s, t) == doctest::Approx(want).epsilon(1e-7));
            CHECK(sol.soc(s, t) >= lo - 1e-6);
            CHECK(sol.soc(s, t) <= hi + 1e-6);
            prev = sol.soc(s, t);
        }
        // Daily cycling: the level returns to the initial one.
        CHECK(std::fabs(sol.soc(s, T - 1) - sol.soc_init_kwh) <= c.cfg.theta_kwh + 1e-9);
    }

    // Trades recombine into the reduced set's net demand.
    scenario::ScenarioSet set = planner::training_scenarios(c.traces, c.cfg);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                const double d = set.e_load(s, u, t) - set.e_pv(s, u, t);
                CHECK(sol.e_grid(u, s, t) + sol.e_ces(u, s, t) == doctest::Approx(d).epsilon(1e-7));
            }
    CHECK(sol.omega == set.omega);  // weights are carried verbatim
}

TEST_CASE("training scenario generation is deterministic") {
    SmallCase c = small_case();
    scenario::ScenarioSet a = planner::training_scenarios(c.traces, c.cfg);
    scenario::ScenarioSet b = planner::training_scenarios(c.traces, c.cfg);
    CHECK(a.e_load == b.e_load);
    CHECK(a.omega == b.omega);
    c.cfg.rng_seed = 12;
    scenario::ScenarioSet d = planner::training_scenarios(c.traces, c.cfg);
    CHECK(a.e_load != d.e_load);
}

TEST_CASE("no-storage baseline equals the directly summed energy bill") {
    SmallCase c = small_case();
    tariff::TariffSchedule tf = tariff::derive_ces_price(c.lambda_g, tariff::Scheme::avg());
    scenario::ScenarioSet set = planner::training_scenarios(c.traces, c.cfg);
    planner::BaselineReport rep = planner::no_ces_baseline(set, c.g, tf, c.cfg);

    const double af = c.cfg.annualization_for(24);
    double want = 0.0;
    for (int s = 0; s < set.n_scenarios; ++s)
        for (int t = 0; t < set.horizon; ++t)
            for (int u = 0; u < set.n_prosumers; ++u)
                want += af * set.omega(s, t) * tf.lambda_g[t] *
                        (set.e_load(s, u, t) - set.e_pv(s, u, t));
    CHECK(rep.opP == doctest::Approx(want).epsilon(1e-10));
    CHECK(rep.voltage_ok);  // comfortable band on this feeder

    CaseConfig tight = c.cfg;
    tight.volt = {1.0, 0.9995, 1.0005};
    planner::BaselineReport squeezed = planner::no_ces_baseline(set, c.g, tf, tight);
    CHECK_FALSE(squeezed.voltage_ok);
    CHECK(squeezed.opP == doctest::Approx(rep.opP));  // the bill does not move
}

TEST_CASE("scheme comparison covers all three schemes and scores equitability") {
    SmallCase c = small_case();
    planner::EtsComparison cmp = planner::run_all_ets(c.traces, c.g, c.lambda_g, c.cfg);
    REQUIRE(cmp.solutions.size() == 3);
    REQUIRE(cmp.rows.size() == 3);
    CHECK(cmp.solutions[0].ets == "avg");
    CHECK(cmp.solutions[1].ets == "scaled:1.5");
    CHECK(cmp.solutions[2].ets == "scaled:0.5");
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cmp.rows[i].ets == cmp.solutions[i].ets);
        CHECK(cmp.rows[i].provider_revenue_aud == doctest::Approx(-cmp.solutions[i].f_opC));
        CHECK(cmp.rows[i].prosumer_cost_aud == doctest::Approx(cmp.solutions[i].f_opP));
        CHECK(cmp.rows[i].spread ==
              doctest::Approx(std::fabs(cmp.rows[i].provider_share - cmp.rows[i].prosumer_share)));
    }
    REQUIRE(cmp.most_equitable >= 0);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(cmp.rows[cmp.most_equitable].spread <= cmp.rows[i].spread + 1e-12);
    CHECK(cmp.baseline.opP > 0.0);
}

TEST_CASE("without uncertainty the held-out evaluation matches training") {
    SmallCase c = small_case();
    c.cfg.sigma_fraction = 0.0;
    c.cfg.n_initial_scenarios = 4;
    c.cfg.n_reduced_scenarios = 1;
    tariff::TariffSchedule tf = tariff::derive_ces_price(c.lambda_g, tariff::Scheme::avg());
    planner::PlanningSolution sol = planner::plan(c.traces, c.g, tf, c.cfg);
    planner::OosReport rep = planner::out_of_sample(sol, c.traces, c.g, tf, c.cfg, 3);

    CHECK(rep.n_oos == 3);
    CHECK(rep.n_feasible == 3);
    CHECK(rep.n_infeasible == 0);
    REQUIRE(rep.rows.size() == 3);
    for (const planner::OosRow& row : rep.rows) CHECK(row.feasible);
    // Every held-out scenario collapses onto the training means, so the
    // evaluated cost is the training cost and the regret vanishes.
    CHECK(rep.f_opP_training == doctest::Approx(sol.f_opP));
    CHECK(rep.avg_opP == doctest::Approx(sol.f_opP).epsilon(1e-6));
    CHECK(std::fabs(rep.vss_percent) < 1e-4);
}

TEST_CASE("relaxation sweep reproduces the planner at the configured point") {
    SmallCase c = small_case();
    tariff::TariffSchedule tf = tariff::derive_ces_price(c.lambda_g, tariff::Scheme::avg());
    planner::PlanningSolution sol = planner::plan(c.traces, c.g, tf, c.cfg);
    std::vector<std::pair<double, double>> grid = {
        {c.cfg.eps1, c.cfg.eps2}, {c.cfg.eps1, c.cfg.eps2 + 0.2}};
    planner::ParetoResult pr = planner::pareto_sweep(c.traces, c.g, tf, c.cfg, grid);
    REQUIRE(pr.points.size() == 2);
    REQUIRE(pr.points[0].ok);
    REQUIRE(pr.points[1].ok);
    CHECK(pr.points[0].f_inv == doctest::Approx(sol.f_inv).epsilon(1e-9));
    CHECK(pr.points[0].f_opC == doctest::Approx(sol.f_opC).epsilon(1e-9));
    CHECK(pr.points[0].f_opP == doctest::Approx(sol.f_opP).epsilon(1e-9));
    // Widening the second relaxation can only help the last objective.
    CHECK(pr.points[1].f_opP <= pr.points[0].f_opP + 1e-6);
    for (int k = 0; k < 3; ++k) CHECK(pr.utopia[k] <= pr.nadir[k] + 1e-9);
}
