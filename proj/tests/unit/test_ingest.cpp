#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"
#include "cesplan/ingest.hpp"
#include "doctest.h"

using namespace cesplan;

namespace {

// Oracle: a capital-recovery factor rho must amortize a unit loan exactly,
// i.e. the discounted stream of rho payments over the lifetime has present
// value one.  rho * (1 - (1+d)^-years) / d is that present value.
double discounted_payment_sum(double rho, double d, double years) {
    return rho * (1.0 - std::pow(1.0 + d, -years)) / d;
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("capital recovery factor amortizes a unit principal") {
    CaseConfig cfg;
    cfg.fin.discount_rate = 0.1;
    cfg.fin.lifetime_years = 12.5;
    const double rho = cfg.annuity_factor();
    CHECK(rho == doctest::Approx(0.14363741504379607).epsilon(1e-12));
    CHECK(discounted_payment_sum(rho, 0.1, 12.5) == doctest::Approx(1.0).epsilon(1e-12));

    cfg.fin.discount_rate = 0.07;
    cfg.fin.lifetime_years = 20.0;
    CHECK(discounted_payment_sum(cfg.annuity_factor(), 0.07, 20.0) == doctest::Approx(1.0).epsilon(1e-12));

    // Zero-interest limit: straight-line repayment.
    cfg.fin.discount_rate = 0.0;
    cfg.fin.lifetime_years = 10.0;
    CHECK(cfg.annuity_factor() == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("operating scale defaults to hours-per-year over the horizon") {
    CaseConfig cfg;
    CHECK(cfg.annualization_for(24) == doctest::Approx(365.0));
    CHECK(cfg.annualization_for(8760) == doctest::Approx(1.0));
    cfg.annualization_factor = 52.0;
    CHECK(cfg.annualization_for(24) == doctest::Approx(52.0));
}

TEST_CASE("empty config stream yields the documented defaults") {
    std::istringstream in("");
    CaseConfig cfg = parse_config(in, "inline");
    CHECK(cfg.sigma_fraction == doctest::Approx(0.02));
    CHECK(cfg.n_initial_scenarios == 50);
    CHECK(cfg.n_reduced_scenarios == 10);
    CHECK(cfg.rng_seed == 1);
    CHECK(cfg.ces.p_max_kw == doctest::Approx(200.0));
    CHECK(cfg.ces.e_min_kwh == doctest::Approx(50.0));
    CHECK(cfg.ces.e_max_kwh == doctest::Approx(1000.0));
    CHECK(cfg.eff.mu_ch == doctest::Approx(0.98));
    CHECK(cfg.soc.sigma_lo == doctest::Approx(0.05));
    CHECK(cfg.soc.sigma_hi == doctest::Approx(1.0));
    CHECK(cfg.volt.v_min == doctest::Approx(0.95));
    CHECK(cfg.volt.v_max == doctest::Approx(1.05));
    CHECK(cfg.fin.cost_per_kw == doctest::Approx(463.0));
    CHECK(cfg.fin.cost_per_kwh == doctest::Approx(795.0));
    CHECK(cfg.eps1 == doctest::Approx(0.2));
    CHECK(cfg.eps2 == doctest::Approx(0.2));
    CHECK_FALSE(cfg.annualization_factor.has_value());
    CHECK(cfg.candidate_nodes.empty());
    CHECK(cfg.n_oos == 20);
    CHECK(cfg.ets2_delta == doctest::Approx(1.5));
    CHECK(cfg.ets3_delta == doctest::Approx(0.5));
}

TEST_CASE("config parser reads keys, comments and node lists") {
    std::istringstream in(
        "# a comment\n"
        "sigma_fraction = 0.05\n"
        "  n_initial_scenarios=40 \n"
        "candidate_nodes = 2, 3 ,5\n"
        "rng_seed = 99\n");
    CaseConfig cfg = parse_config(in, "inline");
    CHECK(cfg.sigma_fraction == doctest::Approx(0.05));
    CHECK(cfg.n_initial_scenarios == 40);
    CHECK(cfg.candidate_nodes == std::vector<int>{2, 3, 5});
    CHECK(cfg.rng_seed == 99);
}

TEST_CASE("config parser rejects malformed input") {
    {
        std::istringstream in("no_such_key = 1\n");
        CHECK_THROWS_AS(parse_config(in, "inline"), ParseError);
    }
    {
        std::istringstream in("sigma_fraction = abc\n");
        CHECK_THROWS_AS(parse_config(in, "inline"), ParseError);
    }
    {
        std::istringstream in("just some words\n");
        CHECK_THROWS_AS(parse_config(in, "inline"), ParseError);
    }
    {
        std::istringstream in("candidate_nodes = 2,x\n");
        CHECK_THROWS_AS(parse_config(in, "inline"), ParseError);
    }
}

TEST_CASE("config validation rejects domain violations") {
    auto expect_invalid = [](auto&& mutate) {
        CaseConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(validate_config(cfg), ValidationError);
    };
    expect_invalid([](CaseConfig& c) { c.sigma_fraction = -0.1; });
    expect_invalid([](CaseConfig& c) { c.n_reduced_scenarios = c.n_initial_scenarios + 1; });
    expect_invalid([](CaseConfig& c) { c.ces.p_max_kw = 0.0; });
    expect_invalid([](CaseConfig& c) { c.ces.e_min_kwh = c.ces.e_max_kwh + 1.0; });
    expect_invalid([](CaseConfig& c) { c.eff.mu_ch = 1.2; });
    expect_invalid([](CaseConfig& c) { c.soc.sigma_lo = c.soc.sigma_hi; });
    expect_invalid([](CaseConfig& c) { c.theta_kwh = 0.0; });
    expect_invalid([](CaseConfig& c) { c.volt.v_min = c.volt.v0 + 0.1; });
    expect_invalid([](CaseConfig& c) { c.fin.lifetime_years = 0.0; });
    expect_invalid([](CaseConfig& c) { c.eps1 = -0.01; });
    expect_invalid([](CaseConfig& c) { c.delta_t_hours = 0.0; });
    expect_invalid([](CaseConfig& c) { c.ets3_delta = 0.0; });
}

TEST_CASE("overrides update single keys and reject unknown ones") {
    CaseConfig cfg;
    apply_override(cfg, "p_max_kw", "77.5");
    CHECK(cfg.ces.p_max_kw == doctest::Approx(77.5));
    apply_override(cfg, "candidate_nodes", "4,7");
    CHECK(cfg.candidate_nodes == std::vector<int>{4, 7});
    CHECK_THROWS_AS(apply_override(cfg, "nonsense", "1"), ParseError);
    CHECK_THROWS_AS(apply_override(cfg, "eps1", "zz"), ParseError);
}

TEST_CASE("trace files round-trip bit-identically") {
    ProsumerTraceSet ts;
    ts.prosumer_ids = {"a", "b"};
    ts.horizon_hours = 24;
    ts.delta_t = 1.0;
    ts.mu_load = Grid2(2, 24);
    ts.mu_reactive = Grid2(2, 24);
    ts.mu_pv = Grid2(2, 24);
    for (int u = 0; u < 2; ++u)
        for (int t = 0; t < 24; ++t) {
            ts.mu_load(u, t) = 0.1 + 0.37 * u + t / 7.0;  // awkward decimals on purpose
            ts.mu_reactive(u, t) = ts.mu_load(u, t) / 3.0;
            ts.mu_pv(u, t) = (t >= 8 && t <= 16) ? 1.0 / (u + 3.0) : 0.0;
        }

    const std::string p1 = temp_file("cesplan_traces_a.csv");
    const std::string p2 = temp_file("cesplan_traces_b.csv");
    save_traces(ts, p1);
    ProsumerTraceSet back = load_traces(p1);
    CHECK(back.prosumer_ids == ts.prosumer_ids);
    CHECK(back.horizon_hours == 24);
    CHECK(back.mu_load == ts.mu_load);
    CHECK(back.mu_reactive == ts.mu_reactive);
    CHECK(back.mu_pv == ts.mu_pv);
    save_traces(back, p2);

    std::ifstream f1(p1), f2(p2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
}

TEST_CASE("trace loader rejects malformed and incomplete files") {
    auto write_and_load = [](const std::string& body) {
        const std::string p = temp_file("cesplan_traces_bad.csv");
        std::ofstream(p) << body;
        return load_traces(p);
    };
    // Horizon not a multiple of a day.
    CHECK_THROWS_AS(write_and_load("prosumer,t,load_kwh,reactive_kvarh,pv_kwh\n"
                                   "a,0,1,0,0\n"),
                    ValidationError);
    // Negative load.
    CHECK_THROWS_AS(write_and_load("prosumer,t,load_kwh,reactive_kvarh,pv_kwh\n"
                                   "a,0,-1,0,0\n"),
                    ParseError);
    // Missing header.
    CHECK_THROWS_AS(write_and_load("a,0,1,0,0\n"), ParseError);
    // Duplicate cell.
    {
        std::string body = "prosumer,t,load_kwh,reactive_kvarh,pv_kwh\n";
        for (int t = 0; t < 24; ++t)
            body += "a," + std::to_string(t) + ",1,0,0\n";
        body += "a,3,2,0,0\n";
        CHECK_THROWS_AS(write_and_load(body), ValidationError);
    }
    // One prosumer covers the day, the other misses an interval.
    {
        std::string body = "prosumer,t,load_kwh,reactive_kvarh,pv_kwh\n";
        for (int t = 0; t < 24; ++t)
            body += "a," + std::to_string(t) + ",1,0,0\n";
        for (int t = 0; t < 23; ++t)
            body += "b," + std::to_string(t) + ",1,0,0\n";
        CHECK_THROWS_AS(write_and_load(body), ValidationError);
    }
    CHECK_THROWS_AS(load_traces(temp_file("cesplan_no_such_file.csv")), ParseError);
}
