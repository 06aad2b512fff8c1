// planner.hpp
//
// Staged planning runs and their evaluation reports.
//
// plan() minimizes the ranked objectives in sequence: investment cost
// first, then the provider's operating cost under a relaxed investment
// bound, then the prosumers' operating cost under both relaxed bounds.
// run_all_ets() compares the three trading schemes on one shared scenario
// set and reports benefit equitability against a no-CES baseline.
// out_of_sample() re-solves the operating problem on fresh scenarios with
// the plan pinned, quantifying the value of the stochastic solution.
// pareto_sweep() maps the cost trade-off surface over the relaxation
// widths.

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cesplan/feeder.hpp"
#include "cesplan/grid.hpp"
#include "cesplan/ingest.hpp"
#include "cesplan/milp.hpp"
#include "cesplan/model.hpp"
#include "cesplan/scenario.hpp"
#include "cesplan/tariff.hpp"

namespace cesplan::planner {

// Solver settings used by the pipeline unless a caller overrides them.
milp::SolverOptions default_options();

struct StageInfo {
    std::string objective;  // cost vector this stage minimized
    double optimum = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    milp::SolveStats stats;
};

struct PlanningSolution {
    std::string ets;  // trading-scheme label
    int node = -1;    // selected CES node
    double capacity_kwh = 0.0;
    double rated_kw = 0.0;
    double soc_init_kwh = 0.0;
    double f_inv = 0.0;  // all three evaluated on the final dispatch
    double f_opC = 0.0;  // negative = provider revenue
    double f_opP = 0.0;
    double f_inv_star = 0.0;  // stage-1 optimum backing its relaxation row
    double f_opC_star = 0.0;  // stage-2 optimum backing its relaxation row
    double eps1 = 0.0, eps2 = 0.0;
    Grid2 e_ch, e_dis, soc;  // [s][t] at the selected node, kWh
    Grid3 e_grid, e_ces;     // [u][s][t] trades, kWh
    Grid2 omega;             // [s][t] weights behind the expectations
    double delta_t = 1.0;
    std::array<StageInfo, 3> stages;
};

// Sample and reduce the training scenario set for a case.
scenario::ScenarioSet training_scenarios(const ProsumerTraceSet& traces, const CaseConfig& cfg);

// Three-stage solve on a prebuilt scenario set.
PlanningSolution plan_on(const scenario::ScenarioSet& set, const feeder::FeederGraph& graph,
                         const tariff::TariffSchedule& tariff, const CaseConfig& cfg,
                         const milp::SolverOptions& opt);

// Generate training scenarios, then run the staged solve.
PlanningSolution plan(const ProsumerTraceSet& traces, const feeder::FeederGraph& graph,
                      const tariff::TariffSchedule& tariff, const CaseConfig& cfg);

// Prosumer operating cost when every trade goes to the grid (no CES),
// evaluated directly, plus whether voltages stay in band without storage.
struct BaselineReport {
    double opP = 0.0;
    bool voltage_ok = true;
};
BaselineReport no_ces_baseline(const scenario::ScenarioSet& set, const feeder::FeederGraph& graph,
                               const tariff::TariffSchedule& tariff, const CaseConfig& cfg);

struct EtsRow {
    std::string ets;
    double provider_revenue_aud = 0.0;  // -f_opC
    double prosumer_cost_aud = 0.0;     // f_opP
    double provider_share = 0.0;        // revenue / baseline cost
    double prosumer_share = 0.0;        // (baseline - f_opP) / baseline cost
    double spread = 0.0;                // |provider_share - prosumer_share|
};

struct EtsComparison {
    std::vector<PlanningSolution> solutions;  // avg, scaled(ets2), scaled(ets3)
    BaselineReport baseline;
    std::vector<EtsRow> rows;
    int most_equitable = -1;  // index of the smallest spread
};

// One shared scenario set, three schemes (average-price plus the two
// configured price scales), equitability report vs the no-CES baseline.
EtsComparison run_all_ets(const ProsumerTraceSet& traces, const feeder::FeederGraph& graph,
                          const std::vector<double>& lambda_g, const CaseConfig& cfg);

struct OosRow {
    int scenario = 0;
    bool feasible = false;
    double f_opC = 0.0;
    double f_opP = 0.0;
};

struct OosReport {
    int n_oos = 0;
    int n_feasible = 0;
    int n_infeasible = 0;
    double avg_opC = 0.0;
    double avg_opP = 0.0;
    double f_opP_training = 0.0;
    double vss_percent = 0.0;
    std::vector<OosRow> rows;
};

// Draw n_oos fresh scenarios from the held-out stream, pin the plan's
// siting/sizing, and solve each scenario's staged operation problem on
// its own: the provider cost is minimized first and the prosumer solve
// carries that optimum relaxed by the training eps2.  Infeasible
// scenarios are recorded and excluded from the averages.
OosReport out_of_sample(const PlanningSolution& sol, const ProsumerTraceSet& traces,
                        const feeder::FeederGraph& graph, const tariff::TariffSchedule& tariff,
                        const CaseConfig& cfg, int n_oos);

struct ParetoPoint {
    double eps1 = 0.0, eps2 = 0.0;
    double f_inv = 0.0, f_opC = 0.0, f_opP = 0.0;
    bool ok = false;
    std::string error;  // empty when ok
};

struct ParetoResult {
    std::vector<ParetoPoint> points;   // one per grid entry, input order
    std::array<double, 3> utopia{};    // best f_inv, f_opC, f_opP separately
    std::array<double, 3> nadir{};     // worst of each across those optima
};

// Staged solves over a grid of relaxation widths, with shared stage-1 and
// cached stage-2 optima.  Per-point failures are recorded, not thrown.
ParetoResult pareto_sweep(const ProsumerTraceSet& traces, const feeder::FeederGraph& graph,
                          const tariff::TariffSchedule& tariff, const CaseConfig& cfg,
                          const std::vector<std::pair<double, double>>& grid);

// Report writers; column lists are documented in the README.
void write_solution_csv(const PlanningSolution& s, const std::string& path);
void write_dispatch_csv(const PlanningSolution& s, const std::string& path);
void write_ets_report_csv(const EtsComparison& c, const std::string& path);
void write_oos_csv(const OosReport& r, const std::string& path);
void write_pareto_csv(const ParetoResult& r, const std::string& path);

}  // namespace cesplan::planner
