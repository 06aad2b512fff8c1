// model.hpp
//
// Assembles the stochastic siting/sizing MILP over a reduced scenario set:
// prosumer trading rows, CES placement/sizing rows, charge-discharge
// complementarity (big-M on the rated-power cap), the energy-level
// recursion with daily cycling, and the network rows from the feeder
// module.  Three cost vectors (investment, provider operation, prosumer
// operation) are installed side by side so the staged solves share one
// problem instance.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cesplan/feeder.hpp"
#include "cesplan/grid.hpp"
#include "cesplan/ingest.hpp"
#include "cesplan/milp.hpp"
#include "cesplan/scenario.hpp"
#include "cesplan/tariff.hpp"

namespace cesplan::model {

// Objective names inside MilpProblem::objectives.
inline constexpr const char* kInv = "f_inv";
inline constexpr const char* kOpC = "f_opC";
inline constexpr const char* kOpP = "f_opP";

// Column ids for one candidate CES site.
struct CandidateVars {
    int node = -1;      // feeder node hosting this candidate
    int a = -1;         // siting binary
    int e_cap = -1;     // capacity (kWh)
    int p_rated = -1;   // rated power (kW)
    int soc_init = -1;  // shared initial energy level (kWh)
    Grid2i b;           // [s][t] charging-mode binary
    Grid2i m_aux;       // [s][t] charge-side auxiliary (kWh)
    Grid2i n_aux;       // [s][t] discharge-side auxiliary (kWh)
    Grid2i e_ch;        // [s][t] charge energy (kWh)
    Grid2i e_dis;       // [s][t] discharge energy (kWh)
    Grid2i soc;         // [s][t] energy level at end of step t (kWh)
};

struct VariableCatalog {
    std::vector<CandidateVars> cand;
    std::vector<int> cand_of_node;  // node -> index into cand, or -1
    Grid3i e_grid;                  // [u][s][t] prosumer-grid trade (kWh)
    Grid3i e_ces;                   // [u][s][t] prosumer-CES trade (kWh)
    feeder::DistflowVars net;
    Grid2 omega;                    // [s][t] interval probabilities (copied)
    int n_scenarios = 0;
    int n_prosumers = 0;
    int horizon = 0;
    double delta_t = 1.0;
};

struct BuiltModel {
    milp::MilpProblem problem;
    VariableCatalog vars;
};

// Build all constraint rows and install the three objective vectors.  CES
// variables exist only at candidate nodes; everywhere else
// charge/discharge is structurally absent, which is the bound-propagated
// form of fixing them to zero.
BuiltModel build(const scenario::ScenarioSet& set, const feeder::FeederGraph& graph,
                 const tariff::TariffSchedule& tariff, const CaseConfig& cfg);

// Install the three named cost vectors on a built model.  Operating
// vectors are weighted by omega and scaled to annual figures.
void objective_vectors(BuiltModel& bm, const tariff::TariffSchedule& tariff,
                       const CaseConfig& cfg);

// Append the bounding row used by the staged solves: objective <= f_star
// relaxed away from the optimum (times 1+eps for costs, 1-eps for negative
// optima, i.e. revenues).  Returns the row index.
int add_epsilon_row(milp::MilpProblem& p, const std::string& objective, double f_star, double eps);

// Right-hand side the row above uses; exposed for reporting and tests.
double epsilon_bound(double f_star, double eps);

// Human-readable listing of every column (bounds, integrality) and row.
void dump_model(const milp::MilpProblem& p, std::ostream& os);

}  // namespace cesplan::model
