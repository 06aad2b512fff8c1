// scenario.hpp
//
// Scenario machinery for load / reactive / PV uncertainty.
//
// Each per-interval quantity is modelled as a normal around its trace mean
// with sigma = sigma_fraction * |mean|, discretized to seven points
// (mu, mu+-sigma, mu+-2sigma, mu+-3sigma).  Roulette-wheel sampling over
// the discrete pdf yields N_m raw scenarios with per-interval occurrence
// probabilities, which k-means clustering compresses to N_s representative
// scenarios with aggregated probabilities.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cesplan/grid.hpp"
#include "cesplan/ingest.hpp"
#include "cesplan/rng.hpp"

namespace cesplan::scenario {

struct DiscretePdf {
    // realizations[0] is the mean; the rest alternate +k sigma, -k sigma.
    std::vector<double> realizations;
    std::vector<double> probs;       // strictly positive, sum to 1
    bool degenerate = false;         // sigma <= 0 collapses to a single point
};

// Seven-point discretization of N(mu, sigma).  Point weights are the pdf
// densities scaled by sigma and renormalized; the resulting probabilities
// are independent of mu and sigma.
DiscretePdf discretize_normal(double mu, double sigma);

struct RouletteWheel {
    std::vector<double> cumulative;  // strictly increasing, back() == 1 exactly

    // Smallest index whose cumulative bin [lo, hi) contains r.
    // r must lie in [0, 1).
    std::size_t spin(double r) const;
};

RouletteWheel make_wheel(const DiscretePdf& pdf);

// Raw sampled scenarios before reduction.
struct InitialScenarioSet {
    int n_scenarios = 0;  // N_m
    int n_prosumers = 0;
    int horizon = 0;
    Grid3 e_load, e_reactive, e_pv;        // [m][u][t] sampled values
    Grid3 phi_load, phi_reactive, phi_pv;  // [m][u][t] realization probabilities
    Grid2 omega;  // [m][t] normalized scenario probability per interval
};

// Sample N_m scenarios.  Every (m, u, t, quantity) draw hashes its own
// index tuple, so results are independent of iteration order and
// reproducible for a fixed seed.  stream_tag separates training draws
// from out-of-sample draws.
InitialScenarioSet generate_initial(const ProsumerTraceSet& traces, const CaseConfig& cfg,
                                    std::uint64_t stream_tag = rng::kStreamTraining);

// Reduced scenario set used by the planner.
struct ScenarioSet {
    int n_scenarios = 0;  // N_s
    int n_prosumers = 0;
    int horizon = 0;
    double delta_t = 1.0;
    Grid3 e_load, e_reactive, e_pv;  // [s][u][t]
    Grid2 omega;                     // [s][t], each column sums to 1
};

// K-means over the concatenated standardized (load, reactive, pv) feature
// vectors; k-means++ seeding from cfg.rng_seed, Lloyd iterations until the
// assignment stabilizes (at most 300 rounds).  Reduced values are the
// plain per-cluster means; probabilities are summed over cluster members
// and renormalized per interval.
ScenarioSet reduce_kmeans(const InitialScenarioSet& init, const CaseConfig& cfg);

// Wrap a single sampled scenario as a one-member set with unit weight.
ScenarioSet single_scenario(const InitialScenarioSet& init, int m, double delta_t);

// CSV writers: `s,t,u,load_kwh,reactive_kvarh,pv_kwh` and `s,t,omega`.
void write_scenarios_csv(const ScenarioSet& set, const std::vector<std::string>& prosumer_ids,
                         const std::string& path);
void write_omega_csv(const ScenarioSet& set, const std::string& path);

}  // namespace cesplan::scenario
