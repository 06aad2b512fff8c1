// ingest.hpp
//
// Input layer: prosumer demand/PV traces and the case configuration.
//
// Traces are hourly mean profiles per prosumer (load, reactive, PV), kWh
// per interval, horizon a positive multiple of 24 hours.  The config is a
// flat "key = value" text file; absent keys fall back to the documented
// defaults so an empty file is a valid case description.

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "cesplan/grid.hpp"

namespace cesplan {

struct ProsumerTraceSet {
    std::vector<std::string> prosumer_ids;  // order of first appearance
    int horizon_hours = 0;                  // |T|, multiple of 24
    double delta_t = 1.0;                   // interval length, hours
    Grid2 mu_load;                          // [prosumer][t] kWh
    Grid2 mu_reactive;                      // [prosumer][t] kvarh
    Grid2 mu_pv;                            // [prosumer][t] kWh

    int n_prosumers() const { return static_cast<int>(prosumer_ids.size()); }
    int n_days() const { return horizon_hours / 24; }
};

// Load traces from CSV with header `prosumer,t,load_kwh,reactive_kvarh,pv_kwh`.
// Every prosumer must cover every t in [0, horizon); load and pv must be
// non-negative; the horizon must be a positive multiple of 24.
ProsumerTraceSet load_traces(const std::string& path, double delta_t = 1.0);

// Write a trace set back to CSV.  Values are emitted with shortest
// round-trip precision, so load_traces(save_traces(x)) is bit-identical.
void save_traces(const ProsumerTraceSet& traces, const std::string& path);

struct CesLimits {
    double p_max_kw = 200.0;   // rated-power ceiling per unit
    double e_min_kwh = 50.0;   // smallest installable capacity
    double e_max_kwh = 1000.0; // largest installable capacity
};

struct Efficiencies {
    double mu_ch = 0.98;
    double mu_dis = 0.98;
};

struct SocBounds {
    double sigma_lo = 0.05;  // min state of charge, fraction of capacity
    double sigma_hi = 1.0;   // max state of charge, fraction of capacity
};

struct VoltageBounds {
    double v0 = 1.0;    // slack-bus voltage, pu
    double v_min = 0.95;
    double v_max = 1.05;
};

struct Finance {
    double discount_rate = 0.1;
    double lifetime_years = 12.5;
    double cost_per_kw = 463.0;   // AUD/kW
    double cost_per_kwh = 795.0;  // AUD/kWh
};

struct CaseConfig {
    double sigma_fraction = 0.02;  // per-interval sigma as fraction of the mean
    int n_initial_scenarios = 50;  // N_m
    int n_reduced_scenarios = 10;  // N_s
    std::uint64_t rng_seed = 1;

    CesLimits ces;
    Efficiencies eff;
    SocBounds soc;
    double theta_kwh = 1e-4;  // daily cycling slack
    VoltageBounds volt;
    Finance fin;
    double eps1 = 0.2;
    double eps2 = 0.2;

    // Empty means "annualize by 8760/|T|"; the horizon is only known once
    // traces are loaded, hence the optional.
    std::optional<double> annualization_factor;

    // Empty means every non-slack node is a candidate CES site.
    std::vector<int> candidate_nodes;

    double delta_t_hours = 1.0;
    int n_oos = 20;            // out-of-sample evaluation scenarios
    double ets2_delta = 1.5;   // price scale for the premium scheme
    double ets3_delta = 0.5;   // price scale for the discount scheme

    // Capital-recovery (annuity) factor rho = d(1+d)^tau / ((1+d)^tau - 1).
    double annuity_factor() const;

    // Operating-cost scale for a given horizon.
    double annualization_for(int horizon_hours) const;
};

// Parse "key = value" lines; '#' starts a comment.  Unknown keys and
// malformed values raise ParseError; domain violations raise
// ValidationError (via validate_config).
CaseConfig load_config(const std::string& path);
CaseConfig parse_config(std::istream& in, const std::string& name);

// Apply one "key=value" override (CLI --set).  Throws on unknown keys.
void apply_override(CaseConfig& cfg, const std::string& key, const std::string& value);

// Check all documented invariants; throws ValidationError.
void validate_config(const CaseConfig& cfg);

}  // namespace cesplan
