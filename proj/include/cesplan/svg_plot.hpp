// svg_plot.hpp
//
// Deterministic SVG rendering of a dispatch schedule: for one day, the
// probability-weighted prosumer-grid trade, prosumer-CES trade, and
// battery state of charge, each as a polyline over the hours of that day.
// Output depends only on the input rows, so identical inputs give
// byte-identical documents.

#pragma once

#include <string>
#include <vector>

namespace cesplan::plot {

// One dispatch.csv data row (fleet-aggregated trades for scenario s,
// interval t at the CES node).
struct DispatchRow {
    int node = 0;
    int s = 0;
    int t = 0;
    double omega = 0.0;
    double e_ch_kwh = 0.0;
    double e_dis_kwh = 0.0;
    double soc_kwh = 0.0;
    double grid_kwh = 0.0;
    double ces_kwh = 0.0;
};

struct DispatchData {
    std::vector<DispatchRow> rows;
    double delta_t = 1.0;        // from the "# delta_t" directive
    double capacity_kwh = 0.0;   // from "# capacity_kwh" (0 when absent)
    std::string ets;             // from "# ets" (may be empty)
};

// Parse a dispatch.csv produced by the planner (header row plus optional
// "# key = value" directives).  Throws ParseError on malformed input.
DispatchData load_dispatch_csv(const std::string& path);

// Render the requested day (0-based) as a standalone SVG document with a
// fixed 960x540 view box, numeric axis ticks and a legend.  Per interval
// the plotted value is the omega-weighted average across scenarios,
// summed over nodes.  Throws DomainError when the day has no rows.
std::string render_dispatch_svg(const DispatchData& data, int day);

}  // namespace cesplan::plot
