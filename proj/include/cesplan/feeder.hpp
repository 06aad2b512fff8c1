// feeder.hpp
//
// Radial LV feeder model and linearized branch-flow (LinDistFlow) rows.
//
// Nodes are integers 0..N with 0 the slack bus.  Each line (alpha, beta)
// is oriented parent -> child.  Flows obey the receiving-node balance
//   P_{alpha,beta} = p_beta + sum_{gamma: beta->gamma} P_{beta,gamma}
// and squared voltage magnitudes U = V^2 drop along a line as
//   U_beta = U_alpha - 2 (r P + x Q).
// Nodal injections are affine in the CES charge/discharge columns, with
// the prosumer net demand entering as a per-scenario constant.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cesplan/grid.hpp"
#include "cesplan/ingest.hpp"
#include "cesplan/milp.hpp"
#include "cesplan/scenario.hpp"

namespace cesplan::feeder {

struct Line {
    int from = 0;  // alpha (upstream)
    int to = 0;    // beta (downstream)
    double r_pu = 0.0;
    double x_pu = 0.0;
};

struct Bases {
    double s_base_kva = 100.0;
    double v_base_kv = 0.4;
};

struct FeederGraph {
    int n_nodes = 0;                             // N+1 including the slack bus
    std::vector<Line> lines;                     // exactly n_nodes-1 for a tree
    std::vector<std::vector<int>> prosumers_at;  // node -> prosumer indices
    std::vector<std::string> prosumer_ids;       // aligned with the trace set
    Bases bases;

    int n_lines() const { return static_cast<int>(lines.size()); }
};

// Load the line list (`alpha,beta,r_pu,x_pu`, optional `# s_base_kva = ...`
// directives) and the prosumer assignment (`node,prosumer_id`).  Every
// trace prosumer must be assigned to exactly one non-slack node.
FeederGraph load_feeder(const std::string& lines_path, const std::string& assignment_path,
                        const std::vector<std::string>& trace_prosumer_ids);

// Verify the graph is a tree rooted at node 0 (no duplicate lines, every
// non-slack node has exactly one parent, everything reachable).  Returns
// line indices ordered parent-before-child.
std::vector<int> validate_radial(const FeederGraph& g);

// Decision-variable hook for a node hosting CES columns.
struct CesHook {
    Grid2i ch_cols;   // [s][t] column ids of charge energy (kWh)
    Grid2i dis_cols;  // [s][t] column ids of discharge energy (kWh)
};

// Affine nodal injections: constant (pu) per (node, s, t) plus optional
// CES columns scaled by coef_pu = 1 / (delta_t * s_base).
struct NodalInjection {
    int S = 0, T = 0;
    Grid3 p_const;  // [node][s][t] pu, node 0 unused
    Grid3 q_const;  // [node][s][t] pu
    double coef_pu = 0.0;
    std::vector<std::optional<CesHook>> ces;  // per node
};

// Prosumer-side constants of the injections for a scenario set.
NodalInjection injections_from(const scenario::ScenarioSet& set, const FeederGraph& g);

// Column ids of the network variables created by distflow_rows.
struct DistflowVars {
    Grid3i flow_p;  // [line][s][t]
    Grid3i flow_q;  // [line][s][t]
    Grid3i u_sq;    // [node][s][t]; -1 at the slack bus (fixed at v0^2)
};

// Append flow-balance and voltage-drop rows (and their columns) for every
// (line, s, t).  Voltage limits become bounds on the u_sq columns; the
// optional flow limit bounds |P| and |Q| per line (off by default).
DistflowVars distflow_rows(const FeederGraph& g, const NodalInjection& inj, const VoltageBounds& vb,
                           milp::MilpProblem& p, std::optional<double> flow_limit_pu = {});

// Unique network state for fixed injections (pu): flows by downstream
// summation, voltages by forward drops from v0.  Used for reference
// checks and the no-CES feasibility report.
struct FlowSolution {
    std::vector<double> flow_p;  // per line, pu
    std::vector<double> flow_q;  // per line, pu
    std::vector<double> u_sq;    // per node, pu^2 (slack = v0^2)
};
FlowSolution propagate_flows(const FeederGraph& g, std::span<const double> p_node_pu,
                             std::span<const double> q_node_pu, double v0);

}  // namespace cesplan::feeder
