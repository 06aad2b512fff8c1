#include "cesplan/feeder.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan::feeder {

FeederGraph load_feeder(const std::string& lines_path, const std::string& assignment_path,
                        const std::vector<std::string>& trace_prosumer_ids) {
    FeederGraph g;
    g.prosumer_ids = trace_prosumer_ids;

    {
        csv::Reader rd(lines_path);
        std::vector<std::string> f;
        bool header_seen = false;
        int max_node = 0;
        while (rd.next(f)) {
            if (!header_seen) {
                header_seen = true;
                if (f.size() >= 1 && f[0] == "alpha") {
                    if (f.size() != 4 || f[1] != "beta" || f[2] != "r_pu" || f[3] != "x_pu")
                        rd.fail("expected header alpha,beta,r_pu,x_pu");
                    continue;
                }
                rd.fail("missing header row (expected alpha,beta,r_pu,x_pu)");
            }
            if (f.size() != 4) rd.fail("expected 4 fields");
            Line ln;
            ln.from = static_cast<int>(rd.to_int(f[0], "alpha"));
            ln.to = static_cast<int>(rd.to_int(f[1], "beta"));
            ln.r_pu = rd.to_double(f[2], "r_pu");
            ln.x_pu = rd.to_double(f[3], "x_pu");
            if (ln.from < 0 || ln.to < 0) rd.fail("node ids must be non-negative");
            if (ln.r_pu < 0.0 || ln.x_pu < 0.0) rd.fail("line impedances must be non-negative");
            g.lines.push_back(ln);
            max_node = std::max({max_node, ln.from, ln.to});
        }
        if (g.lines.empty()) throw ValidationError(lines_path + ": no lines");
        g.n_nodes = max_node + 1;
        for (const auto& [key, val] : rd.directives()) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
            if (ec != std::errc() || p != val.data() + val.size())
                throw ParseError(lines_path + ": bad value for directive '" + key + "'");
            if (key == "s_base_kva") g.bases.s_base_kva = v;
            else if (key == "v_base_kv") g.bases.v_base_kv = v;
            else throw ParseError(lines_path + ": unknown directive '" + key + "'");
        }
        if (g.bases.s_base_kva <= 0.0) throw ValidationError(lines_path + ": s_base_kva must be positive");
    }

    g.prosumers_at.assign(g.n_nodes, {});
    {
        std::map<std::string, int> id_index;
        for (std::size_t i = 0; i < trace_prosumer_ids.size(); ++i)
            id_index[trace_prosumer_ids[i]] = static_cast<int>(i);
        std::vector<char> assigned(trace_prosumer_ids.size(), 0);

        csv::Reader rd(assignment_path);
        std::vector<std::string> f;
        bool header_seen = false;
        while (rd.next(f)) {
            if (!header_seen) {
                header_seen = true;
                if (f.size() >= 1 && f[0] == "node") {
                    if (f.size() != 2 || f[1] != "prosumer_id") rd.fail("expected header node,prosumer_id");
                    continue;
                }
                rd.fail("missing header row (expected node,prosumer_id)");
            }
            if (f.size() != 2) rd.fail("expected 2 fields");
            const int node = static_cast<int>(rd.to_int(f[0], "node"));
            if (node < 0 || node >= g.n_nodes)
                rd.fail("assignment references unknown node " + std::to_string(node));
            if (node == 0) rd.fail("prosumers cannot be assigned to the slack bus");
            auto it = id_index.find(f[1]);
            if (it == id_index.end()) rd.fail("assignment references unknown prosumer '" + f[1] + "'");
            if (assigned[it->second])
                rd.fail("prosumer '" + f[1] + "' assigned more than once");
            assigned[it->second] = 1;
            g.prosumers_at[node].push_back(it->second);
        }
        for (std::size_t i = 0; i < assigned.size(); ++i)
            if (!assigned[i])
                throw ValidationError(assignment_path + ": prosumer '" + trace_prosumer_ids[i] +
                                      "' is not assigned to any node");
    }

    validate_radial(g);
    return g;
}

std::vector<int> validate_radial(const FeederGraph& g) {
    const int n = g.n_nodes;
    if (n < 2) throw TopologyError("feeder needs at least one line below the slack bus");

    std::set<std::pair<int, int>> seen;
    std::vector<int> parent_line(n, -1);
    std::vector<std::vector<int>> child_lines(n);
    for (int l = 0; l < g.n_lines(); ++l) {
        const Line& ln = g.lines[l];
        if (ln.from >= n || ln.to >= n) throw TopologyError("line references unknown node");
        auto key = std::minmax(ln.from, ln.to);
        if (!seen.insert({key.first, key.second}).second)
            throw TopologyError("duplicate line between nodes " + std::to_string(ln.from) + " and " +
                                std::to_string(ln.to));
        if (ln.to == 0) throw TopologyError("slack bus cannot be a line's receiving node");
        if (parent_line[ln.to] != -1)
            throw TopologyError("node " + std::to_string(ln.to) +
                                " has multiple parents; feeder is not radial");
        parent_line[ln.to] = l;
        child_lines[ln.from].push_back(l);
    }

    // Breadth-first from the slack bus; parent-before-child line order.
    std::vector<int> order;
    order.reserve(g.n_lines());
    std::vector<char> visited(n, 0);
    std::queue<int> q;
    q.push(0);
    visited[0] = 1;
    while (!q.empty()) {
        const int node = q.front();
        q.pop();
        for (int l : child_lines[node]) {
            const int child = g.lines[l].to;
            if (visited[child])
                throw TopologyError("cycle detected at node " + std::to_string(child));
            visited[child] = 1;
            order.push_back(l);
            q.push(child);
        }
    }
    for (int v = 0; v < n; ++v)
        if (!visited[v])
            throw TopologyError("node " + std::to_string(v) +
                                " is unreachable from the slack bus (disconnected or cyclic)");
    return order;
}

NodalInjection injections_from(const scenario::ScenarioSet& set, const FeederGraph& g) {
    NodalInjection inj;
    inj.S = set.n_scenarios;
    inj.T = set.horizon;
    inj.coef_pu = 1.0 / (set.delta_t * g.bases.s_base_kva);
    inj.p_const = Grid3(g.n_nodes, inj.S, inj.T);
    inj.q_const = Grid3(g.n_nodes, inj.S, inj.T);
    inj.ces.assign(g.n_nodes, std::nullopt);
    for (int node = 1; node < g.n_nodes; ++node)
        for (int u : g.prosumers_at[node])
            for (int s = 0; s < inj.S; ++s)
                for (int t = 0; t < inj.T; ++t) {
                    inj.p_const(node, s, t) += (set.e_load(s, u, t) - set.e_pv(s, u, t)) * inj.coef_pu;
                    inj.q_const(node, s, t) += set.e_reactive(s, u, t) * inj.coef_pu;
                }
    return inj;
}

DistflowVars distflow_rows(const FeederGraph& g, const NodalInjection& inj, const VoltageBounds& vb,
                           milp::MilpProblem& p, std::optional<double> flow_limit_pu) {
    const std::vector<int> order = validate_radial(g);
    const int S = inj.S, T = inj.T;
    const double u_lo = vb.v_min * vb.v_min;
    const double u_hi = vb.v_max * vb.v_max;
    const double u0 = vb.v0 * vb.v0;
    const double fl = flow_limit_pu.value_or(milp::kInf);

    DistflowVars vars;
    vars.flow_p = Grid3i(g.n_lines(), S, T, -1);
    vars.flow_q = Grid3i(g.n_lines(), S, T, -1);
    vars.u_sq = Grid3i(g.n_nodes, S, T, -1);

    std::vector<std::vector<int>> child_lines(g.n_nodes);
    for (int l = 0; l < g.n_lines(); ++l) child_lines[g.lines[l].from].push_back(l);

    for (int l = 0; l < g.n_lines(); ++l) {
        const int beta = g.lines[l].to;
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                const std::string sfx =
                    "_" + std::to_string(l) + "_" + std::to_string(s) + "_" + std::to_string(t);
                vars.flow_p(l, s, t) = p.add_col("Pf" + sfx, -fl, fl);
                vars.flow_q(l, s, t) = p.add_col("Qf" + sfx, -fl, fl);
                const std::string usfx =
                    "_" + std::to_string(beta) + "_" + std::to_string(s) + "_" + std::to_string(t);
                vars.u_sq(beta, s, t) = p.add_col("U" + usfx, u_lo, u_hi);
            }
    }

    for (int l : order) {
        const Line& ln = g.lines[l];
        const int beta = ln.to;
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                const std::string sfx =
                    "_" + std::to_string(l) + "_" + std::to_string(s) + "_" + std::to_string(t);

                // Receiving-node flow balance: inflow covers the node's own
                // injection plus everything flowing further downstream.
                std::vector<milp::RowEntry> pe{{vars.flow_p(l, s, t), 1.0}};
                std::vector<milp::RowEntry> qe{{vars.flow_q(l, s, t), 1.0}};
                for (int cl : child_lines[beta]) {
                    pe.push_back({vars.flow_p(cl, s, t), -1.0});
                    qe.push_back({vars.flow_q(cl, s, t), -1.0});
                }
                if (inj.ces[beta]) {
                    pe.push_back({inj.ces[beta]->ch_cols(s, t), -inj.coef_pu});
                    pe.push_back({inj.ces[beta]->dis_cols(s, t), inj.coef_pu});
                }
                p.add_row("flow_p" + sfx, milp::RowSense::EQ, inj.p_const(beta, s, t), std::move(pe));
                p.add_row("flow_q" + sfx, milp::RowSense::EQ, inj.q_const(beta, s, t), std::move(qe));

                // Voltage drop along the line; the slack-side voltage is the
                // fixed v0^2 constant when alpha is the slack bus.
                std::vector<milp::RowEntry> ve{{vars.u_sq(beta, s, t), 1.0},
                                               {vars.flow_p(l, s, t), 2.0 * ln.r_pu},
                                               {vars.flow_q(l, s, t), 2.0 * ln.x_pu}};
                double rhs = 0.0;
                if (ln.from == 0) {
                    rhs = u0;
                } else {
                    ve.push_back({vars.u_sq(ln.from, s, t), -1.0});
                }
                p.add_row("volt_drop" + sfx, milp::RowSense::EQ, rhs, std::move(ve));
            }
    }
    return vars;
}

FlowSolution propagate_flows(const FeederGraph& g, std::span<const double> p_node_pu,
                             std::span<const double> q_node_pu, double v0) {
    const std::vector<int> order = validate_radial(g);
    FlowSolution fs;
    fs.flow_p.assign(g.n_lines(), 0.0);
    fs.flow_q.assign(g.n_lines(), 0.0);
    fs.u_sq.assign(g.n_nodes, v0 * v0);

    std::vector<std::vector<int>> child_lines(g.n_nodes);
    for (int l = 0; l < g.n_lines(); ++l) child_lines[g.lines[l].from].push_back(l);

    // Children first for flows...
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Line& ln = g.lines[*it];
        double pf = p_node_pu[ln.to];
        double qf = q_node_pu[ln.to];
        for (int cl : child_lines[ln.to]) {
            pf += fs.flow_p[cl];
            qf += fs.flow_q[cl];
        }
        fs.flow_p[*it] = pf;
        fs.flow_q[*it] = qf;
    }
    // ...parents first for voltages.
    for (int l : order) {
        const Line& ln = g.lines[l];
        fs.u_sq[ln.to] = fs.u_sq[ln.from] - 2.0 * (ln.r_pu * fs.flow_p[l] + ln.x_pu * fs.flow_q[l]);
    }
    return fs;
}

}  // namespace cesplan::feeder
