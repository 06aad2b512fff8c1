// model.cpp

#include "cesplan/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan::model {

namespace {

std::string id2(const char* base, int a, int b) {
    return std::string(base) + "_" + std::to_string(a) + "_" + std::to_string(b);
}

std::string id3(const char* base, int a, int b, int c) {
    return id2(base, a, b) + "_" + std::to_string(c);
}

// Candidate node list: configured subset, or every non-slack node.
std::vector<int> candidate_list(const feeder::FeederGraph& g, const CaseConfig& cfg) {
    std::vector<int> nodes = cfg.candidate_nodes;
    if (nodes.empty()) {
        for (int n = 1; n < g.n_nodes; ++n) nodes.push_back(n);
    }
    if (nodes.empty()) throw BuildError("no candidate nodes: the feeder has no non-slack node");
    std::set<int> seen;
    for (int n : nodes) {
        if (n <= 0 || n >= g.n_nodes)
            throw BuildError("candidate node " + std::to_string(n) + " is not a non-slack feeder node");
        if (!seen.insert(n).second)
            throw BuildError("candidate node " + std::to_string(n) + " listed twice");
    }
    return nodes;
}

}  // namespace

BuiltModel build(const scenario::ScenarioSet& set, const feeder::FeederGraph& graph,
                 const tariff::TariffSchedule& tariff, const CaseConfig& cfg) {
    if (set.n_prosumers != static_cast<int>(graph.prosumer_ids.size()))
        throw BuildError("scenario set has " + std::to_string(set.n_prosumers) +
                         " prosumers but the feeder assignment has " +
                         std::to_string(graph.prosumer_ids.size()));
    const int S = set.n_scenarios;
    const int U = set.n_prosumers;
    const int T = set.horizon;
    if (S <= 0 || T <= 0) throw BuildError("scenario set is empty");
    const double dt = set.delta_t;
    const double cap_m = cfg.ces.p_max_kw * dt;  // kWh moved at full rated power

    BuiltModel bm;
    milp::MilpProblem& p = bm.problem;
    VariableCatalog& v = bm.vars;
    v.n_scenarios = S;
    v.n_prosumers = U;
    v.horizon = T;
    v.delta_t = dt;
    v.omega = set.omega;

    // --- prosumer trading -------------------------------------------------
    // Net demand d splits into a grid trade and a CES trade of the same
    // sign: both lie in [0, d] when importing, [d, 0] when exporting.
    v.e_grid = Grid3i(U, S, T, -1);
    v.e_ces = Grid3i(U, S, T, -1);
    for (int u = 0; u < U; ++u)
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                const double d = set.e_load(s, u, t) - set.e_pv(s, u, t);
                const double lo = std::min(d, 0.0);
                const double hi = std::max(d, 0.0);
                const int eg = p.add_col(id3("Eg", u, s, t), lo, hi);
                const int ec = p.add_col(id3("Ec", u, s, t), lo, hi);
                v.e_grid(u, s, t) = eg;
                v.e_ces(u, s, t) = ec;
                p.add_row(id3("trade", u, s, t), milp::RowSense::EQ, d, {{eg, 1.0}, {ec, 1.0}});
            }

    // --- CES columns at candidate nodes ------------------------------------
    const std::vector<int> cand_nodes = candidate_list(graph, cfg);
    v.cand_of_node.assign(graph.n_nodes, -1);
    const double soc_cap = cfg.soc.sigma_hi * cfg.ces.e_max_kwh;
    for (int node : cand_nodes) {
        CandidateVars cv;
        cv.node = node;
        cv.a = p.add_col("A_" + std::to_string(node), 0.0, 1.0, true);
        cv.e_cap = p.add_col("Ecap_" + std::to_string(node), 0.0, cfg.ces.e_max_kwh);
        cv.p_rated = p.add_col("Prated_" + std::to_string(node), 0.0, cfg.ces.p_max_kw);
        cv.soc_init = p.add_col("SocInit_" + std::to_string(node), 0.0, soc_cap);
        cv.b = Grid2i(S, T, -1);
        cv.m_aux = Grid2i(S, T, -1);
        cv.n_aux = Grid2i(S, T, -1);
        cv.e_ch = Grid2i(S, T, -1);
        cv.e_dis = Grid2i(S, T, -1);
        cv.soc = Grid2i(S, T, -1);
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                cv.b(s, t) = p.add_col(id3("B", node, s, t), 0.0, 1.0, true);
                cv.m_aux(s, t) = p.add_col(id3("M", node, s, t), 0.0, cap_m);
                cv.n_aux(s, t) = p.add_col(id3("Nn", node, s, t), 0.0, cap_m);
                cv.e_ch(s, t) = p.add_col(id3("Ech", node, s, t), 0.0, cap_m);
                cv.e_dis(s, t) = p.add_col(id3("Edis", node, s, t), 0.0, cap_m);
                cv.soc(s, t) = p.add_col(id3("Soc", node, s, t), 0.0, soc_cap);
            }
        v.cand_of_node[node] = static_cast<int>(v.cand.size());
        v.cand.push_back(std::move(cv));
    }

    // --- placement and sizing ----------------------------------------------
    {
        std::vector<milp::RowEntry> one;
        for (const CandidateVars& cv : v.cand) one.push_back({cv.a, 1.0});
        p.add_row("place_one", milp::RowSense::EQ, 1.0, std::move(one));
    }
    for (const CandidateVars& cv : v.cand) {
        const std::string n = std::to_string(cv.node);
        p.add_row("cap_lo_" + n, milp::RowSense::GE, 0.0,
                  {{cv.e_cap, 1.0}, {cv.a, -cfg.ces.e_min_kwh}});
        p.add_row("cap_hi_" + n, milp::RowSense::LE, 0.0,
                  {{cv.e_cap, 1.0}, {cv.a, -cfg.ces.e_max_kwh}});
        p.add_row("pr_hi_" + n, milp::RowSense::LE, 0.0,
                  {{cv.p_rated, 1.0}, {cv.a, -cfg.ces.p_max_kw}});
    }

    // --- charge/discharge complementarity ----------------------------------
    // Auxiliaries m, n linearize e_ch <= B * p_rated * dt and
    // e_dis <= (1-B) * p_rated * dt: the mode binary steers each auxiliary
    // to either 0 or p_rated*dt exactly, and the energies sit below them.
    for (const CandidateVars& cv : v.cand)
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                const int b = cv.b(s, t), m = cv.m_aux(s, t), n = cv.n_aux(s, t);
                const int ch = cv.e_ch(s, t), dis = cv.e_dis(s, t), pr = cv.p_rated;
                p.add_row(id3("ch_m", cv.node, s, t), milp::RowSense::LE, 0.0,
                          {{ch, 1.0}, {m, -1.0}});
                p.add_row(id3("m_B", cv.node, s, t), milp::RowSense::LE, 0.0,
                          {{m, 1.0}, {b, -cap_m}});
                p.add_row(id3("m_pr", cv.node, s, t), milp::RowSense::LE, 0.0,
                          {{m, 1.0}, {pr, -dt}});
                p.add_row(id3("m_lo", cv.node, s, t), milp::RowSense::GE, -cap_m,
                          {{m, 1.0}, {pr, -dt}, {b, -cap_m}});
                p.add_row(id3("dis_n", cv.node, s, t), milp::RowSense::LE, 0.0,
                          {{dis, 1.0}, {n, -1.0}});
                p.add_row(id3("n_B", cv.node, s, t), milp::RowSense::LE, cap_m,
                          {{n, 1.0}, {b, cap_m}});
                p.add_row(id3("n_pr", cv.node, s, t), milp::RowSense::LE, 0.0,
                          {{n, 1.0}, {pr, -dt}});
                p.add_row(id3("n_lo", cv.node, s, t), milp::RowSense::GE, 0.0,
                          {{n, 1.0}, {pr, -dt}, {b, cap_m}});
            }

    // --- energy level ------------------------------------------------------
    const double gain = cfg.eff.mu_ch;
    const double loss = 1.0 / cfg.eff.mu_dis;
    int ipd = static_cast<int>(std::lround(24.0 / dt));  // intervals per day
    if (ipd <= 0 || T % ipd != 0) ipd = T;
    const int days = T / ipd;
    for (const CandidateVars& cv : v.cand) {
        const std::string n = std::to_string(cv.node);
        p.add_row("si_lo_" + n, milp::RowSense::GE, 0.0,
                  {{cv.soc_init, 1.0}, {cv.e_cap, -cfg.soc.sigma_lo}});
        p.add_row("si_hi_" + n, milp::RowSense::LE, 0.0,
                  {{cv.soc_init, 1.0}, {cv.e_cap, -cfg.soc.sigma_hi}});
        for (int s = 0; s < S; ++s) {
            for (int t = 0; t < T; ++t) {
                const int prev = t == 0 ? cv.soc_init : cv.soc(s, t - 1);
                p.add_row(id3("soc_step", cv.node, s, t), milp::RowSense::EQ, 0.0,
                          {{cv.soc(s, t), 1.0},
                           {prev, -1.0},
                           {cv.e_ch(s, t), -gain},
                           {cv.e_dis(s, t), loss}});
                p.add_row(id3("soc_lo", cv.node, s, t), milp::RowSense::GE, 0.0,
                          {{cv.soc(s, t), 1.0}, {cv.e_cap, -cfg.soc.sigma_lo}});
                p.add_row(id3("soc_hi", cv.node, s, t), milp::RowSense::LE, 0.0,
                          {{cv.soc(s, t), 1.0}, {cv.e_cap, -cfg.soc.sigma_hi}});
            }
            // End of each day the level must return to the initial one,
            // within the configured slack.
            for (int d = 0; d < days; ++d) {
                const int te = (d + 1) * ipd - 1;
                p.add_row(id3("cyc_up", cv.node, s, d), milp::RowSense::LE, cfg.theta_kwh,
                          {{cv.soc(s, te), 1.0}, {cv.soc_init, -1.0}});
                p.add_row(id3("cyc_dn", cv.node, s, d), milp::RowSense::GE, -cfg.theta_kwh,
                          {{cv.soc(s, te), 1.0}, {cv.soc_init, -1.0}});
            }
        }
    }

    // --- network -----------------------------------------------------------
    feeder::NodalInjection inj = feeder::injections_from(set, graph);
    for (const CandidateVars& cv : v.cand)
        inj.ces[cv.node] = feeder::CesHook{cv.e_ch, cv.e_dis};
    v.net = feeder::distflow_rows(graph, inj, cfg.volt, p);

    objective_vectors(bm, tariff, cfg);
    return bm;
}

void objective_vectors(BuiltModel& bm, const tariff::TariffSchedule& tariff,
                       const CaseConfig& cfg) {
    milp::MilpProblem& p = bm.problem;
    const VariableCatalog& v = bm.vars;
    const int S = v.n_scenarios, U = v.n_prosumers, T = v.horizon;
    if (static_cast<int>(tariff.lambda_g.size()) != T ||
        static_cast<int>(tariff.lambda_c.size()) != T)
        throw BuildError("tariff covers " + std::to_string(tariff.lambda_g.size()) +
                         " intervals but the model horizon is " + std::to_string(T));

    const double rho = cfg.annuity_factor();
    const double af = cfg.annualization_for(static_cast<int>(std::lround(T * v.delta_t)));

    std::vector<double>& inv = p.objective(kInv);
    std::vector<double>& opc = p.objective(kOpC);
    std::vector<double>& opp = p.objective(kOpP);

    // Investment: annualized capital cost of the installed power and
    // capacity (zero when nothing is sited, since both are forced to 0).
    for (const CandidateVars& cv : v.cand) {
        inv[cv.p_rated] += rho * cfg.fin.cost_per_kw;
        inv[cv.e_cap] += rho * cfg.fin.cost_per_kwh;
    }

    // Provider operation: buys charging energy and sells discharging
    // energy at the grid price, and nets (lambda_G - lambda_C) on every
    // kWh prosumers trade with the CES (positive trade displaces a grid
    // purchase the provider would otherwise have made on their behalf).
    // Prosumer operation: grid trades at lambda_G, CES trades at
    // lambda_C.  Every term carries the interval probability and the
    // annualization scale.
    for (int s = 0; s < S; ++s)
        for (int t = 0; t < T; ++t) {
            const double w = af * v.omega(s, t);
            const double lg = tariff.lambda_g[t];
            const double lc = tariff.lambda_c[t];
            for (const CandidateVars& cv : v.cand) {
                opc[cv.e_ch(s, t)] += w * lg;
                opc[cv.e_dis(s, t)] -= w * lg;
            }
            for (int u = 0; u < U; ++u) {
                opc[v.e_ces(u, s, t)] += w * (lg - lc);
                opp[v.e_grid(u, s, t)] += w * lg;
                opp[v.e_ces(u, s, t)] += w * lc;
            }
        }
}

double epsilon_bound(double f_star, double eps) {
    return f_star >= 0.0 ? f_star * (1.0 + eps) : f_star * (1.0 - eps);
}

int add_epsilon_row(milp::MilpProblem& p, const std::string& objective, double f_star, double eps) {
    const std::vector<double>& c = p.objective(objective);
    std::vector<milp::RowEntry> entries;
    for (int j = 0; j < p.n_cols(); ++j)
        if (c[j] != 0.0) entries.push_back({j, c[j]});
    return p.add_row("eps_" + objective, milp::RowSense::LE, epsilon_bound(f_star, eps),
                     std::move(entries));
}

void dump_model(const milp::MilpProblem& p, std::ostream& os) {
    os << "columns " << p.n_cols() << " (" << p.n_integral() << " integral), rows " << p.n_rows()
       << ", nonzeros " << p.n_nonzeros() << "\n";
    for (const milp::Column& c : p.cols) {
        os << "col " << c.name << " [" << csv::format_double(c.lb) << ", "
           << csv::format_double(c.ub) << "]";
        if (c.integral) os << " int";
        os << "\n";
    }
    for (const milp::Row& r : p.rows) {
        os << "row " << r.name << ":";
        for (const milp::RowEntry& e : r.entries)
            os << " " << (e.coef >= 0 ? "+" : "") << csv::format_double(e.coef) << "*"
               << p.cols[e.col].name;
        switch (r.sense) {
            case milp::RowSense::LE: os << " <= "; break;
            case milp::RowSense::EQ: os << " = "; break;
            case milp::RowSense::GE: os << " >= "; break;
        }
        os << csv::format_double(r.rhs) << "\n";
    }
}

}  // namespace cesplan::model
