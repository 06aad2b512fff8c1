// planner.cpp

#include "cesplan/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"
#include "cesplan/rng.hpp"

namespace cesplan::planner {

namespace {

// Run fn(0..n-1) on a bounded pool.  Results land wherever fn writes them
// (callers pre-size by index), so ordering is deterministic; the first
// failing index's exception is rethrown after all jobs finish.
void run_jobs(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    for (int i = 0; i < n; ++i)
        if (errs[i]) std::rethrow_exception(errs[i]);
}

StageInfo info_from(const char* objective, const milp::SolveResult& r) {
    StageInfo si;
    si.objective = objective;
    si.optimum = r.objective;
    si.bound = r.bound;
    si.gap = r.gap;
    si.stats = r.stats;
    return si;
}

[[noreturn]] void stage_fail(int stage, const char* objective, const milp::SolveResult& r,
                             const char* bound_rows) {
    std::string msg = "stage " + std::to_string(stage) + " (min " + objective + ") ended " +
                      milp::to_string(r.status);
    if (bound_rows && *bound_rows)
        msg += std::string("; active relaxation rows: ") + bound_rows;
    throw SolveFailure(msg);
}

PlanningSolution extract(const model::BuiltModel& bm, const tariff::TariffSchedule& tariff,
                         const CaseConfig& cfg, const milp::SolveResult& r1,
                         const milp::SolveResult& r2, const milp::SolveResult& r3) {
    const std::vector<double>& x = r3.primal;
    const model::VariableCatalog& v = bm.vars;
    PlanningSolution out;
    out.ets = tariff.scheme.label();
    out.eps1 = cfg.eps1;
    out.eps2 = cfg.eps2;
    out.f_inv_star = r1.objective;
    out.f_opC_star = r2.objective;
    out.f_inv = bm.problem.eval_objective(model::kInv, x);
    out.f_opC = bm.problem.eval_objective(model::kOpC, x);
    out.f_opP = bm.problem.eval_objective(model::kOpP, x);

    const model::CandidateVars* sel = nullptr;
    for (const model::CandidateVars& cv : v.cand)
        if (x[cv.a] > 0.5) {
            sel = &cv;
            break;
        }
    if (!sel) throw SolveFailure("final solution sites no CES unit");
    out.node = sel->node;
    out.capacity_kwh = x[sel->e_cap];
    out.rated_kw = x[sel->p_rated];
    out.soc_init_kwh = x[sel->soc_init];

    const int S = v.n_scenarios, U = v.n_prosumers, T = v.horizon;
    out.e_ch = Grid2(S, T);
    out.e_dis = Grid2(S, T);
    out.soc = Grid2(S, T);
    for (int s = 0; s < S; ++s)
        for (int t = 0; t < T; ++t) {
            out.e_ch(s, t) = x[sel->e_ch(s, t)];
            out.e_dis(s, t) = x[sel->e_dis(s, t)];
            out.soc(s, t) = x[sel->soc(s, t)];
        }
    out.e_grid = Grid3(U, S, T);
    out.e_ces = Grid3(U, S, T);
    for (int u = 0; u < U; ++u)
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < T; ++t) {
                out.e_grid(u, s, t) = x[v.e_grid(u, s, t)];
                out.e_ces(u, s, t) = x[v.e_ces(u, s, t)];
            }
    out.omega = v.omega;
    out.delta_t = v.delta_t;
    out.stages = {info_from(model::kInv, r1), info_from(model::kOpC, r2),
                  info_from(model::kOpP, r3)};
    return out;
}

std::ofstream open_report(const std::string& path) { return csv::open_out(path); }

}  // namespace

milp::SolverOptions default_options() {
    milp::SolverOptions opt;
    opt.branching = milp::SolverOptions::Branching::PseudoCost;
    return opt;
}

scenario::ScenarioSet training_scenarios(const ProsumerTraceSet& traces, const CaseConfig& cfg) {
    return scenario::reduce_kmeans(scenario::generate_initial(traces, cfg, rng::kStreamTraining),
                                   cfg);
}

PlanningSolution plan_on(const scenario::ScenarioSet& set, const feeder::FeederGraph& graph,
                         const tariff::TariffSchedule& tariff, const CaseConfig& cfg,
                         const milp::SolverOptions& opt) {
    model::BuiltModel bm = model::build(set, graph, tariff, cfg);
    milp::MilpProblem& p = bm.problem;

    const milp::SolveResult r1 = milp::solve_milp(p, model::kInv, opt);
    if (r1.status != milp::SolveStatus::Optimal) stage_fail(1, model::kInv, r1, "");
    model::add_epsilon_row(p, model::kInv, r1.objective, cfg.eps1);

    const milp::SolveResult r2 = milp::solve_milp(p, model::kOpC, opt);
    if (r2.status != milp::SolveStatus::Optimal) stage_fail(2, model::kOpC, r2, "eps_f_inv");
    model::add_epsilon_row(p, model::kOpC, r2.objective, cfg.eps2);

    const milp::SolveResult r3 = milp::solve_milp(p, model::kOpP, opt);
    if (r3.status != milp::SolveStatus::Optimal)
        stage_fail(3, model::kOpP, r3, "eps_f_inv, eps_f_opC");

    return extract(bm, tariff, cfg, r1, r2, r3);
}

PlanningSolution plan(const ProsumerTraceSet& traces, const feeder::FeederGraph& graph,
                      const tariff::TariffSchedule& tariff, const CaseConfig& cfg) {
    return plan_on(training_scenarios(traces, cfg), graph, tariff, cfg, default_options());
}

BaselineReport no_ces_baseline(const scenario::ScenarioSet& set, const feeder::FeederGraph& graph,
                               const tariff::TariffSchedule& tariff, const CaseConfig& cfg) {
    const int S = set.n_scenarios, U = set.n_prosumers, T = set.horizon;
    const double af = cfg.annualization_for(static_cast<int>(std::lround(T * set.delta_t)));
    BaselineReport rep;
    for (int s = 0; s < S; ++s)
        for (int t = 0; t < T; ++t) {
            double d_sum = 0.0;
            for (int u = 0; u < U; ++u) d_sum += set.e_load(s, u, t) - set.e_pv(s, u, t);
            rep.opP += af * set.omega(s, t) * tariff.lambda_g[t] * d_sum;
        }

    const feeder::NodalInjection inj = feeder::injections_from(set, graph);
    const double lo = cfg.volt.v_min * cfg.volt.v_min - 1e-9;
    const double hi = cfg.volt.v_max * cfg.volt.v_max + 1e-9;
    std::vector<double> pn(graph.n_nodes), qn(graph.n_nodes);
    for (int s = 0; s < S && rep.voltage_ok; ++s)
        for (int t = 0; t < T && rep.voltage_ok; ++t) {
            for (int n = 0; n < graph.n_nodes; ++n) {
                pn[n] = inj.p_const(n, s, t);
                qn[n] = inj.q_const(n, s, t);
            }
            const feeder::FlowSolution fs = feeder::propagate_flows(graph, pn, qn, cfg.volt.v0);
            for (int n = 1; n < graph.n_nodes; ++n)
                if (fs.u_sq[n] < lo || fs.u_sq[n] > hi) {
                    rep.voltage_ok = false;
                    break;
                }
        }
    return rep;
}

EtsComparison run_all_ets(const ProsumerTraceSet& traces, const feeder::FeederGraph& graph,
                          const std::vector<double>& lambda_g, const CaseConfig& cfg) {
    const scenario::ScenarioSet set = training_scenarios(traces, cfg);
    const std::vector<tariff::TariffSchedule> tariffs = {
        tariff::derive_ces_price(lambda_g, tariff::Scheme::avg()),
        tariff::derive_ces_price(lambda_g, tariff::Scheme::scaled(cfg.ets2_delta)),
        tariff::derive_ces_price(lambda_g, tariff::Scheme::scaled(cfg.ets3_delta))};

    EtsComparison out;
    out.solutions.resize(tariffs.size());
    run_jobs(static_cast<int>(tariffs.size()), [&](int i) {
        out.solutions[i] = plan_on(set, graph, tariffs[i], cfg, default_options());
    });

    out.baseline = no_ces_baseline(set, graph, tariffs[0], cfg);
    const double base = out.baseline.opP;
    for (const PlanningSolution& sol : out.solutions) {
        EtsRow row;
        row.ets = sol.ets;
        row.provider_revenue_aud = -sol.f_opC;
        row.prosumer_cost_aud = sol.f_opP;
        if (base != 0.0) {
            row.provider_share = row.provider_revenue_aud / base;
            row.prosumer_share = (base - sol.f_opP) / base;
        }
        row.spread = std::fabs(row.provider_share - row.prosumer_share);
        out.rows.push_back(std::move(row));
    }
    out.most_equitable = 0;
    for (int i = 1; i < static_cast<int>(out.rows.size()); ++i)
        if (out.rows[i].spread < out.rows[out.most_equitable].spread) out.most_equitable = i;
    return out;
}

OosReport out_of_sample(const PlanningSolution& sol, const ProsumerTraceSet& traces,
                        const feeder::FeederGraph& graph, const tariff::TariffSchedule& tariff,
                        const CaseConfig& cfg, int n_oos) {
    if (n_oos < 1) throw ValidationError("out-of-sample scenario count must be >= 1");
    CaseConfig draw_cfg = cfg;
    draw_cfg.n_initial_scenarios = n_oos;
    const scenario::InitialScenarioSet init =
        scenario::generate_initial(traces, draw_cfg, rng::kStreamOutOfSample);

    OosReport rep;
    rep.n_oos = n_oos;
    rep.f_opP_training = sol.f_opP;
    rep.rows.resize(n_oos);

    run_jobs(n_oos, [&](int d) {
        const scenario::ScenarioSet one = scenario::single_scenario(init, d, traces.delta_t);
        model::BuiltModel bm = model::build(one, graph, tariff, cfg);
        for (const model::CandidateVars& cv : bm.vars.cand) {
            const bool here = cv.node == sol.node;
            milp::Column& a = bm.problem.cols[cv.a];
            milp::Column& ec = bm.problem.cols[cv.e_cap];
            milp::Column& pr = bm.problem.cols[cv.p_rated];
            a.lb = a.ub = here ? 1.0 : 0.0;
            ec.lb = ec.ub = here ? sol.capacity_kwh : 0.0;
            pr.lb = pr.ub = here ? sol.rated_kw : 0.0;
        }
        OosRow row;
        row.scenario = d;
        // Deterministic analogue of the staged operation problem: first the
        // provider's best cost under the pinned plan, then the prosumers'
        // cost with that optimum relaxed by the same width as in training.
        const milp::SolveResult r2 = milp::solve_milp(bm.problem, model::kOpC, default_options());
        if (r2.status == milp::SolveStatus::Optimal) {
            model::add_epsilon_row(bm.problem, model::kOpC, r2.objective, sol.eps2);
            const milp::SolveResult r = milp::solve_milp(bm.problem, model::kOpP, default_options());
            if (r.status == milp::SolveStatus::Optimal) {
                row.feasible = true;
                row.f_opP = r.objective;
                row.f_opC = bm.problem.eval_objective(model::kOpC, r.primal);
            }
        }
        rep.rows[d] = row;
    });

    for (const OosRow& row : rep.rows) {
        if (!row.feasible) continue;
        ++rep.n_feasible;
        rep.avg_opC += row.f_opC;
        rep.avg_opP += row.f_opP;
    }
    rep.n_infeasible = rep.n_oos - rep.n_feasible;
    if (rep.n_feasible > 0) {
        rep.avg_opC /= rep.n_feasible;
        rep.avg_opP /= rep.n_feasible;
    }
    rep.vss_percent = rep.n_feasible > 0 && rep.avg_opP != 0.0
                          ? std::fabs(rep.avg_opP - sol.f_opP) / std::fabs(rep.avg_opP) * 100.0
                          : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

ParetoResult pareto_sweep(const ProsumerTraceSet& traces, const feeder::FeederGraph& graph,
                          const tariff::TariffSchedule& tariff, const CaseConfig& cfg,
                          const std::vector<std::pair<double, double>>& grid) {
    if (grid.empty()) throw ValidationError("the relaxation grid must not be empty");
    const scenario::ScenarioSet set = training_scenarios(traces, cfg);
    const model::BuiltModel bm = model::build(set, graph, tariff, cfg);
    const milp::MilpProblem& base = bm.problem;
    const milp::SolverOptions opt = default_options();

    // Payoff table: each objective minimized alone, every objective
    // evaluated at each of the three optima.
    const char* names[3] = {model::kInv, model::kOpC, model::kOpP};
    std::array<milp::SolveResult, 3> pay;
    run_jobs(3, [&](int i) { pay[i] = milp::solve_milp(base, names[i], opt); });
    ParetoResult out;
    for (int i = 0; i < 3; ++i) {
        if (pay[i].status != milp::SolveStatus::Optimal)
            throw SolveFailure(std::string("single-objective solve of ") + names[i] + " ended " +
                               milp::to_string(pay[i].status));
        out.utopia[i] = pay[i].objective;
    }
    for (int k = 0; k < 3; ++k) {
        double worst = -milp::kInf;
        for (int i = 0; i < 3; ++i)
            worst = std::max(worst, base.eval_objective(names[k], pay[i].primal));
        out.nadir[k] = worst;
    }
    const double f_inv_star = pay[0].objective;

    // Stage-2 optima depend on eps1 only; cache them across the grid.
    std::vector<double> eps1s;
    for (const auto& [e1, e2] : grid)
        if (std::find(eps1s.begin(), eps1s.end(), e1) == eps1s.end()) eps1s.push_back(e1);
    std::map<double, double> opc_star;
    std::map<double, std::string> opc_err;
    {
        std::vector<milp::SolveResult> r2(eps1s.size());
        run_jobs(static_cast<int>(eps1s.size()), [&](int i) {
            milp::MilpProblem p2 = base;
            model::add_epsilon_row(p2, model::kInv, f_inv_star, eps1s[i]);
            r2[i] = milp::solve_milp(p2, model::kOpC, opt);
        });
        for (std::size_t i = 0; i < eps1s.size(); ++i) {
            if (r2[i].status == milp::SolveStatus::Optimal)
                opc_star[eps1s[i]] = r2[i].objective;
            else
                opc_err[eps1s[i]] = std::string("stage 2 (min f_opC) ended ") +
                                    milp::to_string(r2[i].status);
        }
    }

    out.points.resize(grid.size());
    run_jobs(static_cast<int>(grid.size()), [&](int i) {
        ParetoPoint pt;
        pt.eps1 = grid[i].first;
        pt.eps2 = grid[i].second;
        auto err = opc_err.find(pt.eps1);
        if (err != opc_err.end()) {
            pt.error = err->second;
            out.points[i] = std::move(pt);
            return;
        }
        milp::MilpProblem p3 = base;
        model::add_epsilon_row(p3, model::kInv, f_inv_star, pt.eps1);
        model::add_epsilon_row(p3, model::kOpC, opc_star.at(pt.eps1), pt.eps2);
        const milp::SolveResult r3 = milp::solve_milp(p3, model::kOpP, opt);
        if (r3.status == milp::SolveStatus::Optimal) {
            pt.ok = true;
            pt.f_inv = p3.eval_objective(model::kInv, r3.primal);
            pt.f_opC = p3.eval_objective(model::kOpC, r3.primal);
            pt.f_opP = p3.eval_objective(model::kOpP, r3.primal);
        } else {
            pt.error = std::string("stage 3 (min f_opP) ended ") + milp::to_string(r3.status);
        }
        out.points[i] = std::move(pt);
    });
    return out;
}

void write_solution_csv(const PlanningSolution& s, const std::string& path) {
    std::ofstream os = open_report(path);
    os << "key,value\n";
    os << "ets," << s.ets << "\n";
    os << "node," << s.node << "\n";
    os << "capacity_kwh," << csv::format_double(s.capacity_kwh) << "\n";
    os << "rated_kw," << csv::format_double(s.rated_kw) << "\n";
    os << "soc_init_kwh," << csv::format_double(s.soc_init_kwh) << "\n";
    os << "f_inv_aud," << csv::format_double(s.f_inv) << "\n";
    os << "f_opC_aud," << csv::format_double(s.f_opC) << "\n";
    os << "f_opP_aud," << csv::format_double(s.f_opP) << "\n";
    os << "f_inv_star_aud," << csv::format_double(s.f_inv_star) << "\n";
    os << "f_opC_star_aud," << csv::format_double(s.f_opC_star) << "\n";
    os << "eps1," << csv::format_double(s.eps1) << "\n";
    os << "eps2," << csv::format_double(s.eps2) << "\n";
    for (std::size_t i = 0; i < s.stages.size(); ++i) {
        const std::string pre = "stage" + std::to_string(i + 1) + "_";
        os << pre << "objective," << s.stages[i].objective << "\n";
        os << pre << "optimum_aud," << csv::format_double(s.stages[i].optimum) << "\n";
        os << pre << "gap," << csv::format_double(s.stages[i].gap) << "\n";
        os << pre << "nodes," << s.stages[i].stats.nodes << "\n";
        os << pre << "simplex_iterations," << s.stages[i].stats.simplex_iterations << "\n";
    }
    if (!os) throw Error("failed writing " + path);
}

void write_dispatch_csv(const PlanningSolution& s, const std::string& path) {
    std::ofstream os = open_report(path);
    const int S = s.e_ch.dim0(), T = s.e_ch.dim1(), U = s.e_grid.dim0();
    os << "# ets = " << s.ets << "\n";
    os << "# capacity_kwh = " << csv::format_double(s.capacity_kwh) << "\n";
    os << "# delta_t = " << csv::format_double(s.delta_t) << "\n";
    os << "node,s,t,omega,e_ch_kwh,e_dis_kwh,soc_kwh,grid_kwh,ces_kwh\n";
    for (int sc = 0; sc < S; ++sc)
        for (int t = 0; t < T; ++t) {
            double grid_sum = 0.0, ces_sum = 0.0;
            for (int u = 0; u < U; ++u) {
                grid_sum += s.e_grid(u, sc, t);
                ces_sum += s.e_ces(u, sc, t);
            }
            os << s.node << "," << sc << "," << t << "," << csv::format_double(s.omega(sc, t))
               << "," << csv::format_double(s.e_ch(sc, t)) << ","
               << csv::format_double(s.e_dis(sc, t)) << "," << csv::format_double(s.soc(sc, t))
               << "," << csv::format_double(grid_sum) << "," << csv::format_double(ces_sum)
               << "\n";
        }
    if (!os) throw Error("failed writing " + path);
}

void write_ets_report_csv(const EtsComparison& c, const std::string& path) {
    std::ofstream os = open_report(path);
    os << "# baseline_opP_aud = " << csv::format_double(c.baseline.opP) << "\n";
    os << "# baseline_voltage_ok = " << (c.baseline.voltage_ok ? 1 : 0) << "\n";
    if (c.most_equitable >= 0)
        os << "# most_equitable = " << c.rows[c.most_equitable].ets << "\n";
    os << "ets,provider_revenue_aud,prosumer_cost_aud,provider_share,prosumer_share,spread\n";
    for (const EtsRow& r : c.rows)
        os << r.ets << "," << csv::format_double(r.provider_revenue_aud) << ","
           << csv::format_double(r.prosumer_cost_aud) << "," << csv::format_double(r.provider_share)
           << "," << csv::format_double(r.prosumer_share) << "," << csv::format_double(r.spread)
           << "\n";
    if (!os) throw Error("failed writing " + path);
}

void write_oos_csv(const OosReport& r, const std::string& path) {
    std::ofstream os = open_report(path);
    os << "# n_oos = " << r.n_oos << "\n";
    os << "# n_feasible = " << r.n_feasible << "\n";
    os << "# n_infeasible = " << r.n_infeasible << "\n";
    os << "# avg_opC_aud = " << csv::format_double(r.avg_opC) << "\n";
    os << "# avg_opP_aud = " << csv::format_double(r.avg_opP) << "\n";
    os << "# f_opP_training_aud = " << csv::format_double(r.f_opP_training) << "\n";
    os << "# vss_percent = " << csv::format_double(r.vss_percent) << "\n";
    os << "scenario,feasible,f_opC_aud,f_opP_aud\n";
    for (const OosRow& row : r.rows) {
        os << row.scenario << "," << (row.feasible ? 1 : 0) << ",";
        if (row.feasible)
            os << csv::format_double(row.f_opC) << "," << csv::format_double(row.f_opP);
        else
            os << ",";
        os << "\n";
    }
    if (!os) throw Error("failed writing " + path);
}

void write_pareto_csv(const ParetoResult& r, const std::string& path) {
    std::ofstream os = open_report(path);
    const char* tag[3] = {"f_inv", "f_opC", "f_opP"};
    for (int i = 0; i < 3; ++i)
        os << "# utopia_" << tag[i] << "_aud = " << csv::format_double(r.utopia[i]) << "\n";
    for (int i = 0; i < 3; ++i)
        os << "# nadir_" << tag[i] << "_aud = " << csv::format_double(r.nadir[i]) << "\n";
    os << "eps1,eps2,status,f_inv_aud,f_opC_aud,f_opP_aud\n";
    for (const ParetoPoint& pt : r.points) {
        std::string status = pt.ok ? "ok" : pt.error;
        std::replace(status.begin(), status.end(), ',', ';');
        os << csv::format_double(pt.eps1) << "," << csv::format_double(pt.eps2) << "," << status
           << ",";
        if (pt.ok)
            os << csv::format_double(pt.f_inv) << "," << csv::format_double(pt.f_opC) << ","
               << csv::format_double(pt.f_opP);
        else
            os << ",,";
        os << "\n";
    }
    if (!os) throw Error("failed writing " + path);
}

}  // namespace cesplan::planner
