#include "cesplan/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"
#include "cesplan/feeder.hpp"
#include "cesplan/ingest.hpp"
#include "cesplan/model.hpp"
#include "cesplan/mps.hpp"
#include "cesplan/planner.hpp"
#include "cesplan/scenario.hpp"
#include "cesplan/svg_plot.hpp"
#include "cesplan/tariff.hpp"

namespace cesplan::cli {

namespace {

namespace fs = std::filesystem;

// Flags shared by every model-building subcommand.
struct CommonArgs {
    std::string config;
    std::string traces;
    std::string feeder;
    std::string assignment;  // defaults to assignment.csv next to the feeder file
    std::string tariff;
    std::string out_dir = ".";
    std::vector<std::string> overrides;  // --set key=value
    int warn_binaries = 600;
};

void add_config_flags(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config,
                    "case configuration file (default: $CESPLAN_CONFIG, else built-in defaults)");
    cmd->add_option("--set", a.overrides, "config override key=value (beats the config file)");
}

void add_input_flags(CLI::App* cmd, CommonArgs& a, bool with_network) {
    add_config_flags(cmd, a);
    cmd->add_option("--traces", a.traces, "prosumer demand/PV trace CSV")->required();
    if (with_network) {
        cmd->add_option("--feeder", a.feeder, "feeder line list CSV")->required();
        cmd->add_option("--assignment", a.assignment,
                        "prosumer-to-node assignment CSV (default: assignment.csv next to --feeder)");
        cmd->add_option("--tariff", a.tariff, "grid tariff CSV (t,lambda_g_aud_per_kwh)")->required();
        cmd->add_option("--warn-binaries", a.warn_binaries,
                        "emit an export-mps hint when the model exceeds this many binaries");
    }
    cmd->add_option("--out-dir", a.out_dir, "directory for the report files (default: .)");
}

CaseConfig load_case(const CommonArgs& a) {
    std::string path = a.config;
    if (path.empty())
        if (const char* env = std::getenv("CESPLAN_CONFIG")) path = env;
    CaseConfig cfg = path.empty() ? CaseConfig{} : load_config(path);
    for (const std::string& kv : a.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ValidationError("--set expects key=value, got '" + kv + "'");
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate_config(cfg);
    return cfg;
}

std::string assignment_path(const CommonArgs& a) {
    if (!a.assignment.empty()) return a.assignment;
    return (fs::path(a.feeder).parent_path() / "assignment.csv").string();
}

// Repeat a daily tariff across the trace horizon when it is shorter.
std::vector<double> tile_tariff(std::vector<double> lambda, int horizon) {
    const int n = static_cast<int>(lambda.size());
    if (n == horizon) return lambda;
    if (n > 0 && horizon % n == 0) {
        std::vector<double> out;
        out.reserve(horizon);
        for (int t = 0; t < horizon; ++t) out.push_back(lambda[t % n]);
        return out;
    }
    throw ValidationError("tariff covers " + std::to_string(n) + " intervals but the horizon is " +
                          std::to_string(horizon) + " and is not a multiple of it");
}

struct LoadedCase {
    CaseConfig cfg;
    ProsumerTraceSet traces;
    feeder::FeederGraph graph;
    std::vector<double> lambda_g;
};

LoadedCase load_inputs(const CommonArgs& a) {
    LoadedCase lc;
    lc.cfg = load_case(a);
    lc.traces = load_traces(a.traces, lc.cfg.delta_t_hours);
    lc.graph = feeder::load_feeder(a.feeder, assignment_path(a), lc.traces.prosumer_ids);
    lc.lambda_g = tile_tariff(tariff::load_tariff_csv(a.tariff), lc.traces.horizon_hours);
    return lc;
}

// Binary count of the staged model: one siting binary per candidate plus
// one charging-mode binary per (candidate, scenario, interval).
void warn_if_large(const LoadedCase& lc, int threshold) {
    int n_cand = static_cast<int>(lc.cfg.candidate_nodes.size());
    if (n_cand == 0) n_cand = lc.graph.n_nodes - 1;
    const long n_bin =
        static_cast<long>(n_cand) * (1L + static_cast<long>(lc.cfg.n_reduced_scenarios) *
                                              lc.traces.horizon_hours);
    if (threshold > 0 && n_bin > threshold)
        std::cerr << "warning: the staged model carries " << n_bin << " binaries (> "
                  << threshold << "); the built-in solver may be slow — consider "
                     "'export-mps' and an external MILP solver\n";
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

std::string sanitize_label(std::string label) {
    for (char& c : label)
        if (c == ':' || c == '/') c = '_';
    return label;
}

void note_written(const fs::path& p) { std::cout << "wrote: " << p.string() << "\n"; }

void print_solution_line(const planner::PlanningSolution& s) {
    std::cout << "plan[" << s.ets << "]: node=" << s.node
              << " capacity_kwh=" << csv::format_double(s.capacity_kwh)
              << " rated_kw=" << csv::format_double(s.rated_kw)
              << " f_inv=" << csv::format_double(s.f_inv)
              << " f_opC=" << csv::format_double(s.f_opC)
              << " f_opP=" << csv::format_double(s.f_opP) << "\n";
}

// ---------------------------------------------------------------- commands

int cmd_gen_scenarios(const CommonArgs& a) {
    CaseConfig cfg = load_case(a);
    ProsumerTraceSet traces = load_traces(a.traces, cfg.delta_t_hours);
    scenario::ScenarioSet set = planner::training_scenarios(traces, cfg);
    const fs::path dir = ensure_out_dir(a.out_dir);
    scenario::write_scenarios_csv(set, traces.prosumer_ids, (dir / "scenarios.csv").string());
    scenario::write_omega_csv(set, (dir / "omega.csv").string());
    std::cout << "gen-scenarios: " << set.n_scenarios << " scenarios over "
              << traces.horizon_hours << " intervals\n";
    note_written(dir / "scenarios.csv");
    note_written(dir / "omega.csv");
    return 0;
}

int cmd_plan(const CommonArgs& a, const std::string& ets) {
    LoadedCase lc = load_inputs(a);
    warn_if_large(lc, a.warn_binaries);
    tariff::TariffSchedule sched = tariff::derive_ces_price(lc.lambda_g, tariff::parse_scheme(ets));
    planner::PlanningSolution sol = planner::plan(lc.traces, lc.graph, sched, lc.cfg);
    const fs::path dir = ensure_out_dir(a.out_dir);
    planner::write_solution_csv(sol, (dir / "solution.csv").string());
    planner::write_dispatch_csv(sol, (dir / "dispatch.csv").string());
    print_solution_line(sol);
    note_written(dir / "solution.csv");
    note_written(dir / "dispatch.csv");
    return 0;
}

int cmd_run_all(const CommonArgs& a) {
    LoadedCase lc = load_inputs(a);
    warn_if_large(lc, a.warn_binaries);
    planner::EtsComparison cmp = planner::run_all_ets(lc.traces, lc.graph, lc.lambda_g, lc.cfg);
    const fs::path dir = ensure_out_dir(a.out_dir);
    for (const planner::PlanningSolution& sol : cmp.solutions) {
        const std::string tag = sanitize_label(sol.ets);
        planner::write_solution_csv(sol, (dir / ("solution_" + tag + ".csv")).string());
        planner::write_dispatch_csv(sol, (dir / ("dispatch_" + tag + ".csv")).string());
        print_solution_line(sol);
        note_written(dir / ("solution_" + tag + ".csv"));
        note_written(dir / ("dispatch_" + tag + ".csv"));
    }
    planner::write_ets_report_csv(cmp, (dir / "ets_report.csv").string());
    if (cmp.most_equitable >= 0)
        std::cout << "most equitable scheme: " << cmp.rows[cmp.most_equitable].ets << "\n";
    note_written(dir / "ets_report.csv");
    return 0;
}

int cmd_oos(const CommonArgs& a, const std::string& ets, int n_oos) {
    LoadedCase lc = load_inputs(a);
    warn_if_large(lc, a.warn_binaries);
    tariff::TariffSchedule sched = tariff::derive_ces_price(lc.lambda_g, tariff::parse_scheme(ets));
    planner::PlanningSolution sol = planner::plan(lc.traces, lc.graph, sched, lc.cfg);
    const int n = n_oos > 0 ? n_oos : lc.cfg.n_oos;
    planner::OosReport rep = planner::out_of_sample(sol, lc.traces, lc.graph, sched, lc.cfg, n);
    const fs::path dir = ensure_out_dir(a.out_dir);
    planner::write_solution_csv(sol, (dir / "solution.csv").string());
    planner::write_oos_csv(rep, (dir / "oos.csv").string());
    print_solution_line(sol);
    std::cout << "oos: " << rep.n_feasible << "/" << rep.n_oos
              << " feasible, avg_opP=" << csv::format_double(rep.avg_opP)
              << " vss_percent=" << csv::format_double(rep.vss_percent) << "\n";
    note_written(dir / "solution.csv");
    note_written(dir / "oos.csv");
    return 0;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError(std::string("bad ") + what + " list entry '" + item + "'");
        }
    }
    if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
    return out;
}

int cmd_pareto(const CommonArgs& a, const std::string& ets, const std::string& eps1_list,
               const std::string& eps2_list) {
    LoadedCase lc = load_inputs(a);
    warn_if_large(lc, a.warn_binaries);
    tariff::TariffSchedule sched = tariff::derive_ces_price(lc.lambda_g, tariff::parse_scheme(ets));
    const std::vector<double> e1 =
        eps1_list.empty() ? std::vector<double>{lc.cfg.eps1} : parse_list(eps1_list, "eps1");
    const std::vector<double> e2 =
        eps2_list.empty() ? std::vector<double>{lc.cfg.eps2} : parse_list(eps2_list, "eps2");
    std::vector<std::pair<double, double>> grid;
    for (double x : e1)
        for (double y : e2) grid.emplace_back(x, y);
    planner::ParetoResult res = planner::pareto_sweep(lc.traces, lc.graph, sched, lc.cfg, grid);
    const fs::path dir = ensure_out_dir(a.out_dir);
    planner::write_pareto_csv(res, (dir / "pareto.csv").string());
    int ok = 0;
    for (const planner::ParetoPoint& pt : res.points) ok += pt.ok ? 1 : 0;
    std::cout << "pareto: " << ok << "/" << res.points.size() << " points solved\n";
    note_written(dir / "pareto.csv");
    return 0;
}

int cmd_export_mps(const CommonArgs& a, const std::string& ets, int stage, std::string out_path) {
    LoadedCase lc = load_inputs(a);
    tariff::TariffSchedule sched = tariff::derive_ces_price(lc.lambda_g, tariff::parse_scheme(ets));
    scenario::ScenarioSet set = planner::training_scenarios(lc.traces, lc.cfg);
    model::BuiltModel bm = model::build(set, lc.graph, sched, lc.cfg);
    const milp::SolverOptions opt = planner::default_options();
    // Later stages carry the relaxed bounds of the earlier optima, so those
    // stages must be solved here before their rows can be written out.
    if (stage >= 2) {
        milp::SolveResult r1 = milp::solve_milp(bm.problem, model::kInv, opt);
        if (r1.status != milp::SolveStatus::Optimal)
            throw SolveFailure(std::string("stage 1 (min f_inv) ended ") + milp::to_string(r1.status));
        model::add_epsilon_row(bm.problem, model::kInv, r1.objective, lc.cfg.eps1);
    }
    if (stage >= 3) {
        milp::SolveResult r2 = milp::solve_milp(bm.problem, model::kOpC, opt);
        if (r2.status != milp::SolveStatus::Optimal)
            throw SolveFailure(std::string("stage 2 (min f_opC) ended ") + milp::to_string(r2.status));
        model::add_epsilon_row(bm.problem, model::kOpC, r2.objective, lc.cfg.eps2);
    }
    const char* obj = stage == 1 ? model::kInv : stage == 2 ? model::kOpC : model::kOpP;
    if (out_path.empty()) {
        const fs::path dir = ensure_out_dir(a.out_dir);
        out_path = (dir / ("stage" + std::to_string(stage) + ".mps")).string();
    } else if (fs::path(out_path).has_parent_path()) {
        ensure_out_dir(fs::path(out_path).parent_path().string());
    }
    mps::write_mps(bm.problem, obj, out_path);
    std::cout << "export-mps: stage " << stage << " minimizes " << obj << " over "
              << bm.problem.n_cols() << " columns, " << bm.problem.n_rows() << " rows, "
              << bm.problem.n_integral() << " integral\n";
    note_written(out_path);
    note_written(out_path + ".names.csv");
    return 0;
}

int cmd_plot(const std::string& dispatch_path, int day, std::string out_path) {
    plot::DispatchData data = plot::load_dispatch_csv(dispatch_path);
    const std::string svg = plot::render_dispatch_svg(data, day);
    if (out_path.empty()) out_path = "dispatch_day" + std::to_string(day) + ".svg";
    std::ofstream os = csv::open_out(out_path);
    os << svg;
    os.flush();
    if (!os) throw Error("failed writing " + out_path);
    note_written(out_path);
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"community energy storage siting/sizing planner for radial LV feeders"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    CommonArgs gen_a, plan_a, all_a, oos_a, par_a, mps_a;
    std::string plan_ets = "avg", oos_ets = "avg", par_ets = "avg", mps_ets = "avg";
    int oos_n = 0;
    std::string par_eps1, par_eps2;
    int mps_stage = 3;
    std::string mps_out;
    std::string plot_dispatch, plot_out;
    int plot_day = 0;

    CLI::App* gen = app.add_subcommand("gen-scenarios",
                                       "sample load/PV scenarios, reduce them, write "
                                       "scenarios.csv and omega.csv");
    add_config_flags(gen, gen_a);
    gen->add_option("--traces", gen_a.traces, "prosumer demand/PV trace CSV")->required();
    gen->add_option("--out-dir", gen_a.out_dir, "directory for the report files (default: .)");

    CLI::App* plan = app.add_subcommand("plan",
                                        "three-stage siting/sizing solve for one trading "
                                        "scheme; writes solution.csv and dispatch.csv");
    add_input_flags(plan, plan_a, true);
    plan->add_option("--ets", plan_ets, "trading scheme: avg | scaled:<delta> (default avg)");

    CLI::App* all = app.add_subcommand("run-all",
                                       "plan under all three trading schemes on one shared "
                                       "scenario set; writes per-scheme reports and "
                                       "ets_report.csv");
    add_input_flags(all, all_a, true);

    CLI::App* oos = app.add_subcommand("oos",
                                       "plan, then re-solve operation on held-out scenarios "
                                       "with the plan pinned; writes oos.csv");
    add_input_flags(oos, oos_a, true);
    oos->add_option("--ets", oos_ets, "trading scheme: avg | scaled:<delta> (default avg)");
    oos->add_option("--n-oos", oos_n, "held-out scenario count (default: config n_oos)");

    CLI::App* par = app.add_subcommand("pareto",
                                       "staged solves over a grid of relaxation widths; "
                                       "writes pareto.csv");
    add_input_flags(par, par_a, true);
    par->add_option("--ets", par_ets, "trading scheme: avg | scaled:<delta> (default avg)");
    par->add_option("--eps1", par_eps1, "comma-separated investment relaxation widths");
    par->add_option("--eps2", par_eps2, "comma-separated provider-cost relaxation widths");

    CLI::App* mps = app.add_subcommand("export-mps",
                                       "write one staged problem as an MPS file (earlier "
                                       "stages are solved to place their bound rows)");
    add_input_flags(mps, mps_a, true);
    mps->add_option("--ets", mps_ets, "trading scheme: avg | scaled:<delta> (default avg)");
    mps->add_option("--stage", mps_stage, "stage to export: 1 (f_inv), 2 (f_opC), 3 (f_opP)")
        ->check(CLI::Range(1, 3));
    mps->add_option("--out", mps_out, "output path (default: <out-dir>/stage<N>.mps)");

    CLI::App* plt = app.add_subcommand("plot",
                                       "render one day of a dispatch.csv as a deterministic "
                                       "SVG (grid trade, CES trade, state of charge)");
    plt->add_option("--dispatch", plot_dispatch, "dispatch CSV from plan/run-all")->required();
    plt->add_option("--day", plot_day, "day index within the horizon (default 0)");
    plt->add_option("--out", plot_out, "output path (default: dispatch_day<N>.svg)");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (app.got_subcommand(gen)) return cmd_gen_scenarios(gen_a);
        if (app.got_subcommand(plan)) return cmd_plan(plan_a, plan_ets);
        if (app.got_subcommand(all)) return cmd_run_all(all_a);
        if (app.got_subcommand(oos)) return cmd_oos(oos_a, oos_ets, oos_n);
        if (app.got_subcommand(par)) return cmd_pareto(par_a, par_ets, par_eps1, par_eps2);
        if (app.got_subcommand(mps)) return cmd_export_mps(mps_a, mps_ets, mps_stage, mps_out);
        if (app.got_subcommand(plt)) return cmd_plot(plot_dispatch, plot_day, plot_out);
        std::cerr << "error: no subcommand selected\n\n" << app.help() << std::flush;
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const TopologyError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const DomainError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const BuildError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 4;
    } catch (const SolveFailure& e) {
        const std::string msg = e.what();
        std::cerr << "solve failure: " << msg << "\n";
        return msg.find("limit") != std::string::npos ? 6 : 5;
    } catch (const Error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 7;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cesplan::cli
