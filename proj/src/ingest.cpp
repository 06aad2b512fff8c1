#include "cesplan/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan {

double CaseConfig::annuity_factor() const {
    const double d = fin.discount_rate;
    const double tau = fin.lifetime_years;
    if (d == 0.0) return 1.0 / tau;  // zero-interest limit of the annuity
    const double g = std::pow(1.0 + d, tau);
    return d * g / (g - 1.0);
}

double CaseConfig::annualization_for(int horizon_hours) const {
    if (annualization_factor) return *annualization_factor;
    return 8760.0 / static_cast<double>(horizon_hours);
}

ProsumerTraceSet load_traces(const std::string& path, double delta_t) {
    if (delta_t <= 0.0) throw ValidationError("delta_t must be positive");
    csv::Reader rd(path);
    std::vector<std::string> f;

    // First pass happens in-memory: collect rows, discover ids and horizon.
    struct Row {
        int prosumer;
        int t;
        double load, reactive, pv;
        int line;
    };
    std::vector<Row> rows;
    std::map<std::string, int> id_index;
    std::vector<std::string> ids;
    int max_t = -1;
    bool header_seen = false;

    while (rd.next(f)) {
        if (!header_seen) {
            header_seen = true;
            if (f.size() >= 1 && f[0] == "prosumer") {
                if (f.size() != 5 || f[1] != "t" || f[2] != "load_kwh" || f[3] != "reactive_kvarh" ||
                    f[4] != "pv_kwh")
                    rd.fail("expected header prosumer,t,load_kwh,reactive_kvarh,pv_kwh");
                continue;
            }
            rd.fail("missing header row (expected prosumer,t,load_kwh,reactive_kvarh,pv_kwh)");
        }
        if (f.size() != 5) rd.fail("expected 5 fields, got " + std::to_string(f.size()));
        Row r;
        auto it = id_index.find(f[0]);
        if (it == id_index.end()) {
            it = id_index.emplace(f[0], static_cast<int>(ids.size())).first;
            ids.push_back(f[0]);
        }
        r.prosumer = it->second;
        r.t = static_cast<int>(rd.to_int(f[1], "t"));
        r.load = rd.to_double(f[2], "load_kwh");
        r.reactive = rd.to_double(f[3], "reactive_kvarh");
        r.pv = rd.to_double(f[4], "pv_kwh");
        r.line = rd.line();
        if (r.t < 0) rd.fail("t must be non-negative");
        if (r.load < 0.0) rd.fail("load_kwh must be non-negative");
        if (r.pv < 0.0) rd.fail("pv_kwh must be non-negative");
        max_t = std::max(max_t, r.t);
        rows.push_back(r);
    }
    if (rows.empty()) throw ValidationError(path + ": no trace rows");

    const int horizon = max_t + 1;
    if (horizon % 24 != 0)
        throw ValidationError(path + ": horizon " + std::to_string(horizon) +
                              " h is not a multiple of 24");
    const int n = static_cast<int>(ids.size());

    ProsumerTraceSet ts;
    ts.prosumer_ids = ids;
    ts.horizon_hours = horizon;
    ts.delta_t = delta_t;
    ts.mu_load = Grid2(n, horizon);
    ts.mu_reactive = Grid2(n, horizon);
    ts.mu_pv = Grid2(n, horizon);

    Grid2T<char> seen(n, horizon, 0);
    for (const Row& r : rows) {
        if (r.t >= horizon) continue;  // unreachable; horizon derives from max_t
        if (seen(r.prosumer, r.t))
            throw ValidationError(path + ":" + std::to_string(r.line) + ": duplicate cell for prosumer '" +
                                  ids[r.prosumer] + "' t=" + std::to_string(r.t));
        seen(r.prosumer, r.t) = 1;
        ts.mu_load(r.prosumer, r.t) = r.load;
        ts.mu_reactive(r.prosumer, r.t) = r.reactive;
        ts.mu_pv(r.prosumer, r.t) = r.pv;
    }
    for (int u = 0; u < n; ++u)
        for (int t = 0; t < horizon; ++t)
            if (!seen(u, t))
                throw ValidationError(path + ": missing cell for prosumer '" + ids[u] + "' t=" +
                                      std::to_string(t));
    return ts;
}

void save_traces(const ProsumerTraceSet& ts, const std::string& path) {
    std::ofstream out = csv::open_out(path);
    out << "prosumer,t,load_kwh,reactive_kvarh,pv_kwh\n";
    for (int u = 0; u < ts.n_prosumers(); ++u)
        for (int t = 0; t < ts.horizon_hours; ++t)
            out << ts.prosumer_ids[u] << ',' << t << ',' << csv::format_double(ts.mu_load(u, t)) << ','
                << csv::format_double(ts.mu_reactive(u, t)) << ',' << csv::format_double(ts.mu_pv(u, t))
                << '\n';
    if (!out) throw Error("write failed: " + path);
}

namespace {

// Single definition of every recognized key; shared by the parser and by
// apply_override so the two can never drift apart.
void set_key(CaseConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
    auto bad = [&](const std::string& msg) -> void { throw ParseError(where + ": " + msg); };

    auto as_double = [&]() -> double {
        double v = 0.0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size())
            bad("bad numeric value for " + key + ": '" + value + "'");
        return v;
    };
    auto as_int = [&]() -> long {
        long v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size())
            bad("bad integer value for " + key + ": '" + value + "'");
        return v;
    };

    if (key == "sigma_fraction") cfg.sigma_fraction = as_double();
    else if (key == "n_initial_scenarios") cfg.n_initial_scenarios = static_cast<int>(as_int());
    else if (key == "n_reduced_scenarios") cfg.n_reduced_scenarios = static_cast<int>(as_int());
    else if (key == "rng_seed") cfg.rng_seed = static_cast<std::uint64_t>(as_int());
    else if (key == "p_max_kw") cfg.ces.p_max_kw = as_double();
    else if (key == "e_min_kwh") cfg.ces.e_min_kwh = as_double();
    else if (key == "e_max_kwh") cfg.ces.e_max_kwh = as_double();
    else if (key == "mu_ch") cfg.eff.mu_ch = as_double();
    else if (key == "mu_dis") cfg.eff.mu_dis = as_double();
    else if (key == "sigma_lo") cfg.soc.sigma_lo = as_double();
    else if (key == "sigma_hi") cfg.soc.sigma_hi = as_double();
    else if (key == "theta_kwh") cfg.theta_kwh = as_double();
    else if (key == "v0_pu") cfg.volt.v0 = as_double();
    else if (key == "v_min_pu") cfg.volt.v_min = as_double();
    else if (key == "v_max_pu") cfg.volt.v_max = as_double();
    else if (key == "discount_rate") cfg.fin.discount_rate = as_double();
    else if (key == "lifetime_years") cfg.fin.lifetime_years = as_double();
    else if (key == "cost_per_kw") cfg.fin.cost_per_kw = as_double();
    else if (key == "cost_per_kwh") cfg.fin.cost_per_kwh = as_double();
    else if (key == "eps1") cfg.eps1 = as_double();
    else if (key == "eps2") cfg.eps2 = as_double();
    else if (key == "annualization_factor") cfg.annualization_factor = as_double();
    else if (key == "delta_t_hours") cfg.delta_t_hours = as_double();
    else if (key == "n_oos") cfg.n_oos = static_cast<int>(as_int());
    else if (key == "ets2_delta") cfg.ets2_delta = as_double();
    else if (key == "ets3_delta") cfg.ets3_delta = as_double();
    else if (key == "candidate_nodes") {
        cfg.candidate_nodes.clear();
        std::size_t start = 0;
        while (start <= value.size()) {
            std::size_t pos = value.find(',', start);
            std::string item = value.substr(start, pos == std::string::npos ? pos : pos - start);
            std::string_view sv = csv::Reader::trim(item);
            if (!sv.empty()) {
                long v = 0;
                auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
                if (ec != std::errc() || p != sv.data() + sv.size())
                    bad("bad node id in candidate_nodes: '" + std::string(sv) + "'");
                cfg.candidate_nodes.push_back(static_cast<int>(v));
            }
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
    } else {
        bad("unknown config key '" + key + "'");
    }
}

}  // namespace

CaseConfig parse_config(std::istream& in, const std::string& name) {
    CaseConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view sv = csv::Reader::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(name + ":" + std::to_string(line_no) + ": expected 'key = value'");
        std::string key(csv::Reader::trim(sv.substr(0, eq)));
        std::string value(csv::Reader::trim(sv.substr(eq + 1)));
        set_key(cfg, key, value, name + ":" + std::to_string(line_no));
    }
    validate_config(cfg);
    return cfg;
}

CaseConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    return parse_config(in, path);
}

void apply_override(CaseConfig& cfg, const std::string& key, const std::string& value) {
    set_key(cfg, key, value, "override " + key);
}

void validate_config(const CaseConfig& cfg) {
    auto fail = [](const std::string& msg) -> void { throw ValidationError("config: " + msg); };
    if (cfg.sigma_fraction < 0.0) fail("sigma_fraction must be >= 0");
    if (cfg.n_initial_scenarios < 1) fail("n_initial_scenarios must be >= 1");
    if (cfg.n_reduced_scenarios < 1) fail("n_reduced_scenarios must be >= 1");
    if (cfg.n_reduced_scenarios > cfg.n_initial_scenarios)
        fail("n_reduced_scenarios must not exceed n_initial_scenarios");
    if (cfg.ces.p_max_kw <= 0.0) fail("p_max_kw must be positive");
    if (cfg.ces.e_min_kwh < 0.0) fail("e_min_kwh must be non-negative");
    if (cfg.ces.e_min_kwh > cfg.ces.e_max_kwh) fail("e_min_kwh must not exceed e_max_kwh");
    if (!(cfg.eff.mu_ch > 0.0 && cfg.eff.mu_ch <= 1.0)) fail("mu_ch must lie in (0, 1]");
    if (!(cfg.eff.mu_dis > 0.0 && cfg.eff.mu_dis <= 1.0)) fail("mu_dis must lie in (0, 1]");
    if (!(cfg.soc.sigma_lo >= 0.0 && cfg.soc.sigma_lo < cfg.soc.sigma_hi && cfg.soc.sigma_hi <= 1.0))
        fail("soc bounds must satisfy 0 <= sigma_lo < sigma_hi <= 1");
    if (cfg.theta_kwh <= 0.0) fail("theta_kwh must be positive");
    if (!(cfg.volt.v_min < cfg.volt.v0 && cfg.volt.v0 < cfg.volt.v_max))
        fail("voltage bounds must satisfy v_min < v0 < v_max");
    if (cfg.volt.v_min <= 0.0) fail("v_min_pu must be positive");
    if (cfg.fin.discount_rate < 0.0) fail("discount_rate must be >= 0");
    if (cfg.fin.lifetime_years <= 0.0) fail("lifetime_years must be positive");
    if (cfg.fin.cost_per_kw < 0.0 || cfg.fin.cost_per_kwh < 0.0) fail("unit costs must be >= 0");
    if (cfg.eps1 < 0.0 || cfg.eps2 < 0.0) fail("eps1/eps2 must be >= 0");
    if (cfg.annualization_factor && *cfg.annualization_factor <= 0.0)
        fail("annualization_factor must be positive");
    if (cfg.delta_t_hours <= 0.0) fail("delta_t_hours must be positive");
    if (cfg.n_oos < 1) fail("n_oos must be >= 1");
    if (cfg.ets2_delta <= 0.0 || cfg.ets3_delta <= 0.0) fail("price scales must be positive");
}

}  // namespace cesplan
