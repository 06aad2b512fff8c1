#include "cesplan/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan::plot {

namespace {

std::string num(double v, const char* fmt = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    // Avoid the two spellings of zero so outputs stay canonical.
    std::string s(buf);
    if (s == "-0" || s == "-0.0" || s == "-0.00") s.erase(s.begin());
    return s;
}

// Largest "nice" step (1/2/5 times a power of ten) giving at most n ticks.
double nice_step(double range, int n) {
    if (!(range > 0.0)) return 1.0;
    const double raw = range / n;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag * (1.0 + 1e-12)) return m * mag;
    return 10.0 * mag;
}

}  // namespace

DispatchData load_dispatch_csv(const std::string& path) {
    csv::Reader in(path);
    DispatchData data;
    std::vector<std::string> f;
    bool header_seen = false;
    while (in.next(f)) {
        if (!header_seen) {
            header_seen = true;
            if (!f.empty() && f[0] == "node") continue;  // header row
        }
        if (f.size() != 9) in.fail("expected 9 columns: node,s,t,omega,e_ch_kwh,e_dis_kwh,soc_kwh,grid_kwh,ces_kwh");
        DispatchRow r;
        r.node = static_cast<int>(in.to_int(f[0], "node"));
        r.s = static_cast<int>(in.to_int(f[1], "s"));
        r.t = static_cast<int>(in.to_int(f[2], "t"));
        r.omega = in.to_double(f[3], "omega");
        r.e_ch_kwh = in.to_double(f[4], "e_ch_kwh");
        r.e_dis_kwh = in.to_double(f[5], "e_dis_kwh");
        r.soc_kwh = in.to_double(f[6], "soc_kwh");
        r.grid_kwh = in.to_double(f[7], "grid_kwh");
        r.ces_kwh = in.to_double(f[8], "ces_kwh");
        data.rows.push_back(r);
    }
    for (const auto& [key, val] : in.directives()) {
        if (key == "delta_t") data.delta_t = std::stod(val);
        else if (key == "capacity_kwh") data.capacity_kwh = std::stod(val);
        else if (key == "ets") data.ets = val;
    }
    if (!(data.delta_t > 0.0)) throw ParseError(path + ": non-positive delta_t directive");
    return data;
}

std::string render_dispatch_svg(const DispatchData& data, int day) {
    if (day < 0) throw DomainError("day index must be non-negative");
    const double dt = data.delta_t;
    const int ipd = std::max(1, static_cast<int>(std::lround(24.0 / dt)));
    const int t0 = day * ipd;

    // omega-weighted average per interval of the day, summed over nodes.
    std::map<int, double> grid, ces, soc;
    for (const DispatchRow& r : data.rows) {
        if (r.t < t0 || r.t >= t0 + ipd) continue;
        const int i = r.t - t0;
        grid[i] += r.omega * r.grid_kwh;
        ces[i] += r.omega * r.ces_kwh;
        soc[i] += r.omega * r.soc_kwh;
    }
    if (grid.empty()) throw DomainError("dispatch has no rows for day " + std::to_string(day));

    double lo = 0.0, hi = 0.0;
    for (const auto& m : {grid, ces, soc})
        for (const auto& [i, v] : m) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    // Fixed geometry: 960x540 view box with a 70/20/30/60 margin frame.
    const double x0 = 70.0, x1 = 940.0, y0 = 30.0, y1 = 480.0;
    const double hours = ipd * dt;
    auto X = [&](double h) { return x0 + (x1 - x0) * h / hours; };
    auto Y = [&](double v) { return y0 + (y1 - y0) * (hi - v) / (hi - lo); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 540\" "
           "font-family=\"monospace\" font-size=\"12\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"540\" fill=\"white\"/>\n";

    // Axis ticks and grid lines.
    const double ystep = nice_step(hi - lo, 8);
    for (double v = std::ceil(lo / ystep) * ystep; v <= hi + 1e-9 * ystep; v += ystep) {
        const double y = Y(v);
        out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x1)
            << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << num(x0 - 8.0) << "\" y=\"" << num(y + 4.0)
            << "\" text-anchor=\"end\">" << num(v, "%.6g") << "</text>\n";
    }
    const double xstep = nice_step(hours, 12);
    for (double h = 0.0; h <= hours + 1e-9; h += xstep) {
        const double x = X(h);
        out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x)
            << "\" y2=\"" << num(y1 + 6.0) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(x) << "\" y=\"" << num(y1 + 22.0)
            << "\" text-anchor=\"middle\">" << num(h, "%.6g") << "</text>\n";
    }

    // Frame and axis titles.
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0)
        << "\" height=\"" << num(y1 - y0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num((x0 + x1) / 2.0) << "\" y=\"" << num(y1 + 44.0)
        << "\" text-anchor=\"middle\">hour of day " << day << "</text>\n";
    out << "<text x=\"16\" y=\"" << num((y0 + y1) / 2.0) << "\" transform=\"rotate(-90 16 "
        << num((y0 + y1) / 2.0) << ")\" text-anchor=\"middle\">kWh</text>\n";

    // Zero line when the range straddles it.
    if (lo < 0.0 && hi > 0.0)
        out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(Y(0.0)) << "\" x2=\"" << num(x1)
            << "\" y2=\"" << num(Y(0.0)) << "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";

    struct Series {
        const std::map<int, double>* vals;
        const char* color;
        const char* label;
    };
    const Series series[3] = {{&grid, "#1f77b4", "prosumer-grid trade"},
                              {&ces, "#d62728", "prosumer-CES trade"},
                              {&soc, "#2ca02c", "state of charge"}};
    for (const Series& sr : series) {
        out << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"1.8\" points=\"";
        bool first = true;
        for (const auto& [i, v] : *sr.vals) {
            if (!first) out << ' ';
            first = false;
            out << num(X((i + 0.5) * dt)) << ',' << num(Y(v));
        }
        out << "\"/>\n";
    }

    // Legend, top-left inside the frame.
    double lx = x0 + 12.0, ly = y0 + 16.0;
    for (const Series& sr : series) {
        out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4.0) << "\" x2=\""
            << num(lx + 22.0) << "\" y2=\"" << num(ly - 4.0) << "\" stroke=\"" << sr.color
            << "\" stroke-width=\"1.8\"/>\n";
        out << "<text x=\"" << num(lx + 28.0) << "\" y=\"" << num(ly) << "\">" << sr.label
            << "</text>\n";
        ly += 16.0;
    }
    if (!data.ets.empty())
        out << "<text x=\"" << num(x1) << "\" y=\"" << num(y0 - 8.0)
            << "\" text-anchor=\"end\">scheme " << data.ets << "</text>\n";

    out << "</svg>\n";
    return out.str();
}

}  // namespace cesplan::plot
