#include "cesplan/mps.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cesplan/csv.hpp"
#include "cesplan/errors.hpp"

namespace cesplan::mps {

using milp::Column;
using milp::kInf;
using milp::MilpProblem;
using milp::Row;
using milp::RowEntry;
using milp::RowSense;

namespace {

std::string rname(int i) {
    char b[16];
    std::snprintf(b, sizeof b, "R%07d", i + 1);
    return b;
}

std::string cname(int j) {
    char b[16];
    std::snprintf(b, sizeof b, "C%07d", j + 1);
    return b;
}

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

double num_at(const std::string& s, const std::string& path, int line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        fail_at(path, line, "bad numeric value '" + s + "'");
    return v;
}

// Row entries merged per column (duplicates summed, exact zeros dropped),
// listed in row order so the COLUMNS section is deterministic.
std::vector<std::vector<std::pair<int, double>>> column_entries(const MilpProblem& p) {
    std::vector<std::vector<std::pair<int, double>>> out(p.n_cols());
    for (int i = 0; i < p.n_rows(); ++i) {
        std::map<int, double> acc;
        for (const RowEntry& e : p.rows[i].entries) acc[e.col] += e.coef;
        for (const auto& [j, c] : acc)
            if (c != 0.0) out[j].push_back({i, c});
    }
    return out;
}

}  // namespace

void write_mps(const MilpProblem& p, const std::string& objective, const std::string& path,
               bool write_name_map) {
    const std::vector<double>& obj = p.objective(objective);
    const auto colent = column_entries(p);

    auto out = csv::open_out(path);
    out << "NAME          CESPLAN\n";
    out << "ROWS\n";
    out << " N  OBJ\n";
    for (int i = 0; i < p.n_rows(); ++i) {
        char sc = 'L';
        if (p.rows[i].sense == RowSense::EQ) sc = 'E';
        else if (p.rows[i].sense == RowSense::GE) sc = 'G';
        out << ' ' << sc << "  " << rname(i) << '\n';
    }

    out << "COLUMNS\n";
    bool in_int = false;
    for (int j = 0; j < p.n_cols(); ++j) {
        const Column& c = p.cols[j];
        if (c.integral && !in_int) {
            out << "    MARKER                 'MARKER'                 'INTORG'\n";
            in_int = true;
        } else if (!c.integral && in_int) {
            out << "    MARKER                 'MARKER'                 'INTEND'\n";
            in_int = false;
        }
        // Every column must appear at least once so the reader learns of it.
        if (obj[j] != 0.0 || colent[j].empty())
            out << "    " << pad(cname(j), 10) << pad("OBJ", 10) << csv::format_double(obj[j])
                << '\n';
        for (const auto& [i, coef] : colent[j])
            out << "    " << pad(cname(j), 10) << pad(rname(i), 10) << csv::format_double(coef)
                << '\n';
    }
    if (in_int) out << "    MARKER                 'MARKER'                 'INTEND'\n";

    out << "RHS\n";
    for (int i = 0; i < p.n_rows(); ++i)
        if (p.rows[i].rhs != 0.0)
            out << "    " << pad("RHS", 10) << pad(rname(i), 10)
                << csv::format_double(p.rows[i].rhs) << '\n';

    out << "BOUNDS\n";
    for (int j = 0; j < p.n_cols(); ++j) {
        const Column& c = p.cols[j];
        const std::string cn = pad(cname(j), 10);
        const std::string set = pad("BND", 10);
        if (c.lb == c.ub) {
            out << " FX " << set << cn << csv::format_double(c.lb) << '\n';
        } else if (c.integral && c.lb == 0.0 && c.ub == 1.0) {
            out << " BV " << set << cn << '\n';
        } else if (!std::isfinite(c.lb) && !std::isfinite(c.ub)) {
            out << " FR " << set << cn << '\n';
        } else {
            if (std::isfinite(c.lb)) out << " LO " << set << cn << csv::format_double(c.lb) << '\n';
            else out << " MI " << set << cn << '\n';
            if (std::isfinite(c.ub)) out << " UP " << set << cn << csv::format_double(c.ub) << '\n';
        }
    }
    out << "ENDATA\n";
    if (!out) throw Error("failed writing MPS file: " + path);

    if (write_name_map) {
        auto nm = csv::open_out(path + ".names.csv");
        nm << "mps_name,kind,original\n";
        nm << "OBJ,objective," << objective << '\n';
        for (int i = 0; i < p.n_rows(); ++i) nm << rname(i) << ",row," << p.rows[i].name << '\n';
        for (int j = 0; j < p.n_cols(); ++j) nm << cname(j) << ",column," << p.cols[j].name << '\n';
    }
}

MpsModel read_mps(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);

    MpsModel mdl;
    MilpProblem& p = mdl.problem;
    enum class Sec { None, Name, Rows, Cols, Rhs, Ranges, Bounds };
    Sec sec = Sec::None;
    std::unordered_map<std::string, int> rowidx, colidx;
    std::vector<std::pair<std::string, double>> ranges;
    bool in_int = false;
    bool ended = false;
    std::string line;
    int ln = 0;

    auto ensure_col = [&](const std::string& name) -> int {
        auto it = colidx.find(name);
        if (it != colidx.end()) {
            if (in_int) p.cols[it->second].integral = true;
            return it->second;
        }
        const int j = p.add_col(name, 0.0, kInf, in_int);
        colidx.emplace(name, j);
        return j;
    };

    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '*') continue;
        std::istringstream ss(line);
        std::vector<std::string> t;
        std::string w;
        while (ss >> w) t.push_back(w);
        if (t.empty()) continue;

        if (!std::isspace(static_cast<unsigned char>(line[0]))) {
            const std::string& s = t[0];
            if (s == "NAME") sec = Sec::Name;
            else if (s == "ROWS") sec = Sec::Rows;
            else if (s == "COLUMNS") sec = Sec::Cols;
            else if (s == "RHS") sec = Sec::Rhs;
            else if (s == "RANGES") sec = Sec::Ranges;
            else if (s == "BOUNDS") sec = Sec::Bounds;
            else if (s == "ENDATA") { ended = true; break; }
            else fail_at(path, ln, "unsupported MPS section '" + s + "'");
            continue;
        }

        switch (sec) {
            case Sec::Rows: {
                if (t.size() != 2) fail_at(path, ln, "ROWS record needs a sense and a name");
                const std::string& sense = t[0];
                const std::string& nm = t[1];
                if (sense == "N") {
                    if (!mdl.objective.empty()) fail_at(path, ln, "multiple objective (N) rows");
                    mdl.objective = nm;
                } else {
                    RowSense rs;
                    if (sense == "L") rs = RowSense::LE;
                    else if (sense == "G") rs = RowSense::GE;
                    else if (sense == "E") rs = RowSense::EQ;
                    else { fail_at(path, ln, "unknown row sense '" + sense + "'"); }
                    if (rowidx.count(nm)) fail_at(path, ln, "duplicate row '" + nm + "'");
                    rowidx.emplace(nm, p.add_row(nm, rs, 0.0, {}));
                }
                break;
            }
            case Sec::Cols: {
                bool marker = false;
                for (const std::string& tok : t)
                    if (tok == "'MARKER'") marker = true;
                if (marker) {
                    for (const std::string& tok : t) {
                        if (tok == "'INTORG'") in_int = true;
                        else if (tok == "'INTEND'") in_int = false;
                    }
                    break;
                }
                if (t.size() < 3 || t.size() % 2 == 0)
                    fail_at(path, ln, "COLUMNS record needs a column name plus row/value pairs");
                const int j = ensure_col(t[0]);
                for (std::size_t k = 1; k + 1 < t.size(); k += 2) {
                    const double v = num_at(t[k + 1], path, ln);
                    if (t[k] == mdl.objective) {
                        p.objective(mdl.objective)[j] += v;
                    } else {
                        auto it = rowidx.find(t[k]);
                        if (it == rowidx.end()) fail_at(path, ln, "unknown row '" + t[k] + "'");
                        p.rows[it->second].entries.push_back({j, v});
                    }
                }
                break;
            }
            case Sec::Rhs:
            case Sec::Ranges: {
                if (t.size() < 3 || t.size() % 2 == 0)
                    fail_at(path, ln, "record needs a set name plus row/value pairs");
                for (std::size_t k = 1; k + 1 < t.size(); k += 2) {
                    const double v = num_at(t[k + 1], path, ln);
                    if (sec == Sec::Rhs && t[k] == mdl.objective) {
                        // RHS on the objective row carries the negated constant.
                        mdl.objective_constant = -v;
                        continue;
                    }
                    auto it = rowidx.find(t[k]);
                    if (it == rowidx.end()) fail_at(path, ln, "unknown row '" + t[k] + "'");
                    if (sec == Sec::Rhs) p.rows[it->second].rhs = v;
                    else ranges.emplace_back(t[k], v);
                }
                break;
            }
            case Sec::Bounds: {
                if (t.size() < 3) fail_at(path, ln, "BOUNDS record too short");
                const std::string& bt = t[0];
                auto it = colidx.find(t[2]);
                if (it == colidx.end()) fail_at(path, ln, "bound for unknown column '" + t[2] + "'");
                Column& c = p.cols[it->second];
                const bool needs_value = bt == "LO" || bt == "UP" || bt == "FX" || bt == "LI" || bt == "UI";
                if (needs_value && t.size() < 4) fail_at(path, ln, "bound type " + bt + " needs a value");
                const double v = needs_value ? num_at(t[3], path, ln) : 0.0;
                if (bt == "LO") c.lb = v;
                else if (bt == "UP") c.ub = v;
                else if (bt == "FX") { c.lb = v; c.ub = v; }
                else if (bt == "FR") { c.lb = -kInf; c.ub = kInf; }
                else if (bt == "MI") c.lb = -kInf;
                else if (bt == "PL") c.ub = kInf;
                else if (bt == "BV") { c.lb = 0.0; c.ub = 1.0; c.integral = true; }
                else if (bt == "LI") { c.lb = v; c.integral = true; }
                else if (bt == "UI") { c.ub = v; c.integral = true; }
                else fail_at(path, ln, "unknown bound type '" + bt + "'");
                if (c.lb > c.ub) fail_at(path, ln, "bounds cross for column '" + t[2] + "'");
                break;
            }
            case Sec::Name:
                break;  // free-form model name continuation; ignored
            case Sec::None:
                fail_at(path, ln, "data before any section header");
        }
    }

    if (!ended) throw ParseError(path + ": missing ENDATA");
    if (mdl.objective.empty()) throw ParseError(path + ": no objective (N) row");
    p.objective(mdl.objective);  // materialize even when every coefficient is zero

    // A ranged row restricts both sides; express that as a row pair.
    for (const auto& [nm, r] : ranges) {
        const int i = rowidx.at(nm);
        const std::vector<RowEntry> ent = p.rows[i].entries;
        const double b = p.rows[i].rhs;
        const double a = std::fabs(r);
        switch (p.rows[i].sense) {
            case RowSense::LE:
                p.add_row(nm + "_rlo", RowSense::GE, b - a, ent);
                break;
            case RowSense::GE:
                p.add_row(nm + "_rhi", RowSense::LE, b + a, ent);
                break;
            case RowSense::EQ: {
                const double lo = b + std::min(r, 0.0);
                const double hi = b + std::max(r, 0.0);
                p.add_row(nm + "_rhi", RowSense::LE, hi, ent);
                p.rows[i].sense = RowSense::GE;
                p.rows[i].rhs = lo;
                break;
            }
        }
    }
    return mdl;
}

std::uint64_t problem_digest(const MilpProblem& p, const std::string& objective) {
    std::vector<double> s;
    s.reserve(3 * p.n_cols() + 4 * p.n_rows() + p.n_nonzeros() * 2 + 2);
    s.push_back(static_cast<double>(p.n_cols()));
    s.push_back(static_cast<double>(p.n_rows()));
    for (const Column& c : p.cols) {
        s.push_back(c.lb);
        s.push_back(c.ub);
        s.push_back(c.integral ? 1.0 : 0.0);
    }
    for (const Row& r : p.rows) {
        double sense = 0.0;
        if (r.sense == RowSense::EQ) sense = 1.0;
        else if (r.sense == RowSense::GE) sense = 2.0;
        s.push_back(sense);
        s.push_back(r.rhs);
        std::map<int, double> acc;
        for (const RowEntry& e : r.entries) acc[e.col] += e.coef;
        std::erase_if(acc, [](const auto& kv) { return kv.second == 0.0; });
        s.push_back(static_cast<double>(acc.size()));
        for (const auto& [j, c] : acc) {
            s.push_back(static_cast<double>(j));
            s.push_back(c);
        }
    }
    const std::vector<double>& obj = p.objective(objective);
    s.insert(s.end(), obj.begin(), obj.end());
    return csv::fnv1a(s);
}

}  // namespace cesplan::mps
