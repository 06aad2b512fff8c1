// milp.hpp
//
// Plain-data mixed-integer linear program container plus solver option /
// result types.  Rows are single-sense (<=, =, >=); two-sided restrictions
// are expressed as variable bounds or row pairs.  Objectives are named
// dense cost vectors over the columns so one model can carry the
// investment and both operating objectives side by side.

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cesplan/errors.hpp"

namespace cesplan::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LE, EQ, GE };

struct RowEntry {
    int col;
    double coef;
};

struct Row {
    std::string name;
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
    std::vector<RowEntry> entries;
};

struct Column {
    std::string name;
    double lb = 0.0;
    double ub = kInf;
    bool integral = false;
};

struct MilpProblem {
    std::vector<Column> cols;
    std::vector<Row> rows;
    // Objective name -> dense cost vector (resized with the columns).
    std::map<std::string, std::vector<double>> objectives;

    int n_cols() const { return static_cast<int>(cols.size()); }
    int n_rows() const { return static_cast<int>(rows.size()); }

    int add_col(std::string name, double lb, double ub, bool integral = false) {
        if (lb > ub) throw BuildError("column '" + name + "' has lb > ub");
        cols.push_back({std::move(name), lb, ub, integral});
        for (auto& [_, v] : objectives) v.resize(cols.size(), 0.0);
        return static_cast<int>(cols.size()) - 1;
    }

    int add_row(std::string name, RowSense sense, double rhs, std::vector<RowEntry> entries) {
        for (const RowEntry& e : entries)
            if (e.col < 0 || e.col >= n_cols())
                throw BuildError("row '" + name + "' references undefined column " + std::to_string(e.col));
        rows.push_back({std::move(name), sense, rhs, std::move(entries)});
        return static_cast<int>(rows.size()) - 1;
    }

    std::vector<double>& objective(const std::string& name) {
        auto [it, inserted] = objectives.try_emplace(name);
        if (inserted) it->second.assign(cols.size(), 0.0);
        return it->second;
    }

    const std::vector<double>& objective(const std::string& name) const {
        auto it = objectives.find(name);
        if (it == objectives.end()) throw BuildError("unknown objective '" + name + "'");
        return it->second;
    }

    double eval_objective(const std::string& name, std::span<const double> x) const {
        const std::vector<double>& c = objective(name);
        double acc = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) acc += c[j] * x[j];
        return acc;
    }

    static double eval_row(const Row& row, std::span<const double> x) {
        double acc = 0.0;
        for (const RowEntry& e : row.entries) acc += e.coef * x[e.col];
        return acc;
    }

    int n_integral() const {
        int n = 0;
        for (const Column& c : cols) n += c.integral ? 1 : 0;
        return n;
    }

    std::size_t n_nonzeros() const {
        std::size_t n = 0;
        for (const Row& r : rows) n += r.entries.size();
        return n;
    }
};

struct SolverOptions {
    double feas_tol = 1e-7;   // primal feasibility tolerance
    double int_tol = 1e-6;    // integrality tolerance
    double rel_gap = 1e-6;    // relative optimality gap proved before stopping
    long node_limit = 2'000'000;
    double time_limit_s = 0.0;  // 0 = no limit
    enum class Branching { MostFractional, PseudoCost };
    Branching branching = Branching::MostFractional;
    // Fractional variables whose name starts with one of these prefixes
    // are branched before any other (siting decisions first).
    std::vector<std::string> priority_prefixes{"A_"};
    // Optional coarse early-stop gap; when reached the status is GapLimit.
    std::optional<double> stop_gap;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, GapLimit, NodeLimit, TimeLimit, NumericError };

const char* to_string(SolveStatus s);

struct SolveStats {
    long simplex_iterations = 0;
    long nodes = 0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericError;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> primal;   // per column; empty when no incumbent exists
    double bound = -kInf;         // proven lower bound (minimization)
    double gap = kInf;            // |objective - bound| / max(1, |objective|)
    SolveStats stats;
    // Objective of each successive incumbent, recorded for determinism checks.
    std::vector<double> incumbents;

    bool has_solution() const { return !primal.empty(); }
};

// Solve the LP relaxation / the MILP, minimizing the named objective.
SolveResult solve_lp(const MilpProblem& p, const std::string& objective,
                     const SolverOptions& opt = {});
SolveResult solve_milp(const MilpProblem& p, const std::string& objective,
                       const SolverOptions& opt = {});

// Independent row/bound/integrality check used on every claimed-optimal
// solution; fills `msg` with the first violation when it returns false.
bool check_solution(const MilpProblem& p, std::span<const double> x, double feas_tol, double int_tol,
                    std::string* msg = nullptr);

// Write `variable,value` rows for a solved problem.
void write_solution_csv(const MilpProblem& p, const SolveResult& r, const std::string& path);

}  // namespace cesplan::milp
