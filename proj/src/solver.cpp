// Branch & bound on top of the bounded simplex in lp_core.
//
// Best-first search ordered by (relaxation bound, creation order); each node
// re-solves the relaxation warm from its parent's basis after tightening one
// column's bounds.  A rounding pass and a most-integral-first dive at the
// root seed the incumbent so pruning starts early.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "cesplan/csv.hpp"
#include "cesplan/milp.hpp"
#include "lp_core.hpp"

namespace cesplan::milp {

using detail::Basis;
using detail::LpCore;
using detail::LpResult;
using detail::LpStatus;

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::GapLimit: return "gap_limit";
        case SolveStatus::NodeLimit: return "node_limit";
        case SolveStatus::TimeLimit: return "time_limit";
        case SolveStatus::NumericError: return "numeric_error";
    }
    return "unknown";
}

namespace {

struct BoundChange {
    int col;
    double lb, ub;
};

struct Node {
    double bound = -kInf;
    long seq = 0;
    std::vector<BoundChange> changes;
    std::shared_ptr<const Basis> warm;
    // How this node was created, for pseudo-cost bookkeeping.
    int branch_col = -1;
    double branch_frac = 0.0;
    bool branch_up = false;
    double parent_obj = 0.0;
};

struct NodeOrder {
    // Pop order: best bound; among equal bounds the deepest, newest node
    // first.  Objectives touching few columns make whole subtrees share one
    // bound, and plunging there reaches integral leaves instead of sweeping
    // the tree breadth-first.
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.changes.size() != b.changes.size()) return a.changes.size() < b.changes.size();
        return a.seq < b.seq;
    }
};

double int_dist(double v) {
    const double f = v - std::floor(v);
    return std::min(f, 1.0 - f);
}

class BranchAndBound {
public:
    BranchAndBound(const MilpProblem& p, const std::string& objective, const SolverOptions& opt)
        : p_(p),
          opt_(opt),
          obj_(p.objective(objective)),
          core_(p, obj_, opt),
          t0_(std::chrono::steady_clock::now()) {
        for (int j = 0; j < p.n_cols(); ++j)
            if (p.cols[j].integral) int_cols_.push_back(j);
        up_sum_.assign(p.n_cols(), 0.0);
        up_cnt_.assign(p.n_cols(), 0);
        dn_sum_.assign(p.n_cols(), 0.0);
        dn_cnt_.assign(p.n_cols(), 0);
    }

    SolveResult run();

private:
    const MilpProblem& p_;
    SolverOptions opt_;
    std::vector<double> obj_;
    LpCore core_;
    std::chrono::steady_clock::time_point t0_;

    std::vector<int> int_cols_;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
    long seq_ = 0;
    long nodes_ = 0;
    long lp_iters_ = 0;

    SolveResult res_;
    double incumbent_ = kInf;
    double closed_min_ = kInf;  // min proven bound over fathomed subtrees
    bool have_incumbent_ = false;

    std::vector<double> up_sum_, dn_sum_;
    std::vector<long> up_cnt_, dn_cnt_;
    const bool trace_ = std::getenv("CESPLAN_MILP_TRACE") != nullptr;

    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }
    bool timed_out() const { return opt_.time_limit_s > 0.0 && elapsed_s() > opt_.time_limit_s; }

    double prune_slack() const {
        return std::max(1e-9, opt_.rel_gap * std::max(1.0, std::fabs(incumbent_)));
    }

    void apply(const Node& node) {
        core_.reset_col_bounds();
        for (const BoundChange& c : node.changes) core_.set_col_bounds(c.col, c.lb, c.ub);
    }

    LpResult solve_node(const Node& node) {
        apply(node);
        LpResult r = core_.solve(node.warm.get());
        lp_iters_ += r.iterations;
        if ((r.status == LpStatus::Numeric || r.status == LpStatus::Unbounded) && node.warm) {
            // One cold retry before believing a warm-start artifact.
            r = core_.solve(nullptr);
            lp_iters_ += r.iterations;
        }
        return r;
    }

    std::vector<int> fractional(const std::vector<double>& x) const {
        // Columns already fixed by branching cannot be tightened further;
        // any residual drift on them is LP tolerance dust, not a branching
        // target (it would recreate the parent node verbatim).
        std::vector<int> out;
        for (int j : int_cols_) {
            const double lo = core_.col_lb(j), hi = core_.col_ub(j);
            if (lo >= hi) continue;
            if (int_dist(std::clamp(x[j], lo, hi)) > opt_.int_tol) out.push_back(j);
        }
        return out;
    }

    int pick_branch(const std::vector<int>& frac, const std::vector<double>& x) const;
    bool try_incumbent(const std::vector<double>& x_full, const Basis* warm = nullptr);
    void run_heuristics(const Node& root, const LpResult& root_lp);
    void dive(const Node& from, const LpResult& from_lp);
    SolveResult finish(SolveStatus limit_status);
};

int BranchAndBound::pick_branch(const std::vector<int>& frac, const std::vector<double>& x) const {
    // Priority prefixes win first, in the order given.
    for (const std::string& pre : opt_.priority_prefixes) {
        int best = -1;
        double best_d = -1.0;
        for (int j : frac) {
            if (p_.cols[j].name.rfind(pre, 0) != 0) continue;
            const double d = int_dist(x[j]);
            if (d > best_d + 1e-12) {
                best = j;
                best_d = d;
            }
        }
        if (best >= 0) return best;
    }

    if (opt_.branching == SolverOptions::Branching::PseudoCost) {
        long total_cnt = 0;
        double total_sum = 0.0;
        for (int j : int_cols_) {
            total_cnt += up_cnt_[j] + dn_cnt_[j];
            total_sum += up_sum_[j] + dn_sum_[j];
        }
        if (total_cnt > 0) {
            const double global_avg = total_sum / static_cast<double>(total_cnt);
            int best = -1;
            double best_score = -1.0;
            for (int j : frac) {
                const double up = up_cnt_[j] > 0 ? up_sum_[j] / up_cnt_[j] : global_avg;
                const double dn = dn_cnt_[j] > 0 ? dn_sum_[j] / dn_cnt_[j] : global_avg;
                const double f = x[j] - std::floor(x[j]);
                const double score = std::max(up * (1.0 - f), 1e-8) * std::max(dn * f, 1e-8);
                if (score > best_score * (1.0 + 1e-12) + 1e-300) {
                    best = j;
                    best_score = score;
                }
            }
            if (best >= 0) return best;
        }
    }

    // Most fractional, ties to the lowest column index.
    int best = -1;
    double best_d = -1.0;
    for (int j : frac) {
        const double d = int_dist(x[j]);
        if (d > best_d + 1e-12) {
            best = j;
            best_d = d;
        }
    }
    return best;
}

bool BranchAndBound::try_incumbent(const std::vector<double>& x_full, const Basis* warm) {
    std::vector<double> x(x_full.begin(), x_full.begin() + p_.n_cols());
    for (int j : int_cols_) {
        double v = std::round(x[j]);
        const Column& c = p_.cols[j];
        if (v < c.lb) v = std::ceil(c.lb);
        if (v > c.ub) v = std::floor(c.ub);
        x[j] = v;
    }
    if (!check_solution(p_, x, 10.0 * opt_.feas_tol, opt_.int_tol)) {
        // Rounding can break rows whose coefficients dwarf int_tol (the
        // big-M mode rows).  Pin the integers at their rounded values and
        // let the continuous part adjust, then re-check.
        std::vector<std::pair<double, double>> saved(int_cols_.size());
        for (std::size_t i = 0; i < int_cols_.size(); ++i) {
            const int j = int_cols_[i];
            saved[i] = {core_.col_lb(j), core_.col_ub(j)};
            core_.set_col_bounds(j, x[j], x[j]);
        }
        LpResult r = core_.solve(warm && warm->valid() ? warm : nullptr);
        lp_iters_ += r.iterations;
        for (std::size_t i = 0; i < int_cols_.size(); ++i)
            core_.set_col_bounds(int_cols_[i], saved[i].first, saved[i].second);
        if (r.status != LpStatus::Optimal) return false;
        x.assign(r.x.begin(), r.x.begin() + p_.n_cols());
        for (int j : int_cols_) x[j] = std::round(x[j]);
        if (!check_solution(p_, x, 10.0 * opt_.feas_tol, opt_.int_tol)) return false;
    }
    double obj = 0.0;
    for (std::size_t j = 0; j < obj_.size(); ++j)
        if (obj_[j] != 0.0) obj += obj_[j] * x[j];
    if (!have_incumbent_ || obj < incumbent_ - 1e-12) {
        incumbent_ = obj;
        have_incumbent_ = true;
        res_.primal = std::move(x);
        res_.incumbents.push_back(obj);
        if (trace_)
            std::fprintf(stderr, "[bnb] incumbent %.10g at node %ld\n", obj, nodes_);
        return true;
    }
    return false;
}

void BranchAndBound::run_heuristics(const Node& root, const LpResult& root_lp) {
    // Round every integer column at the root optimum, fix, re-solve.
    apply(root);
    for (int j : int_cols_) {
        double v = std::round(root_lp.x[j]);
        v = std::min(std::max(v, core_.col_lb(j)), core_.col_ub(j));
        core_.set_col_bounds(j, v, v);
    }
    LpResult r = core_.solve(root_lp.basis.valid() ? &root_lp.basis : nullptr);
    lp_iters_ += r.iterations;
    if (r.status == LpStatus::Optimal) try_incumbent(r.x, &r.basis);

    dive(root, root_lp);
}

void BranchAndBound::dive(const Node& from, const LpResult& from_lp) {
    // Repeatedly fix the variable closest to an integer, warm restarting,
    // with a one-shot flip to the other side on infeasibility.
    apply(from);
    Basis warm = from_lp.basis;
    std::vector<double> x = from_lp.x;
    const int max_steps = static_cast<int>(int_cols_.size()) * 2 + 10;
    for (int step = 0; step < max_steps; ++step) {
        if (timed_out()) return;
        int pick = -1;
        double best_d = 2.0;
        for (int j : int_cols_) {
            const double d = int_dist(x[j]);
            if (d > opt_.int_tol && d < best_d - 1e-12) {
                pick = j;
                best_d = d;
            }
        }
        if (pick < 0) {  // integral point reached
            try_incumbent(x, warm.valid() ? &warm : nullptr);
            return;
        }
        const double lo = core_.col_lb(pick), hi = core_.col_ub(pick);
        double v = std::min(std::max(std::round(x[pick]), lo), hi);
        core_.set_col_bounds(pick, v, v);
        LpResult r = core_.solve(warm.valid() ? &warm : nullptr);
        lp_iters_ += r.iterations;
        if (r.status != LpStatus::Optimal) {
            // flip to the other neighbouring integer once
            const double flo = std::floor(x[pick]), fhi = std::ceil(x[pick]);
            const double w = (v == flo) ? fhi : flo;
            if (w < lo || w > hi) return;
            core_.set_col_bounds(pick, w, w);
            r = core_.solve(warm.valid() ? &warm : nullptr);
            lp_iters_ += r.iterations;
            if (r.status != LpStatus::Optimal) return;
        }
        warm = r.basis;
        x = r.x;
    }
}

SolveResult BranchAndBound::finish(SolveStatus limit_status) {
    double bound = closed_min_;
    if (!open_.empty()) bound = std::min(bound, open_.top().bound);
    res_.stats.nodes = nodes_;
    res_.stats.simplex_iterations = lp_iters_;

    if (!have_incumbent_) {
        if (limit_status == SolveStatus::Optimal) {
            // tree exhausted without ever reaching an integral point
            res_.status = SolveStatus::Infeasible;
            res_.bound = kInf;
        } else {
            res_.status = limit_status;
            res_.bound = bound;
        }
        return res_;
    }

    res_.objective = incumbent_;
    res_.bound = std::min(bound, incumbent_);
    res_.gap = (incumbent_ - res_.bound) / std::max(1.0, std::fabs(incumbent_));
    if (limit_status == SolveStatus::Optimal ||
        (limit_status == SolveStatus::GapLimit && res_.gap <= opt_.rel_gap)) {
        res_.status = SolveStatus::Optimal;
    } else {
        res_.status = limit_status;
    }
    return res_;
}

SolveResult BranchAndBound::run() {
    Node root;
    root.seq = seq_++;
    open_.push(std::move(root));

    while (!open_.empty()) {
        if (timed_out()) return finish(SolveStatus::TimeLimit);
        if (nodes_ >= opt_.node_limit) return finish(SolveStatus::NodeLimit);

        Node node = open_.top();
        open_.pop();

        if (have_incumbent_ && node.bound >= incumbent_ - prune_slack()) {
            closed_min_ = std::min(closed_min_, node.bound);
            continue;
        }
        if (have_incumbent_ && opt_.stop_gap) {
            const double g = (incumbent_ - std::min(closed_min_, node.bound)) /
                             std::max(1.0, std::fabs(incumbent_));
            if (g <= *opt_.stop_gap) {
                open_.push(std::move(node));  // keep the bound visible
                return finish(SolveStatus::GapLimit);
            }
        }

        ++nodes_;
        if (trace_ && nodes_ % 1000 == 0)
            std::fprintf(stderr,
                         "[bnb] nodes=%ld open=%zu bound=%.8g inc=%.8g iters=%ld depth=%zu\n",
                         nodes_, open_.size(), std::min(closed_min_, node.bound),
                         have_incumbent_ ? incumbent_ : kInf, lp_iters_, node.changes.size());
        LpResult lp = solve_node(node);

        if (lp.status == LpStatus::Infeasible) continue;  // subtree closes at +inf
        if (lp.status == LpStatus::Unbounded) {
            if (node.seq == 0) return finish(SolveStatus::Unbounded);
            return finish(SolveStatus::NumericError);
        }
        if (lp.status == LpStatus::Numeric) return finish(SolveStatus::NumericError);

        const double node_obj = std::max(lp.objective, node.bound);
        if (node.branch_col >= 0) {
            const double deg = std::max(0.0, lp.objective - node.parent_obj);
            const double unit = node.branch_up ? (1.0 - node.branch_frac) : node.branch_frac;
            if (node.branch_up) {
                up_sum_[node.branch_col] += deg / std::max(unit, 1e-6);
                ++up_cnt_[node.branch_col];
            } else {
                dn_sum_[node.branch_col] += deg / std::max(unit, 1e-6);
                ++dn_cnt_[node.branch_col];
            }
        }

        if (have_incumbent_ && node_obj >= incumbent_ - prune_slack()) {
            closed_min_ = std::min(closed_min_, node_obj);
            continue;
        }

        const std::vector<int> frac = fractional(lp.x);
        int bc;
        if (frac.empty()) {
            try_incumbent(lp.x, &lp.basis);
            if (have_incumbent_ && node_obj >= incumbent_ - prune_slack()) {
                closed_min_ = std::min(closed_min_, node_obj);
                continue;
            }
            // Integral within tolerance yet not certifiable as an
            // incumbent: pin the column that drifted furthest so the
            // children resolve it exactly.
            bc = -1;
            double worst = -1.0;
            for (int j : int_cols_)
                if (core_.col_lb(j) < core_.col_ub(j) && int_dist(lp.x[j]) > worst) {
                    worst = int_dist(lp.x[j]);
                    bc = j;
                }
            if (bc < 0) {  // every integer already fixed; numeric dead end
                closed_min_ = std::min(closed_min_, node_obj);
                continue;
            }
        } else {
            bc = pick_branch(frac, lp.x);
        }

        const double xv = std::clamp(lp.x[bc], core_.col_lb(bc), core_.col_ub(bc));
        const double cur_lb = core_.col_lb(bc), cur_ub = core_.col_ub(bc);
        if (trace_ && nodes_ % 1000 == 0)
            std::fprintf(stderr,
                         "[bnb]   branch col=%d '%s' x=%.12g lb=%.12g ub=%.12g nfrac=%zu\n",
                         bc, p_.cols[bc].name.c_str(), xv, cur_lb, cur_ub, frac.size());
        double dn_hi, up_lo;  // down child [cur_lb, dn_hi], up child [up_lo, cur_ub]
        if (int_dist(xv) > opt_.int_tol) {
            dn_hi = std::floor(xv);
            up_lo = dn_hi + 1.0;
            // Never recreate the parent: both children must shrink the range.
            if (dn_hi < cur_lb) { dn_hi = cur_lb; up_lo = cur_lb + 1.0; }
            if (up_lo > cur_ub) { up_lo = cur_ub; dn_hi = cur_ub - 1.0; }
        } else {
            // Near-integral value k: split into [lb, k-1] | [k, ub], or
            // [k, k] | [k+1, ub] when k sits on the lower bound, so both
            // children strictly tighten and k stays reachable.
            const double k = std::round(xv);
            if (k <= cur_lb) {
                dn_hi = k;
                up_lo = k + 1.0;
            } else {
                dn_hi = k - 1.0;
                up_lo = k;
            }
        }
        const double f = xv - std::floor(xv);

        if (node.seq == 0) run_heuristics(node, lp);
        else if (nodes_ % 256 == 0) dive(node, lp);

        auto warm = std::make_shared<Basis>(std::move(lp.basis));
        if (dn_hi >= cur_lb - 1e-9) {
            Node ch;
            ch.bound = node_obj;
            ch.seq = seq_++;
            ch.changes = node.changes;
            ch.changes.push_back({bc, cur_lb, dn_hi});
            ch.warm = warm;
            ch.branch_col = bc;
            ch.branch_frac = f;
            ch.branch_up = false;
            ch.parent_obj = node_obj;
            open_.push(std::move(ch));
        }
        if (up_lo <= cur_ub + 1e-9) {
            Node ch;
            ch.bound = node_obj;
            ch.seq = seq_++;
            ch.changes = node.changes;
            ch.changes.push_back({bc, up_lo, cur_ub});
            ch.warm = std::move(warm);
            ch.branch_col = bc;
            ch.branch_frac = f;
            ch.branch_up = true;
            ch.parent_obj = node_obj;
            open_.push(std::move(ch));
        }
    }

    return finish(SolveStatus::Optimal);
}

}  // namespace

SolveResult solve_lp(const MilpProblem& p, const std::string& objective, const SolverOptions& opt) {
    LpCore core(p, p.objective(objective), opt);
    LpResult r = core.solve();
    SolveResult out;
    out.stats.simplex_iterations = r.iterations;
    switch (r.status) {
        case LpStatus::Optimal:
            out.status = SolveStatus::Optimal;
            out.objective = r.objective;
            out.bound = r.objective;
            out.gap = 0.0;
            out.primal.assign(r.x.begin(), r.x.begin() + p.n_cols());
            break;
        case LpStatus::Infeasible:
            out.status = SolveStatus::Infeasible;
            out.bound = kInf;
            break;
        case LpStatus::Unbounded:
            out.status = SolveStatus::Unbounded;
            out.bound = -kInf;
            break;
        case LpStatus::Numeric:
            out.status = SolveStatus::NumericError;
            break;
    }
    return out;
}

SolveResult solve_milp(const MilpProblem& p, const std::string& objective,
                       const SolverOptions& opt) {
    if (p.n_integral() == 0) return solve_lp(p, objective, opt);
    BranchAndBound bnb(p, objective, opt);
    return bnb.run();
}

bool check_solution(const MilpProblem& p, std::span<const double> x, double feas_tol,
                    double int_tol, std::string* msg) {
    if (static_cast<int>(x.size()) < p.n_cols()) {
        if (msg) *msg = "solution vector shorter than the column count";
        return false;
    }
    for (int j = 0; j < p.n_cols(); ++j) {
        const Column& c = p.cols[j];
        const double lb_mag = std::isfinite(c.lb) ? std::fabs(c.lb) : 0.0;
        const double ub_mag = std::isfinite(c.ub) ? std::fabs(c.ub) : 0.0;
        const double tol = feas_tol * (1.0 + std::max(lb_mag, ub_mag));
        if (x[j] < c.lb - tol || x[j] > c.ub + tol) {
            if (msg)
                *msg = "column '" + c.name + "' = " + std::to_string(x[j]) +
                       " violates its bounds";
            return false;
        }
        if (c.integral && int_dist(x[j]) > int_tol) {
            if (msg) *msg = "column '" + c.name + "' = " + std::to_string(x[j]) + " is fractional";
            return false;
        }
    }
    for (const Row& row : p.rows) {
        double acc = 0.0, mag = 0.0;
        for (const RowEntry& e : row.entries) {
            acc += e.coef * x[e.col];
            mag += std::fabs(e.coef * x[e.col]);
        }
        const double tol = feas_tol * (1.0 + std::fabs(row.rhs) + mag);
        bool ok = true;
        switch (row.sense) {
            case RowSense::LE: ok = acc - row.rhs <= tol; break;
            case RowSense::GE: ok = row.rhs - acc <= tol; break;
            case RowSense::EQ: ok = std::fabs(acc - row.rhs) <= tol; break;
        }
        if (!ok) {
            if (msg)
                *msg = "row '" + row.name + "' evaluates to " + std::to_string(acc) + " vs rhs " +
                       std::to_string(row.rhs);
            return false;
        }
    }
    return true;
}

void write_solution_csv(const MilpProblem& p, const SolveResult& r, const std::string& path) {
    auto out = csv::open_out(path);
    out << "variable,value\n";
    if (!r.has_solution()) return;
    for (int j = 0; j < p.n_cols(); ++j)
        out << p.cols[j].name << ',' << csv::format_double(r.primal[j]) << '\n';
}

}  // namespace cesplan::milp
