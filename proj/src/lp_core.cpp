#include "lp_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace cesplan::milp::detail {

namespace {
constexpr double kPivTol = 1e-9;    // smallest pivot magnitude considered blocking
constexpr double kDualTol = 1e-9;   // reduced-cost significance threshold
constexpr double kDropTol = 1e-13;  // eta entries below this are dropped
constexpr long kStallLimit = 400;   // non-improving iterations before Bland's rule
constexpr long kRefactorEvery = 120;
constexpr int kMaxEtas = 80;
}  // namespace

LpCore::LpCore(const MilpProblem& p, std::vector<double> obj, SolverOptions opt)
    : n_(p.n_cols()), m_(p.n_rows()), ntot_(n_ + m_), opt_(std::move(opt)) {
    cols_.assign(n_, {});
    for (int i = 0; i < m_; ++i)
        for (const RowEntry& e : p.rows[i].entries)
            if (e.coef != 0.0) cols_[e.col].push_back({i, e.coef});

    b_.resize(m_);
    lb_.resize(ntot_);
    ub_.resize(ntot_);
    cost_.assign(ntot_, 0.0);
    for (int j = 0; j < n_; ++j) {
        lb_[j] = p.cols[j].lb;
        ub_[j] = p.cols[j].ub;
        cost_[j] = j < static_cast<int>(obj.size()) ? obj[j] : 0.0;
    }
    for (int i = 0; i < m_; ++i) {
        b_[i] = p.rows[i].rhs;
        const int sj = n_ + i;
        switch (p.rows[i].sense) {
            case RowSense::LE: lb_[sj] = 0.0; ub_[sj] = kInf; break;
            case RowSense::GE: lb_[sj] = -kInf; ub_[sj] = 0.0; break;
            case RowSense::EQ: lb_[sj] = 0.0; ub_[sj] = 0.0; break;
        }
    }
    lb0_ = lb_;
    ub0_ = ub_;
    trace_ = std::getenv("CESPLAN_LP_TRACE") != nullptr;
}

void LpCore::set_col_bounds(int j, double lb, double ub) {
    lb_[j] = lb;
    ub_[j] = ub;
}

void LpCore::reset_col_bounds() {
    lb_ = lb0_;
    ub_ = ub0_;
}

double LpCore::entering_value(int j) const {
    switch (status_[j]) {
        case VarStatus::AtLower: return lb_[j];
        case VarStatus::AtUpper: return ub_[j];
        default: return 0.0;
    }
}

void LpCore::init_status(const Basis* warm) {
    status_.assign(ntot_, VarStatus::AtLower);
    basic_.assign(m_, -1);
    basic_pos_.assign(ntot_, -1);
    x_.assign(ntot_, 0.0);

    bool warmed = false;
    if (warm && warm->valid() && static_cast<int>(warm->basic.size()) == m_ &&
        static_cast<int>(warm->status.size()) == ntot_) {
        warmed = true;
        basic_ = warm->basic;
        status_ = warm->status;
        for (int i = 0; i < m_ && warmed; ++i) {
            const int j = basic_[i];
            if (j < 0 || j >= ntot_ || status_[j] != VarStatus::Basic || basic_pos_[j] != -1)
                warmed = false;
            else
                basic_pos_[j] = i;
        }
        if (!warmed) {
            basic_pos_.assign(ntot_, -1);
        }
    }
    if (!warmed) {
        status_.assign(ntot_, VarStatus::AtLower);
        for (int i = 0; i < m_; ++i) {
            basic_[i] = n_ + i;
            status_[n_ + i] = VarStatus::Basic;
            basic_pos_[n_ + i] = i;
        }
    }

    // Nonbasic variables sit on a finite bound (or at zero when free);
    // warm bases may carry statuses that the branching bounds invalidated.
    for (int j = 0; j < ntot_; ++j) {
        if (status_[j] == VarStatus::Basic) continue;
        if (lb_[j] == ub_[j]) {
            status_[j] = VarStatus::AtLower;
        } else if (status_[j] == VarStatus::AtLower && !std::isfinite(lb_[j])) {
            status_[j] = std::isfinite(ub_[j]) ? VarStatus::AtUpper : VarStatus::Free;
        } else if (status_[j] == VarStatus::AtUpper && !std::isfinite(ub_[j])) {
            status_[j] = std::isfinite(lb_[j]) ? VarStatus::AtLower : VarStatus::Free;
        } else if (status_[j] == VarStatus::Free && std::isfinite(lb_[j])) {
            status_[j] = VarStatus::AtLower;
        } else if (status_[j] == VarStatus::Free && std::isfinite(ub_[j])) {
            status_[j] = VarStatus::AtUpper;
        }
        x_[j] = entering_value(j);
    }
}

bool LpCore::factorize() {
    etas_.clear();
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(m_) * 4);
    for (int i = 0; i < m_; ++i) {
        const int j = basic_[i];
        if (j >= n_) {
            trips.emplace_back(j - n_, i, 1.0);
        } else {
            for (const auto& [row, coef] : cols_[j]) trips.emplace_back(row, i, coef);
        }
    }
    bmat_.resize(m_, m_);
    bmat_.setFromTriplets(trips.begin(), trips.end());
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(bmat_);
    return lu_->info() == Eigen::Success;
}

void LpCore::recompute_basics() {
    if (m_ == 0) return;
    std::vector<double> rhs(b_);
    for (int j = 0; j < ntot_; ++j) {
        if (status_[j] == VarStatus::Basic) continue;
        const double v = x_[j];
        if (v == 0.0) continue;
        if (j >= n_) {
            rhs[j - n_] -= v;
        } else {
            for (const auto& [row, coef] : cols_[j]) rhs[row] -= coef * v;
        }
    }
    ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[basic_[i]] = rhs[i];
}

void LpCore::ftran(std::vector<double>& v) const {
    if (m_ == 0) return;
    Eigen::Map<Eigen::VectorXd> mv(v.data(), m_);
    Eigen::VectorXd sol = lu_->solve(mv);
    std::copy(sol.data(), sol.data() + m_, v.begin());
    for (const Eta& e : etas_) {
        const double yr = v[e.r] / e.wr;
        v[e.r] = yr;
        if (yr != 0.0)
            for (const auto& [i, wi] : e.w) v[i] -= wi * yr;
    }
}

void LpCore::btran(std::vector<double>& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double acc = v[it->r];
        for (const auto& [i, wi] : it->w) acc -= wi * v[i];
        v[it->r] = acc / it->wr;
    }
    Eigen::Map<Eigen::VectorXd> mv(v.data(), m_);
    Eigen::VectorXd sol = lu_->transpose().solve(mv);
    std::copy(sol.data(), sol.data() + m_, v.begin());
}

void LpCore::column_of(int j, std::vector<double>& out) const {
    out.assign(m_, 0.0);
    if (j >= n_) {
        out[j - n_] = 1.0;
    } else {
        for (const auto& [row, coef] : cols_[j]) out[row] += coef;
    }
}

double LpCore::infeasibility() const {
    double total = 0.0;
    for (int i = 0; i < m_; ++i) {
        const int j = basic_[i];
        if (x_[j] < lb_[j]) total += lb_[j] - x_[j];
        else if (x_[j] > ub_[j]) total += x_[j] - ub_[j];
    }
    return total;
}

LpCore::Pick LpCore::price(const std::vector<double>& y, bool phase1) const {
    Pick best;
    for (int j = 0; j < ntot_; ++j) {
        const VarStatus st = status_[j];
        if (st == VarStatus::Basic) continue;
        if (lb_[j] == ub_[j]) continue;  // fixed, never enters
        double d = phase1 ? 0.0 : cost_[j];
        if (j >= n_) {
            d -= y[j - n_];
        } else {
            for (const auto& [row, coef] : cols_[j]) d -= y[row] * coef;
        }
        int dir = 0;
        if (st == VarStatus::AtLower) {
            if (d < -kDualTol) dir = 1;
        } else if (st == VarStatus::AtUpper) {
            if (d > kDualTol) dir = -1;
        } else {  // Free
            if (d < -kDualTol) dir = 1;
            else if (d > kDualTol) dir = -1;
        }
        if (dir == 0) continue;
        if (bland_) return {j, dir, std::fabs(d)};  // lowest index wins
        if (std::fabs(d) > best.score) best = {j, dir, std::fabs(d)};
    }
    return best;
}

LpCore::Step LpCore::ratio_test(int j, int dir, const std::vector<double>& w, bool phase1) const {
    const double ftol = opt_.feas_tol;
    double flip_t = kInf;
    if (std::isfinite(lb_[j]) && std::isfinite(ub_[j])) flip_t = ub_[j] - lb_[j];

    double best_t = kInf;
    double best_w = 0.0;
    int best_pos = -1;
    VarStatus best_to = VarStatus::AtLower;

    for (int i = 0; i < m_; ++i) {
        const double wi = w[i];
        if (std::fabs(wi) <= kPivTol) continue;
        const double delta = dir * wi;  // basic value moves by -t*delta
        const int bj = basic_[i];
        const double xi = x_[bj], li = lb_[bj], ui = ub_[bj];
        double t = kInf;
        VarStatus to = VarStatus::AtLower;
        if (phase1 && xi < li - ftol) {
            // below its lower bound: blocks where it reaches feasibility
            if (delta < 0.0) { t = (xi - li) / delta; to = VarStatus::AtLower; }
        } else if (phase1 && xi > ui + ftol) {
            if (delta > 0.0) { t = (xi - ui) / delta; to = VarStatus::AtUpper; }
        } else {
            if (delta > 0.0 && std::isfinite(li)) { t = (xi - li) / delta; to = VarStatus::AtLower; }
            else if (delta < 0.0 && std::isfinite(ui)) { t = (xi - ui) / delta; to = VarStatus::AtUpper; }
        }
        if (t == kInf) continue;
        if (t < 0.0) t = 0.0;  // inside-tolerance overshoot
        if (t < best_t - 1e-12 ||
            (t < best_t + 1e-12 &&
             (std::fabs(wi) > std::fabs(best_w) + 1e-12 ||
              (std::fabs(wi) > std::fabs(best_w) - 1e-12 && (best_pos < 0 || bj < basic_[best_pos]))))) {
            best_t = t;
            best_w = wi;
            best_pos = i;
            best_to = to;
        }
    }

    if (flip_t <= best_t) {
        if (!std::isfinite(flip_t)) return {StepKind::Unbounded};
        return {StepKind::Flip, flip_t};
    }
    if (best_pos < 0) return {StepKind::Unbounded};
    return {StepKind::Pivot, best_t, best_pos, best_to};
}

LpStatus LpCore::run_phase(bool phase1) {
    const double ftol = opt_.feas_tol;
    std::vector<double> y(m_), w;
    double prev_measure = kInf;
    long since_refactor = 0;
    stall_ = 0;
    bland_ = false;

    while (true) {
        if (iters_ > iter_limit_) return LpStatus::Numeric;

        if (phase1 && infeasibility() <= ftol * (1.0 + std::sqrt(static_cast<double>(m_))))
            return LpStatus::Optimal;

        // Pricing direction: true costs, or +-1 on out-of-bounds basics.
        y.assign(m_, 0.0);
        bool any_viol = false;
        for (int i = 0; i < m_; ++i) {
            const int bj = basic_[i];
            if (phase1) {
                if (x_[bj] < lb_[bj] - ftol) { y[i] = -1.0; any_viol = true; }
                else if (x_[bj] > ub_[bj] + ftol) { y[i] = 1.0; any_viol = true; }
            } else {
                y[i] = cost_[bj];
            }
        }
        if (phase1 && !any_viol) return LpStatus::Optimal;  // only sub-tolerance dust remains
        btran(y);

        const Pick pick = price(y, phase1);
        if (pick.j < 0) {
            if (!phase1) return LpStatus::Optimal;
            return infeasibility() <= ftol * (1.0 + std::sqrt(static_cast<double>(m_)))
                       ? LpStatus::Optimal
                       : LpStatus::Infeasible;
        }

        column_of(pick.j, w);
        ftran(w);
        const Step step = ratio_test(pick.j, pick.dir, w, phase1);
        if (step.kind == StepKind::Unbounded) {
            // An improving direction with no breakpoint cannot happen while
            // violations remain, so treat it as numeric trouble in phase 1.
            return phase1 ? LpStatus::Numeric : LpStatus::Unbounded;
        }

        ++iters_;
        ++since_refactor;

        const double t = step.t;
        if (t > 0.0) {
            for (int i = 0; i < m_; ++i)
                if (w[i] != 0.0) x_[basic_[i]] -= t * pick.dir * w[i];
        }
        if (step.kind == StepKind::Flip) {
            x_[pick.j] = (pick.dir > 0) ? ub_[pick.j] : lb_[pick.j];
            status_[pick.j] = (pick.dir > 0) ? VarStatus::AtUpper : VarStatus::AtLower;
        } else {
            const int r = step.leave_pos;
            const int leaving = basic_[r];
            x_[pick.j] = entering_value(pick.j) + pick.dir * t;
            x_[leaving] = (step.leave_to == VarStatus::AtLower) ? lb_[leaving] : ub_[leaving];
            status_[leaving] = step.leave_to;
            basic_pos_[leaving] = -1;
            status_[pick.j] = VarStatus::Basic;
            basic_[r] = pick.j;
            basic_pos_[pick.j] = r;

            Eta eta;
            eta.r = r;
            eta.wr = w[r];
            for (int i = 0; i < m_; ++i)
                if (i != r && std::fabs(w[i]) > kDropTol) eta.w.push_back({i, w[i]});
            etas_.push_back(std::move(eta));

            if (std::fabs(w[r]) < 1e-7 || static_cast<int>(etas_.size()) >= kMaxEtas ||
                since_refactor >= kRefactorEvery) {
                if (!factorize()) return LpStatus::Numeric;
                recompute_basics();
                since_refactor = 0;
            }
        }

        // Stall bookkeeping drives the Bland fallback.
        double measure;
        if (phase1) {
            measure = infeasibility();
        } else {
            measure = 0.0;
            for (int jj = 0; jj < ntot_; ++jj)
                if (cost_[jj] != 0.0) measure += cost_[jj] * x_[jj];
        }
        if (measure < prev_measure - 1e-10 * (1.0 + std::fabs(prev_measure))) {
            stall_ = 0;
            bland_ = false;
        } else if (++stall_ > kStallLimit) {
            bland_ = true;
        }
        prev_measure = measure;
        if (trace_ && iters_ % 5000 == 0)
            std::fprintf(stderr, "[lp] phase%d iters=%ld measure=%.10g stall=%ld bland=%d\n",
                         phase1 ? 1 : 2, iters_, measure, stall_, bland_ ? 1 : 0);
    }
}

LpResult LpCore::solve(const Basis* warm) {
    LpResult res;
    iters_ = 0;
    iter_limit_ = 20000 + 40L * ntot_;

    init_status(warm);
    if (!factorize()) {
        init_status(nullptr);
        if (!factorize()) return res;  // slack basis always factors; paranoia
    }
    recompute_basics();

    for (int attempt = 0; attempt < 3; ++attempt) {
        const LpStatus p1 = run_phase(true);
        if (p1 != LpStatus::Optimal) {
            res.status = p1;
            res.iterations = iters_;
            return res;
        }
        const LpStatus p2 = run_phase(false);
        if (p2 != LpStatus::Optimal) {
            res.status = p2;
            res.iterations = iters_;
            if (p2 == LpStatus::Unbounded) {
                res.x = x_;
                res.basis = {basic_, status_};
            }
            return res;
        }
        // Polish: refresh the factorization, recompute basics and make sure
        // the claimed optimum is clean; otherwise loop back (warm).
        if (!factorize()) return res;
        recompute_basics();
        if (infeasibility() <= opt_.feas_tol * (1.0 + std::sqrt(static_cast<double>(m_)))) break;
        if (attempt == 2) {
            res.status = LpStatus::Numeric;
            res.iterations = iters_;
            return res;
        }
    }

    res.status = LpStatus::Optimal;
    res.iterations = iters_;
    res.x = x_;
    res.basis = {basic_, status_};
    double obj = 0.0;
    for (int j = 0; j < ntot_; ++j)
        if (cost_[j] != 0.0) obj += cost_[j] * x_[j];
    res.objective = obj;
    return res;
}

}  // namespace cesplan::milp::detail
