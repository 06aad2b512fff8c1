// lp_core.hpp  (internal, not installed)
//
// Bounded-variable primal simplex over the equation form
//     [A I] (x; s) = b,   l <= (x; s) <= u
// where one slack per row carries the row sense in its bounds.  Phase 1 is
// the composite method: basic variables outside their bounds get a +-1
// cost and the total violation is driven to zero; phase 2 then optimizes
// the true objective.  The basis inverse is kept as a sparse LU
// factorization (Eigen) plus a product-form eta file, refactorized
// periodically.  All tie-breaks are by lowest index so runs are
// deterministic; Dantzig pricing falls back to Bland's rule on stalls.

#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "cesplan/milp.hpp"

namespace cesplan::milp::detail {

enum class VarStatus : std::uint8_t { Basic = 0, AtLower = 1, AtUpper = 2, Free = 3 };

struct Basis {
    std::vector<int> basic;         // per row: index of the basic variable
    std::vector<VarStatus> status;  // per variable (structural then slack)
    bool valid() const { return !basic.empty(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Numeric };

struct LpResult {
    LpStatus status = LpStatus::Numeric;
    double objective = 0.0;
    std::vector<double> x;  // structural + slack values
    long iterations = 0;
    Basis basis;
};

class LpCore {
public:
    LpCore(const MilpProblem& p, std::vector<double> obj, SolverOptions opt);

    // Branching interface: tighten/restore structural column bounds.
    void set_col_bounds(int j, double lb, double ub);
    void reset_col_bounds();
    double col_lb(int j) const { return lb_[j]; }
    double col_ub(int j) const { return ub_[j]; }

    LpResult solve(const Basis* warm = nullptr);

    int n_structural() const { return n_; }

private:
    // problem data
    int n_ = 0, m_ = 0, ntot_ = 0;
    std::vector<std::vector<std::pair<int, double>>> cols_;  // structural columns
    std::vector<double> b_;
    std::vector<double> cost_;  // size ntot_, slacks cost 0
    std::vector<double> lb_, ub_;
    std::vector<double> lb0_, ub0_;  // pristine bounds for reset
    SolverOptions opt_;

    // simplex state
    std::vector<int> basic_;          // size m_
    std::vector<VarStatus> status_;   // size ntot_
    std::vector<int> basic_pos_;      // variable -> row position or -1
    std::vector<double> x_;           // size ntot_
    Eigen::SparseMatrix<double> bmat_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
    struct Eta {
        int r;
        double wr;
        std::vector<std::pair<int, double>> w;  // entries i != r
    };
    std::vector<Eta> etas_;
    long iters_ = 0;
    long iter_limit_ = 0;
    bool bland_ = false;
    long stall_ = 0;
    bool trace_ = false;

    // helpers
    void init_status(const Basis* warm);
    bool factorize();             // rebuild LU from basic_, clear etas
    void recompute_basics();      // x_B = B^{-1} (b - N x_N)
    void ftran(std::vector<double>& v) const;
    void btran(std::vector<double>& v) const;
    void column_of(int j, std::vector<double>& out) const;  // dense Z_j
    double infeasibility() const;
    double entering_value(int j) const;

    struct Pick {
        int j = -1;
        int dir = 0;
        double score = 0.0;
    };
    Pick price(const std::vector<double>& y, bool phase1) const;

    enum class StepKind { Pivot, Flip, Unbounded, Stuck };
    struct Step {
        StepKind kind;
        double t = 0.0;
        int leave_pos = -1;
        VarStatus leave_to = VarStatus::AtLower;
    };
    Step ratio_test(int j, int dir, const std::vector<double>& w, bool phase1) const;

    LpStatus run_phase(bool phase1);
};

}  // namespace cesplan::milp::detail
