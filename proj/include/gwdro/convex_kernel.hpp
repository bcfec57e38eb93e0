#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gwdro/domain.hpp"

namespace gwdro {

struct Tolerances {
    double lp = 1e-8;            // KKT residuals
    double pivot = 1e-11;        // smallest admissible pivot magnitude
    double subgradient = 1e-5;
    double bisection = 1e-9;
    double golden = 1e-10;
    double cut = 1e-9;           // L2 cutting-plane violation
    double cut_gap = 1e-8;       // relative gap between the repaired point and the cut bound
    int cut_stall = 5;           // rounds without bound movement before the loop gives up
};

const Tolerances& tolerances();

// min cᵀx  s.t.  A_eq x = b_eq,  G x ≤ h,  lower ≤ x ≤ upper.
struct LinearProgram {
    Vec c;
    Matrix A_eq;
    Vec b_eq;
    Matrix G;
    Vec h;
    Vec lower;
    Vec upper;

    std::size_t num_vars() const { return c.size(); }
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double objective = 0.0;
    Vec dual_eq;       // y for A_eq rows
    Vec dual_ineq;     // y ≤ 0 for G rows
    Vec reduced_cost;  // c − A_eqᵀy_eq − Gᵀy_ineq
    int iterations = 0;
};

LpResult lp_solve(const LinearProgram& lp);
// Dual objective implied by the multipliers of an optimal result.
double lp_dual_objective(const LinearProgram& lp, const LpResult& res);
// Largest primal, dual and complementarity residual of an optimal result.
double lp_kkt_residual(const LinearProgram& lp, const LpResult& res);
std::string lp_to_text(const LinearProgram& lp);
void lp_dump(const LinearProgram& lp, const std::string& path);

// Sparse row assembly for LinearProgram.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {}
    static LinExpr var(int j, double coef = 1.0);
    LinExpr& add(int j, double coef);
    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator*=(double s);
    double eval(const Vec& x) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);

class LpBuilder {
public:
    int add_var(double lower, double upper, double cost = 0.0);
    int add_free(double cost = 0.0) { return add_var(-kInf, kInf, cost); }
    int add_nonneg(double cost = 0.0) { return add_var(0.0, kInf, cost); }
    void set_cost(int j, double cost);
    void add_le(const LinExpr& e);  // e ≤ 0
    void add_eq(const LinExpr& e);  // e = 0
    // ‖(components)‖_kind ≤ r. L2 rows are generated lazily by solve().
    void add_norm_le(const std::vector<LinExpr>& components, const LinExpr& r, NormKind kind);

    int num_vars() const { return static_cast<int>(cost_.size()); }
    LinearProgram build() const;
    // Maps an outer-approximation optimum to a feasible point of the exact program.
    using Repair = std::function<void(Vec&)>;
    // Solves, iterating cutting planes for L2 constraints until violation ≤ tol or,
    // given a repair, until the repaired objective is within tol of the bound.
    LpResult solve(int max_rounds = 400, const Repair& repair = {});
    int cut_rounds() const { return rounds_; }
    // Cutting planes gᵀcomps ≤ r generated so far, keyed by cone index; they stay
    // valid for any builder that adds the same cones in the same order.
    const std::vector<std::pair<std::size_t, Vec>>& cuts() const { return cuts_; }
    void add_cut(std::size_t cone, const Vec& g);
    // Cuts within tol of binding at x.
    std::vector<std::pair<std::size_t, Vec>> active_cuts(const Vec& x, double tol) const;

private:
    struct SparseRow {
        std::vector<std::pair<int, double>> terms;
        double rhs;
    };
    struct Cone {
        std::vector<LinExpr> comps;
        LinExpr r;
    };
    static SparseRow to_row(const LinExpr& e);

    Vec cost_, lower_, upper_;
    std::vector<SparseRow> le_, eq_;
    std::vector<Cone> cones_;
    std::vector<std::pair<std::size_t, Vec>> cuts_;
    int rounds_ = 0;
};

// ---------------------------------------------------------------------------
// Projected subgradient

struct SubgradientProblem {
    // Returns f(x) and writes one subgradient into g.
    std::function<double(const Vec& x, Vec& g)> objective;
    std::function<Vec(const Vec& x)> project;
    Vec x0;
    double step_scale = 1.0;
    int max_iterations = 2000;
    int restarts = 8;  // phases; each restarts at the best point with half the scale
    double tolerance = 1e-5;
    // Called after each iteration with (iteration, iterate).
    std::function<void(int, const Vec&)> observer;
};

struct SubgradientResult {
    Vec x;
    double value = 0.0;
    int iterations = 0;
    Vec averaged;
    double averaged_value = 0.0;
};

SubgradientResult projected_subgradient(const SubgradientProblem& prob);

// Projections.
Vec project_box(const Vec& x, const Vec& lower, const Vec& upper);
Vec project_simplex(const Vec& x);
// {x : Σx = 1, lower ≤ x ≤ upper}
Vec project_capped_simplex(const Vec& x, const Vec& lower, const Vec& upper);

// ---------------------------------------------------------------------------
// Scalar routines

// Root of a monotone f on [lo, hi] with f(lo), f(hi) of opposite sign.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol);
// Smallest x in [lo, hi] with pred(x) true, for pred monotone false→true; pred(hi) must hold.
double bisect_threshold(const std::function<bool(double)>& pred, double lo, double hi, double tol);

struct GridMin {
    double t = 0.0;
    double value = 0.0;
};

// Grid of n points on [lo, hi], then golden-section polish on the winning cell.
GridMin grid_min(const std::function<double(double)>& f, double lo, double hi, int n,
                 double tol = 1e-10);

}  // namespace gwdro
