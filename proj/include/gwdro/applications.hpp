#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gwdro/domain.hpp"
#include "gwdro/worst_case.hpp"

namespace gwdro {

// Ball over an unconstrained support (closed forms apply).
struct BallParams {
    RiskFamily family = RiskFamily::CVaR;
    double alpha = 0.0;
    double eps = 0.0;
    NormKind norm = NormKind::L2;
};

class DecisionSet {
public:
    enum class Kind { Unconstrained, Box, Simplex, CappedSimplex };

    static DecisionSet unconstrained(std::size_t dim);
    static DecisionSet box(Vec lower, Vec upper);
    static DecisionSet simplex(std::size_t dim);
    static DecisionSet capped_simplex(Vec lower, Vec upper);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    Vec project(const Vec& x) const;
    Vec center() const;
    bool contains(const Vec& x, double tol = 1e-9) const;
    // Typical step length for the subgradient kernel.
    double scale() const;
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }

private:
    DecisionSet() = default;
    Kind kind_ = Kind::Unconstrained;
    std::size_t dim_ = 0;
    Vec lower_, upper_;
};

// f(s_i(θ)) with s_i(θ) = θᵀa_i + c_i and perturbation factor κ(θ) = ‖(θ, tail)‖_*.
struct CompositeModel {
    ScalarPwl f;
    double split = 0.0;  // t0: f nonincreasing left of it, nondecreasing right of it
    Matrix a;
    Vec c;
    Vec weights;
    std::optional<double> tail;  // appended coordinate of the dual-norm argument
    NormKind norm = NormKind::L2;
};

struct BranchReport {
    // CVaR: 1 shifted-score (sphere) branch, 2 regularised branch; 0 for expectile.
    int active_branch = 0;
    double value_regularized = 0.0;  // Σw f(s_i) + Lip(f)·κ·c(α)·ε
    double value_shifted = 0.0;      // Σw max{f1(s_i − εκ), f2(s_i + εκ)}
    // Expectile: per-sample active term (0 regularised, 1 left shift, 2 right shift).
    std::vector<int> sample_terms;
    // Iterations of the outer solver spent with each branch active (CVaR) or with
    // the regularised term active in at least one sample (expectile, branch 2).
    long long iterations_branch1 = 0;
    long long iterations_branch2 = 0;
};

struct DriverOptions {
    int iterations = 2000;
    int starts = 5;
    std::uint64_t seed = 0;
    int phases = 12;
    double step_scale = 0.0;  // 0: derived from the decision set
};

struct DriverResult {
    Vec decision;
    double value = 0.0;
    double saa = 0.0;  // sample average at the decision
    BranchReport report;
    int iterations = 0;
};

// Worst-case objective at θ with one subgradient written into grad when non-null.
double composite_objective(const CompositeModel& model, const BallParams& ball, const Vec& theta,
                           Vec* grad = nullptr, BranchReport* report = nullptr);
DriverResult minimize_composite(const CompositeModel& model, const BallParams& ball, const DecisionSet& set,
                                const DriverOptions& opt = {});

// ---------------------------------------------------------------------------
// Portfolio

struct PortfolioProblem {
    Matrix returns;
    Vec weights;  // empty: uniform
    // Concave nondecreasing utility u(t) = min_k(slope_k t + intercept_k).
    std::vector<ScalarPiece> utility;
    std::optional<DecisionSet> feasible;  // empty: the simplex of matching dimension
    BallParams ball;
};

CompositeModel portfolio_model(const PortfolioProblem& p);
double portfolio_objective(const PortfolioProblem& p, const Vec& x, BranchReport* report = nullptr);
DriverResult portfolio_optimize(const PortfolioProblem& p, const DriverOptions& opt = {});

// ---------------------------------------------------------------------------
// Learning

struct LearningProblem {
    Matrix features;
    Vec targets;  // real (regression) or ±1 (classification)
    Vec weights;  // empty: uniform
    ScalarPwl loss = ScalarPwl({{1.0, 0.0}, {-1.0, 0.0}});  // absolute loss
    std::optional<double> split;  // regression: declared split of ℓ = ℓ₁ + ℓ₂
    std::optional<DecisionSet> coefficients;  // empty: unconstrained
    BallParams ball;
};

CompositeModel regression_model(const LearningProblem& p);
CompositeModel classification_model(const LearningProblem& p);
double regression_objective(const LearningProblem& p, const Vec& beta, BranchReport* report = nullptr);
double classification_objective(const LearningProblem& p, const Vec& beta, BranchReport* report = nullptr);
DriverResult dr_regression(const LearningProblem& p, const DriverOptions& opt = {});
DriverResult dr_classification(const LearningProblem& p, const DriverOptions& opt = {});

// ε = 0 specialisations.
DriverResult saa_baseline(const PortfolioProblem& p, const DriverOptions& opt = {});
DriverResult saa_regression(const LearningProblem& p, const DriverOptions& opt = {});
DriverResult saa_classification(const LearningProblem& p, const DriverOptions& opt = {});

ScalarPwl hinge_loss();
ScalarPwl absolute_loss();

}  // namespace gwdro
