#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gwdro/domain.hpp"

namespace gwdro {

enum class WceMethod {
    ConcavePrimal,
    ConcaveDual,
    CvarFiniteDim,
    CvarClosedForm,
    ExpectilePrimal,
    ExpectileDual,
    ExpectileClosedForm,
    BruteForce,
    SphereAverage,  // type-∞ ball (α → 1 limit of both families)
};

std::string to_string(WceMethod method);

// Conditional law attached to one sample: finite atoms plus an optional escaping
// atom that carries mass escape_coef/D at distance D along `direction`.
struct SampleLaw {
    Matrix atoms;
    Vec probs;
    bool escaping = false;
    Vec direction;
    double escape_coef = 0.0;
};

// Sequence P_n with escape distance D_n = n·scale.
struct AsymptoticFamily {
    DiscreteDistribution center;
    std::vector<SampleLaw> laws;
    double scale = 1.0;

    double escape_distance(int n) const { return scale * n; }
    DiscreteDistribution member(int n) const;
};

struct WorstCaseDistribution {
    std::optional<DiscreteDistribution> exact;
    std::optional<AsymptoticFamily> asymptotic_family;
    bool attained = false;
};

struct WceDiagnostics {
    int iterations = 0;  // LP solves
    int cut_rounds = 0;
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
    int active_branch = 0;  // CVaR closed form: 1 sphere branch, 2 Wasserstein branch
    double branch_sphere = std::numeric_limits<double>::quiet_NaN();
    double branch_wasserstein = std::numeric_limits<double>::quiet_NaN();
    std::vector<char> escaping;  // expectile closed form: membership in I
    std::optional<double> t_star;
    std::optional<double> lambda;
};

struct WceResult {
    double value = 0.0;
    WceMethod method = WceMethod::CvarClosedForm;
    std::optional<WorstCaseDistribution> worst_case;
    WceDiagnostics diagnostics;
};

// λ normalisation of the risk-envelope constraint in the concave dual.
enum class EnvelopeScaling { MeanNormalized, SumNormalized };
// Objective of the expectile dual: λβ'ε (derived) or λε (as printed).
enum class ExpectileDualObjective { Scaled, Literal };

struct WceOptions {
    EnvelopeScaling envelope_scaling = EnvelopeScaling::MeanNormalized;
    ExpectileDualObjective expectile_dual_objective = ExpectileDualObjective::Scaled;
    bool force_finite_dim = false;  // CVaR on R^m: solve the t-search instead of the closed form
    int t_grid = 101;
    double t_tol = 1e-8;  // golden-section polish width on the winning t cell
    int max_cut_rounds = 400;
    bool extract_worst_case = true;
};

// Concave (MinAffine) losses.
WceResult wce_concave_primal(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt = {});
WceResult wce_concave_dual(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt = {});

// Convex piecewise-linear losses.
WceResult wce_cvx_pwl_cvar(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt = {});
WceResult wce_cvx_pwl_expectile_primal(const LossFunction& loss, const AmbiguityBall& ball,
                                       const WceOptions& opt = {});
WceResult wce_cvx_pwl_expectile_dual(const LossFunction& loss, const AmbiguityBall& ball,
                                     const WceOptions& opt = {});

// Closed forms on Ξ = R^m.
WceResult wce_closed_form_cvar(const LossFunction& loss, const DiscreteDistribution& samples, double eps,
                               double alpha, NormKind norm);
WceResult wce_closed_form_expectile(const LossFunction& loss, const DiscreteDistribution& samples, double eps,
                                    double alpha, NormKind norm);
// Type-∞ ball: per-sample maximum over Ξ ∩ {‖ξ − ξ̂_i‖ ≤ ε}.
WceResult wce_type_inf(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt = {});

// Dispatcher following the method policy (closed forms on R^m, LPs otherwise).
WceResult worst_case_expectation(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt = {});

// Sample average of the loss.
double saa_value(const LossFunction& loss, const DiscreteDistribution& samples);

// ---------------------------------------------------------------------------
// Attainability

enum class RiskFamily { CVaR, Expectile };

struct AttainabilityReport {
    double alpha_star = 0.0;  // worst case attained for every α ≥ alpha_star; 1 means never below 1
    bool guaranteed = false;  // sufficient condition of the existence result holds
    Vec per_sample_alpha;     // expectile: per-sample thresholds
    std::string note;
};

AttainabilityReport attainability_threshold(const LossFunction& loss, const DiscreteDistribution& samples,
                                            double eps, NormKind norm, RiskFamily family);

// ---------------------------------------------------------------------------
// Expectile primal feasible set (tested for convexity)

struct ExpectilePrimalPoint {
    Matrix p;                    // N × K
    std::vector<Matrix> y;       // N × K × m
};

// Budget slack β'ε − [Σw(‖y‖ − εp)₊ + β'Σw‖y‖]; simplex/sign/support rows checked separately.
double expectile_budget_slack(const AmbiguityBall& ball, const ExpectilePrimalPoint& pt);
bool expectile_primal_feasible(const AmbiguityBall& ball, const ExpectilePrimalPoint& pt, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Brute-force oracle

struct GridSpec {
    double h = 1e-3;       // spatial step
    double radius = 0.0;   // search box half-width around each sample (0: derived from ε and the level)
    long long max_candidates = 10'000'000;
    bool two_atom = true;  // per-sample two-atom splits (single-sample instances only)
};

struct BruteForceResult {
    double value = -std::numeric_limits<double>::infinity();
    std::optional<DiscreteDistribution> best;
    long long candidates = 0;
    double verified_distance = 0.0;
};

BruteForceResult brute_force_oracle(const LossFunction& loss, const AmbiguityBall& ball, const GridSpec& grid);

}  // namespace gwdro
