#pragma once

#include <optional>

#include "gwdro/domain.hpp"
#include "gwdro/risk_measures.hpp"

namespace gwdro {

inline constexpr std::size_t kOracleMaxAtoms = 200;

Matrix cost_matrix(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm);

struct TransportResult {
    double distance = 0.0;
    Coupling coupling;
    std::optional<double> t_star;  // CVaR quantile variable
};

// min Σ π_ij c_ij over couplings of (w1, w2); returns the plan.
Matrix transport_plan(const Vec& w1, const Vec& w2, const Matrix& cost, double* value = nullptr);

TransportResult w1_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm);
TransportResult winf_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm);
TransportResult cvar_w_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm,
                                double alpha);
TransportResult expectile_w_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2,
                                     NormKind norm, double alpha);
TransportResult coherent_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm,
                                  const RiskSpec& spec);

// Law of ‖ξ1 − ξ2‖ under a coupling, and ρ of it.
ScalarDistribution coupling_cost(const Coupling& pi, NormKind norm);
double coupling_risk(const Coupling& pi, NormKind norm, const RiskSpec& spec);

// Two CVaR-feasible couplings whose mixture is infeasible.
struct NonconvexityWitness {
    Coupling pi1, pi2, mixture;
    double risk1 = 0.0, risk2 = 0.0, risk_mixture = 0.0;
    double predicted_mixture = 0.0;  // ε + ελ(1 − 1/(N(1−α))), valid for λ(1 − 1/N) ≤ α
};

NonconvexityWitness nonconvexity_witness(const DiscreteDistribution& samples, double alpha, double eps,
                                         double lambda, NormKind norm);

}  // namespace gwdro
