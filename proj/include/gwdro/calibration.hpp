#pragma once

#include <string>

#include "gwdro/domain.hpp"

namespace gwdro {

struct CalibrationInputs {
    double N = 1.0;    // sample count
    double eta = 0.05; // confidence level in (0,1)
    std::size_t m = 1; // dimension
    double a = 2.0;    // light-tail exponent > 1
    double c1 = 0.0;   // concentration constants; no defaults are assumed
    double c2 = 0.0;
    double c = 1.0;    // envelope constant of the risk measure

    std::size_t m2() const { return m < 2 ? 2 : m; }
};

struct FiniteSampleRadius {
    double eps0 = 0.0;
    double radius = 0.0;
    bool small_regime = true;  // ε₀ ≤ c: exponent 1/m2, otherwise 1/a
};

FiniteSampleRadius radius_finite_sample(const CalibrationInputs& in);
// Envelope constant taken from the risk specification.
FiniteSampleRadius radius_finite_sample(const CalibrationInputs& in, const RiskSpec& risk);

class RadiusSchedule {
public:
    enum class Kind { LogPower, Power, Explicit };

    // k_N = (log N)^p, admissible iff p > 1.
    static RadiusSchedule log_power(double p);
    // k_N = N^q, admissible iff 0 < q < 1.
    static RadiusSchedule power(double q);
    // A single value k_N at the requested N; requires 0 < k_N < N.
    static RadiusSchedule explicit_value(double k);
    // k_N = (log N)²
    static RadiusSchedule builtin() { return log_power(2.0); }
    static RadiusSchedule parse(const std::string& descriptor);

    Kind kind() const { return kind_; }
    double parameter() const { return param_; }
    double k(double N) const;
    std::string describe() const;

private:
    RadiusSchedule(Kind kind, double param) : kind_(kind), param_(param) {}
    Kind kind_;
    double param_;
};

// ε_N = (k_N/N)^{1/m2}
double radius_schedule(double N, const RadiusSchedule& schedule, std::size_t m);

}  // namespace gwdro
