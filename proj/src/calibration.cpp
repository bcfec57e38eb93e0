#include "gwdro/calibration.hpp"

#include <cmath>
#include <sstream>

namespace gwdro {

FiniteSampleRadius radius_finite_sample(const CalibrationInputs& in) {
    if (!(in.eta > 0.0 && in.eta < 1.0)) throw Error(ErrorCode::InvalidArgument, "calibration: η must lie in (0,1)");
    if (!(in.N > 0.0) || !std::isfinite(in.N)) throw Error(ErrorCode::InvalidArgument, "calibration: N must be positive");
    if (in.m == 0) throw Error(ErrorCode::InvalidArgument, "calibration: dimension must be positive");
    if (!(in.a > 1.0) || !std::isfinite(in.a)) throw Error(ErrorCode::InvalidArgument, "calibration: tail exponent must exceed 1");
    if (!(in.c1 > 0.0 && in.c2 > 0.0) || !std::isfinite(in.c1) || !std::isfinite(in.c2))
        throw Error(ErrorCode::InvalidArgument, "calibration: c1 and c2 must be positive (no defaults)");
    if (!(in.c > 0.0) || !std::isfinite(in.c)) throw Error(ErrorCode::InvalidArgument, "calibration: envelope constant must be positive and finite");
    FiniteSampleRadius r;
    r.eps0 = std::log(in.c1 / in.eta) / (in.c2 * in.N);
    if (r.eps0 < 0.0) throw Error(ErrorCode::InvalidArgument, "calibration: η exceeds c1, ε₀ is negative");
    r.small_regime = r.eps0 <= in.c;
    r.radius = in.c * std::pow(r.eps0, 1.0 / (r.small_regime ? static_cast<double>(in.m2()) : in.a));
    return r;
}

FiniteSampleRadius radius_finite_sample(const CalibrationInputs& in, const RiskSpec& risk) {
    CalibrationInputs x = in;
    x.c = risk.envelope_constant();
    return radius_finite_sample(x);
}

RadiusSchedule RadiusSchedule::log_power(double p) {
    if (!(p > 1.0) || !std::isfinite(p))
        throw Error(ErrorCode::InvalidArgument,
                    "schedule: k_N = (log N)^p needs p > 1, otherwise log N / k_N does not vanish");
    return {Kind::LogPower, p};
}

RadiusSchedule RadiusSchedule::power(double q) {
    if (!(q > 0.0))
        throw Error(ErrorCode::InvalidArgument, "schedule: k_N = N^q needs q > 0, otherwise log N / k_N does not vanish");
    if (!(q < 1.0))
        throw Error(ErrorCode::InvalidArgument,
                    "schedule: k_N = N^q needs q < 1, otherwise k_N / N^δ does not vanish for any δ < 1");
    return {Kind::Power, q};
}

RadiusSchedule RadiusSchedule::explicit_value(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorCode::InvalidArgument, "schedule: k_N must be positive");
    return {Kind::Explicit, k};
}

RadiusSchedule RadiusSchedule::parse(const std::string& s) {
    auto number = [&](const std::string& t) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != t.size()) throw Error(ErrorCode::ParseError, "schedule: bad number '" + t + "'");
        return v;
    };
    if (s == "builtin" || s == "log2") return builtin();
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "schedule: expected log:p, pow:q, k:value or builtin");
    const std::string head = s.substr(0, colon), arg = s.substr(colon + 1);
    if (head == "log") return log_power(number(arg));
    if (head == "pow") return power(number(arg));
    if (head == "k") return explicit_value(number(arg));
    throw Error(ErrorCode::ParseError, "schedule: unknown kind '" + head + "'");
}

double RadiusSchedule::k(double N) const {
    switch (kind_) {
        case Kind::LogPower: return std::pow(std::log(N), param_);
        case Kind::Power: return std::pow(N, param_);
        case Kind::Explicit: return param_;
    }
    return param_;
}

std::string RadiusSchedule::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
        case Kind::LogPower: os << "(log N)^" << param_; break;
        case Kind::Power: os << "N^" << param_; break;
        case Kind::Explicit: os << "k_N=" << param_; break;
    }
    return os.str();
}

double radius_schedule(double N, const RadiusSchedule& schedule, std::size_t m) {
    if (!(N > 1.0) || !std::isfinite(N)) throw Error(ErrorCode::InvalidArgument, "schedule: N must exceed 1");
    if (m == 0) throw Error(ErrorCode::InvalidArgument, "schedule: dimension must be positive");
    const double k = schedule.k(N);
    if (!(k > 0.0 && k < N))
        throw Error(ErrorCode::InvalidArgument, "schedule: k_N must lie in (0, N) at this N");
    const double m2 = static_cast<double>(m < 2 ? 2 : m);
    return std::pow(k / N, 1.0 / m2);
}

}  // namespace gwdro
