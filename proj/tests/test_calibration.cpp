#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gwdro/calibration.hpp"

using namespace gwdro;

namespace {

CalibrationInputs base() {
    CalibrationInputs in;
    in.N = 1.0;
    in.eta = std::exp(-1.0);
    in.m = 2;
    in.a = 3.0;
    in.c1 = 1.0;
    in.c2 = 1.0;
    in.c = 2.0;
    return in;
}

}  // namespace

TEST_CASE("finite-sample radius examples") {
    auto in = base();
    const auto r = radius_finite_sample(in);
    CHECK(r.eps0 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.small_regime);
    CHECK(r.radius == doctest::Approx(2.0).epsilon(1e-15));
    in.c1 = in.eta;
    CHECK(radius_finite_sample(in).radius == 0.0);
}

TEST_CASE("doubling N scales the radius by 2^(-1/m2)") {
    for (std::size_t m : {1u, 2u, 3u, 5u}) {
        auto in = base();
        in.m = m;
        in.N = 100.0;
        const double r1 = radius_finite_sample(in).radius;
        in.N = 200.0;
        const double r2 = radius_finite_sample(in).radius;
        const double m2 = static_cast<double>(std::max<std::size_t>(m, 2));
        CHECK(r2 / r1 == doctest::Approx(std::pow(2.0, -1.0 / m2)).epsilon(1e-12));
    }
}

TEST_CASE("large eps0 uses the tail exponent and may jump") {
    auto in = base();
    in.c = 0.5;
    const auto r = radius_finite_sample(in);
    CHECK_FALSE(r.small_regime);
    CHECK(r.radius == doctest::Approx(0.5 * std::pow(1.0, 1.0 / 3.0)));
    in.N = 1.0 / 0.5 + 1e-9;
    const double below = radius_finite_sample(in).radius;
    in.N = 1.0 / 0.5 - 1e-9;
    const double above = radius_finite_sample(in).radius;
    // c·c^{1/m2} vs c·c^{1/a}
    CHECK(below == doctest::Approx(0.5 * std::pow(0.5, 0.5)).epsilon(1e-6));
    CHECK(above == doctest::Approx(0.5 * std::pow(0.5, 1.0 / 3.0)).epsilon(1e-6));
}

TEST_CASE("finite-sample radius validation") {
    auto in = base();
    for (double eta : {0.0, 1.0, -0.5, 1.5}) {
        in.eta = eta;
        CHECK_THROWS_AS(radius_finite_sample(in), Error);
    }
    in = base();
    in.c1 = 0.0;
    CHECK_THROWS_AS(radius_finite_sample(in), Error);
    in = base();
    in.a = 1.0;
    CHECK_THROWS_AS(radius_finite_sample(in), Error);
}

TEST_CASE("radius is nonincreasing in N and eta") {
    auto in = base();
    in.c1 = 5.0;
    in.c2 = 0.3;
    in.m = 3;
    for (double eta = 0.01; eta < 0.99; eta += 0.07) {
        double prev = kInf;
        for (double N = 1.0; N < 1e6; N *= 1.7) {
            in.N = N;
            in.eta = eta;
            const double r = radius_finite_sample(in).radius;
            CHECK(r <= prev + 1e-15);
            prev = r;
            in.eta = eta + 0.05;
            CHECK(radius_finite_sample(in).radius <= r + 1e-15);
        }
    }
}

TEST_CASE("envelope constant comes from the risk specification") {
    auto in = base();
    for (const auto& risk : {RiskSpec::expectation(), RiskSpec::cvar(0.9), RiskSpec::expectile(0.8)}) {
        in.c = risk.envelope_constant();
        CHECK(radius_finite_sample(in, risk).radius == radius_finite_sample(in).radius);
    }
    CHECK_THROWS_AS(radius_finite_sample(in, RiskSpec::ess_sup()), Error);
}

TEST_CASE("radius schedule examples") {
    CHECK(radius_schedule(std::exp(1.0), RadiusSchedule::explicit_value(1.0), 2) ==
          doctest::Approx(std::sqrt(std::exp(-1.0))).epsilon(1e-15));
    double prev = kInf;
    for (double N = 10.0; N < 1e15; N *= 3.0) {
        const double e = radius_schedule(N, RadiusSchedule::builtin(), 3);
        CHECK(e < prev);
        prev = e;
    }
    CHECK(prev < 1e-3);
    CHECK_THROWS_AS(RadiusSchedule::power(1.0), Error);
    CHECK_THROWS_AS(RadiusSchedule::log_power(1.0), Error);
    CHECK_THROWS_AS(RadiusSchedule::power(0.0), Error);
    CHECK_THROWS_AS(radius_schedule(10.0, RadiusSchedule::explicit_value(10.0), 2), Error);
    CHECK(radius_schedule(100.0, RadiusSchedule::power(0.5), 1) == doctest::Approx(std::pow(0.1, 0.5)));
}

TEST_CASE("schedule descriptors parse") {
    CHECK(RadiusSchedule::parse("builtin").kind() == RadiusSchedule::Kind::LogPower);
    CHECK(RadiusSchedule::parse("log:3").parameter() == 3.0);
    CHECK(RadiusSchedule::parse("pow:0.5").kind() == RadiusSchedule::Kind::Power);
    CHECK(RadiusSchedule::parse("k:1").kind() == RadiusSchedule::Kind::Explicit);
    CHECK_THROWS_AS(RadiusSchedule::parse("pow:1"), Error);
    CHECK_THROWS_AS(RadiusSchedule::parse("pow:x"), Error);
    CHECK_THROWS_AS(RadiusSchedule::parse("exp:2"), Error);
}
