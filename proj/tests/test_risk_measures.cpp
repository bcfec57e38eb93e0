#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gwdro/risk_measures.hpp"
#include "test_util.hpp"

using namespace gwdro;

namespace {

ScalarDistribution two_point() { return ScalarDistribution({0.0, 10.0}, {0.9, 0.1}); }

ScalarDistribution random_dist(std::mt19937_64& rng, int nmax = 8, double lo = -2.0, double hi = 2.0) {
    const int n = testutil::uniform_int(rng, 1, nmax);
    return ScalarDistribution(testutil::random_vec(rng, n, lo, hi), testutil::random_weights(rng, n));
}

std::vector<RiskSpec> random_specs(std::mt19937_64& rng) {
    return {RiskSpec::expectation(), RiskSpec::cvar(testutil::uniform(rng, 0.0, 0.99)),
            RiskSpec::expectile(testutil::uniform(rng, 0.5, 0.99)), RiskSpec::ess_sup()};
}

// Sort-and-scan quantile oracle.
double var_oracle(Vec v, Vec w, double alpha) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    double cum = 0.0;
    for (auto i : idx) {
        cum += w[i];
        if (cum >= alpha) return v[i];
    }
    return v[idx.back()];
}

}  // namespace

TEST_CASE("value at risk examples") {
    CHECK(value_at_risk(two_point(), 0.5) == 0.0);
    CHECK(value_at_risk(two_point(), 0.95) == var_oracle({0.0, 10.0}, {0.9, 0.1}, 0.95));
    CHECK(value_at_risk(two_point(), 0.95) == 10.0);
    CHECK(value_at_risk(ScalarDistribution({1.0}, {1.0}), 0.3) == 1.0);
    CHECK_THROWS_AS(value_at_risk(two_point(), 1.0), Error);
    CHECK_THROWS_AS(ScalarDistribution({}, {}), Error);
}

TEST_CASE("cvar examples") {
    CHECK(cvar(two_point(), 0.9) == doctest::Approx(10.0));
    CHECK(cvar(two_point(), 0.0) == doctest::Approx(two_point().mean()));
    // Tail average of the top quarter of {0, 2}: all mass at 2.
    CHECK(cvar(ScalarDistribution({0.0, 2.0}, {0.5, 0.5}), 0.75) == doctest::Approx(2.0));
}

TEST_CASE("cvar tail-average and minimisation forms agree") {
    std::mt19937_64 rng(1);
    for (int it = 0; it < 1000; ++it) {
        auto X = random_dist(rng);
        const double a = testutil::uniform(rng, 0.0, 0.999);
        CHECK(cvar_tail_average(X, a) == doctest::Approx(cvar_minimization(X, a)).epsilon(1e-10));
    }
}

TEST_CASE("expectile examples") {
    auto X = ScalarDistribution({-1.0, 1.0}, {0.5, 0.5});
    CHECK(expectile(X, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    // Root of 0.75(1 − x)/2 = 0.25(x + 1)/2.
    const double hand = (0.75 - 0.25) / (0.75 + 0.25);
    CHECK(expectile(X, 0.75) == doctest::Approx(hand).epsilon(1e-12));
    CHECK(expectile(ScalarDistribution({3.5}, {1.0}), 0.9) == 3.5);
    CHECK_THROWS_AS(expectile(X, 0.4), Error);
    std::mt19937_64 rng(2);
    for (int it = 0; it < 300; ++it) {
        auto Y = random_dist(rng);
        CHECK(expectile(Y, 0.5) == doctest::Approx(Y.mean()).epsilon(1e-11));
        double prev = -kInf;
        for (double a = 0.5; a < 0.999; a += 0.05) {
            const double e = expectile(Y, a);
            CHECK(e >= prev - 1e-12);
            prev = e;
        }
    }
}

TEST_CASE("evaluate dispatch") {
    auto X = two_point();
    CHECK(ess_sup(X) == 10.0);
    CHECK(evaluate(RiskSpec::cvar(0.9), X) == cvar(X, 0.9));
    auto Y = ScalarDistribution({0.0, 1.0}, {0.99, 0.01});
    const double e = evaluate(RiskSpec::expectile(0.99), Y);
    CHECK(e > Y.mean());
    CHECK(e < 1.0);
}

TEST_CASE("coherence axioms (random)") {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 1000; ++it) {
        // Shared finite probability space with n states.
        const int n = testutil::uniform_int(rng, 1, 8);
        const Vec w = testutil::random_weights(rng, n);
        const Vec x = testutil::random_vec(rng, n, -2, 2);
        const Vec y = testutil::random_vec(rng, n, -2, 2);
        const double c = testutil::uniform(rng, 0.0, 3.0);
        const double lam = testutil::uniform(rng, 0.0, 3.0);
        Vec xc(n), xl(n), xs(n), xmax(n);
        for (int i = 0; i < n; ++i) {
            xc[i] = x[i] + c;
            xl[i] = lam * x[i];
            xs[i] = x[i] + y[i];
            xmax[i] = std::max(x[i], y[i]);
        }
        for (const auto& spec : random_specs(rng)) {
            const double rx = evaluate(spec, ScalarDistribution(x, w));
            const double ry = evaluate(spec, ScalarDistribution(y, w));
            CHECK(evaluate(spec, ScalarDistribution(xc, w)) == doctest::Approx(rx + c).epsilon(1e-9));
            CHECK(evaluate(spec, ScalarDistribution(xl, w)) == doctest::Approx(lam * rx).epsilon(1e-9));
            CHECK(evaluate(spec, ScalarDistribution(xmax, w)) >= rx - 1e-9);
            CHECK(evaluate(spec, ScalarDistribution(xs, w)) <= rx + ry + 1e-9);
        }
    }
}

TEST_CASE("ordering chain and envelope bound") {
    std::mt19937_64 rng(6);
    for (int it = 0; it < 500; ++it) {
        auto X = random_dist(rng, 8, 0.0, 5.0);
        for (const auto& spec : random_specs(rng)) {
            const double r = evaluate(spec, X);
            CHECK(X.mean() <= r + 1e-9);
            CHECK(r <= ess_sup(X) + 1e-9);
            if (spec.kind() != RiskSpec::Kind::EssSup) CHECK(r <= spec.envelope_constant() * X.mean() + 1e-9);
        }
    }
}

TEST_CASE("limits towards the essential supremum") {
    std::mt19937_64 rng(8);
    for (int it = 0; it < 100; ++it) {
        const int n = testutil::uniform_int(rng, 1, 5);
        Vec w(n);
        double s = 0.0;
        for (double& v : w) s += (v = testutil::uniform(rng, 0.5, 1.0));
        for (double& v : w) v /= s;
        double t = 0.0;
        for (int i = 1; i < n; ++i) t += w[i];
        w[0] = 1.0 - t;
        ScalarDistribution X(testutil::random_vec(rng, n, 0.0, 1.0), w);
        double pc = -kInf, pe = -kInf;
        for (int k = 2; k <= 8; ++k) {
            const double a = 1.0 - std::pow(10.0, -k);
            const double c = cvar(X, a), e = expectile(X, a);
            CHECK(c >= pc - 1e-12);
            CHECK(e >= pe - 1e-12);
            pc = c;
            pe = e;
        }
        CHECK(std::fabs(pc - ess_sup(X)) <= 1e-6);
        CHECK(std::fabs(pe - ess_sup(X)) <= 1e-6);
    }
}
