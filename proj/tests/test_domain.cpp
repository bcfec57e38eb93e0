#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gwdro/domain.hpp"
#include "test_util.hpp"

using namespace gwdro;

TEST_CASE("distribution validation") {
    CHECK_THROWS_AS(DiscreteDistribution({{0.0}, {1.0}}, {0.5, 0.4}), Error);
    CHECK_THROWS_AS(DiscreteDistribution({{0.0}, {1.0, 2.0}}, {0.5, 0.5}), Error);
    CHECK_THROWS_AS(DiscreteDistribution({{0.0}}, {-1.0}), Error);
    auto P = DiscreteDistribution::uniform({{1.0}, {1.0}, {2.0}});
    CHECK(P.size() == 3);  // duplicates kept
    CHECK(P.weight(0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("coupling marginals") {
    auto P = DiscreteDistribution::uniform({{0.0}, {1.0}});
    auto Q = DiscreteDistribution::dirac({0.5});
    CHECK_NOTHROW(Coupling(P, Q, {{0.5}, {0.5}}));
    CHECK_THROWS_AS(Coupling(P, Q, {{0.6}, {0.4}}), Error);
    CHECK_THROWS_AS(Coupling(P, Q, {{1.0}, {0.0}}), Error);
}

TEST_CASE("norms and duals") {
    for (auto k : {NormKind::L1, NormKind::L2, NormKind::Linf}) CHECK(dual(dual(k)) == k);
    Vec v{3.0, -4.0};
    CHECK(norm(v, NormKind::L1) == 7.0);
    CHECK(norm(v, NormKind::L2) == 5.0);
    CHECK(norm(v, NormKind::Linf) == 4.0);
    std::mt19937_64 rng(7);
    for (int it = 0; it < 200; ++it) {
        const auto kind = testutil::random_norm(rng);
        Vec a = testutil::random_vec(rng, 4);
        Vec e = unit_maximizer(a, kind);
        CHECK(norm(e, kind) == doctest::Approx(1.0));
        CHECK(dot(a, e) == doctest::Approx(dual_norm(a, kind)));
        // Hölder: aᵀu ≤ ‖a‖_* for random unit u.
        Vec u = testutil::random_vec(rng, 4);
        const double nu = norm(u, kind);
        for (double& x : u) x /= nu;
        CHECK(dot(a, u) <= dual_norm(a, kind) + 1e-12);
    }
}

TEST_CASE("support sets") {
    auto box = SupportSet::box({-1.0, -kInf}, {1.0, 2.0});
    CHECK(box.contains({0.0, -100.0}));
    CHECK_FALSE(box.contains({1.5, 0.0}));
    CHECK(box.rows_G().size() == 3);
    CHECK_THROWS_AS(SupportSet::polyhedron({{1.0}, {-1.0}}, {-1.0, -1.0}), Error);
    auto poly = SupportSet::polyhedron({{1.0, 1.0}}, {1.0});
    CHECK(poly.contains({0.5, 0.5}));
    CHECK_FALSE(poly.contains({0.6, 0.5}));
    CHECK(SupportSet::unconstrained(3).is_unconstrained());
}

TEST_CASE("evaluate_loss examples") {
    auto absl = LossFunction::max_affine({{{1.0, 0.0}, 0.0}, {{-1.0, 0.0}, 0.0}});
    CHECK(evaluate_loss(absl, {2.0, 5.0}) == 2.0);
    auto negabs = LossFunction::min_affine({{{1.0}, 0.0}, {{-1.0}, 0.0}});
    CHECK(evaluate_loss(negabs, {0.0}) == 0.0);
    CHECK(evaluate_loss(negabs, {-3.0}) == -3.0);
    auto f = quadratic_with_linear_tails(1.0, 7.0, 201);
    auto comp = LossFunction::scalar_composite({1.0, 2.0, -1.0}, f);
    CHECK(evaluate_loss(comp, {0.2, -0.32, 0.5}) == doctest::Approx(0.8836).epsilon(1e-12));
    CHECK(evaluate_loss(comp, {1.0, 1.0, 0.0}) == doctest::Approx(7.0 * 3.0 - 6.0));
    CHECK(comp.split() == doctest::Approx(0.0));
    CHECK(comp.lipschitz(NormKind::L2) == doctest::Approx(7.0 * std::sqrt(6.0)));
    CHECK_THROWS_AS(evaluate_loss(comp, {1.0}), Error);
}

TEST_CASE("scalar pwl envelope and split") {
    ScalarPwl f({{1.0, 0.0}, {-1.0, 0.0}, {0.0, -5.0}, {0.5, -0.1}});
    CHECK(f.envelope().size() == 2);
    CHECK(f.argmin() == doctest::Approx(0.0));
    CHECK(f.lipschitz() == 1.0);
    ScalarPwl dec({{-1.0, 0.0}, {-0.5, 0.1}});
    CHECK(dec.argmin() == kInf);
    auto comp = LossFunction::scalar_composite({1.0}, dec);
    CHECK(comp.f2(3.0) == -kInf);
    CHECK(comp.f1(3.0) == doctest::Approx(dec(3.0)));
    CHECK_THROWS_AS(LossFunction::scalar_composite({1.0}, f, 0.7), Error);
    CHECK_NOTHROW(LossFunction::scalar_composite({1.0}, f, 0.0));
}

TEST_CASE("piece evaluation is deterministic and matches an independent recomputation") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 200; ++it) {
        auto loss = testutil::random_max_affine(rng, 3, 4);
        Vec xi = testutil::random_vec(rng, 3, -3, 3);
        double ref = -kInf;
        for (const auto& p : loss.pieces()) ref = std::max(ref, p.a[0] * xi[0] + p.a[1] * xi[1] + p.a[2] * xi[2] + p.b);
        CHECK(evaluate_loss(loss, xi) == doctest::Approx(ref).epsilon(1e-14));
        CHECK(evaluate_loss(loss, xi) == evaluate_loss(loss, xi));
    }
}

TEST_CASE("sphere_max examples") {
    auto absl = LossFunction::max_affine({{{1.0}, 0.0}, {{-1.0}, 0.0}});
    // Enumerate e ∈ {−1, +1}.
    const double oracle = std::max(std::fabs(0.1), std::fabs(-0.1));
    CHECK(sphere_max(absl, {0.0}, 0.1, NormKind::L2).value == doctest::Approx(oracle));
    CHECK(sphere_max(absl, {0.7}, 0.0, NormKind::L1).value == doctest::Approx(0.7));

    auto f = quadratic_with_linear_tails(1.0, 7.0, 201);
    Vec x{1.0, 2.0, -1.0};
    auto comp = LossFunction::scalar_composite(x, f);
    Vec c{-0.2, -0.2, 0.2};
    const double eps = 0.2;
    auto sm = sphere_max(comp, c, eps, NormKind::L2);
    // 1-d grid over the reachable segment of xᵀξ.
    const double t = dot(x, c), r = eps * std::sqrt(6.0);
    double grid = -kInf;
    for (int k = 0; k <= 100000; ++k) grid = std::max(grid, f(t - r + 2.0 * r * k / 100000.0));
    CHECK(sm.value == doctest::Approx(grid).epsilon(1e-9));
    CHECK(evaluate_loss(comp, axpy(eps, sm.maximizer, c)) == doctest::Approx(sm.value).epsilon(1e-12));
}

TEST_CASE("sphere_max dominates the centre and is attained (random)") {
    std::mt19937_64 rng(3);
    for (int it = 0; it < 1000; ++it) {
        const std::size_t m = testutil::uniform_int(rng, 1, 5);
        const int K = testutil::uniform_int(rng, 1, 6);
        auto loss = testutil::random_max_affine(rng, m, K);
        const auto kind = testutil::random_norm(rng);
        Vec c = testutil::random_vec(rng, m, -2, 2);
        const double eps = testutil::uniform(rng, 0.0, 1.0);
        auto sm = sphere_max(loss, c, eps, kind);
        CHECK(sm.value >= evaluate_loss(loss, c) - 1e-12);
        CHECK(evaluate_loss(loss, axpy(eps, sm.maximizer, c)) == doctest::Approx(sm.value).epsilon(1e-12));
        // Random sphere points never exceed it.
        for (int s = 0; s < 5; ++s) {
            Vec u = testutil::random_vec(rng, m);
            const double nu = norm(u, kind);
            if (nu == 0.0) continue;
            for (double& v : u) v *= eps / nu;
            CHECK(evaluate_loss(loss, axpy(1.0, u, c)) <= sm.value + 1e-12);
        }
    }
}

TEST_CASE("risk spec envelope constants") {
    CHECK(RiskSpec::expectation().envelope_constant() == 1.0);
    CHECK(RiskSpec::cvar(0.9).envelope_constant() == doctest::Approx(10.0));
    CHECK(RiskSpec::expectile(0.75).envelope_constant() == doctest::Approx(3.0));
    CHECK(RiskSpec::ess_sup().envelope_constant() == kInf);
    CHECK_THROWS_AS(RiskSpec::cvar(1.0), Error);
    CHECK_THROWS_AS(RiskSpec::expectile(0.4), Error);
}

TEST_CASE("ambiguity ball validation") {
    auto P = DiscreteDistribution::uniform({{0.0}, {2.0}});
    CHECK_THROWS_AS(AmbiguityBall(RiskSpec::cvar(0.5), NormKind::L2, 0.1, P, SupportSet::box({-1.0}, {1.0})), Error);
    CHECK_THROWS_AS(AmbiguityBall(RiskSpec::cvar(0.5), NormKind::L2, -0.1, P), Error);
    AmbiguityBall b(RiskSpec::cvar(0.5), NormKind::L2, 0.1, P);
    CHECK(b.support.is_unconstrained());
}
