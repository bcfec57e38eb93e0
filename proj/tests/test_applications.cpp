#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gwdro/applications.hpp"
#include "gwdro/convex_kernel.hpp"
#include "gwdro/worst_case.hpp"
#include "test_util.hpp"

using namespace gwdro;

namespace {

// u(t) = min(t, 0.5t + 0.1)
double util(double t) { return std::min(t, 0.5 * t + 0.1); }

PortfolioProblem two_asset(RiskFamily fam, double alpha, double eps, NormKind norm = NormKind::L2) {
    PortfolioProblem p;
    p.returns = {{0.12, -0.04}, {-0.03, 0.09}};
    p.utility = {{1.0, 0.0}, {0.5, 0.1}};
    p.ball = {fam, alpha, eps, norm};
    return p;
}

// Direct evaluation of the two-branch CVaR portfolio objective.
double portfolio_cvar_oracle(const Matrix& R, const Vec& x, double eps, double alpha, NormKind norm) {
    const double k = dual_norm(x, norm);
    double a = 0.0, b = 0.0;
    for (const auto& r : R) {
        const double s = dot(x, r);
        a += -util(s) / static_cast<double>(R.size());
        b += -util(s - eps * k) / static_cast<double>(R.size());
    }
    return std::max(a + 1.0 * k * (1.0 - alpha) * eps, b);
}

}  // namespace

TEST_CASE("decision sets project and validate") {
    const auto s = DecisionSet::simplex(3);
    const Vec x = s.project({2.0, -1.0, 0.5});
    CHECK(s.contains(x));
    CHECK(s.center() == Vec(3, 1.0 / 3.0));
    const auto c = DecisionSet::capped_simplex({0.0, 0.0}, {0.7, 0.7});
    CHECK(c.contains(c.project({1.0, 0.0})));
    CHECK(c.project({1.0, 0.0})[0] == doctest::Approx(0.7));
    CHECK_THROWS_AS(DecisionSet::capped_simplex({0.0, 0.0}, {0.3, 0.3}), Error);
    CHECK_THROWS_AS(DecisionSet::capped_simplex({0.6, 0.6}, {1.0, 1.0}), Error);
    CHECK_THROWS_AS(DecisionSet::box({1.0}, {0.0}), Error);
}

TEST_CASE("portfolio objective matches the direct two-branch formula") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const double eps = testutil::uniform(rng, 0.0, 0.2), alpha = testutil::uniform(rng, 0.0, 0.95);
        const NormKind norm = testutil::random_norm(rng);
        auto p = two_asset(RiskFamily::CVaR, alpha, eps, norm);
        const double x1 = testutil::uniform(rng, 0.0, 1.0);
        const Vec x{x1, 1.0 - x1};
        CHECK(portfolio_objective(p, x) == doctest::Approx(portfolio_cvar_oracle(p.returns, x, eps, alpha, norm)).epsilon(1e-12));
    }
}

TEST_CASE("portfolio n=2 matches a simplex grid search") {
    const auto p = two_asset(RiskFamily::CVaR, 0.5, 0.05);
    double grid = kInf;
    for (int k = 0; k <= 1000; ++k) {
        const double x1 = 1e-3 * k;
        grid = std::min(grid, portfolio_cvar_oracle(p.returns, {x1, 1.0 - x1}, 0.05, 0.5, NormKind::L2));
    }
    const auto r = portfolio_optimize(p);
    CHECK(DecisionSet::simplex(2).contains(r.decision));
    CHECK(std::fabs(r.value - grid) <= 2e-3);
    CHECK(r.value >= grid - 1e-9 - 1e-3);
    CHECK(r.report.iterations_branch1 + r.report.iterations_branch2 == r.iterations);
}

TEST_CASE("single-asset portfolio equals the closed-form worst case of -u") {
    for (double alpha : {0.0, 0.3, 0.8}) {
        PortfolioProblem p;
        p.returns = {{0.1}, {-0.05}, {0.02}};
        p.utility = {{1.0, 0.0}, {0.5, 0.1}};
        p.ball = {RiskFamily::CVaR, alpha, 0.07, NormKind::L2};
        const auto r = portfolio_optimize(p);
        CHECK(r.decision == Vec{1.0});
        const auto f = ScalarPwl({{-1.0, 0.0}, {-0.5, -0.1}});
        const auto loss = LossFunction::scalar_composite({1.0}, f);
        const auto cf = wce_closed_form_cvar(loss, DiscreteDistribution::uniform(p.returns), 0.07, alpha, NormKind::L2);
        CHECK(r.value == doctest::Approx(cf.value).epsilon(1e-12));
        p.ball.family = RiskFamily::Expectile;
        p.ball.alpha = 0.5 + 0.4 * alpha;
        const auto re = portfolio_optimize(p);
        const auto ce = wce_closed_form_expectile(loss, DiscreteDistribution::uniform(p.returns), 0.07, p.ball.alpha, NormKind::L2);
        CHECK(re.value == doctest::Approx(ce.value).epsilon(1e-12));
    }
}

TEST_CASE("zero radius reduces to the sample average problem") {
    auto p = two_asset(RiskFamily::CVaR, 0.3, 0.0);
    const auto dr = portfolio_optimize(p);
    const auto saa = saa_baseline(p);
    CHECK(dr.value == doctest::Approx(saa.value).epsilon(1e-12));
    CHECK(dr.value == doctest::Approx(dr.saa).epsilon(1e-12));
    // Affine utility with one sample: best vertex.
    PortfolioProblem q;
    q.returns = {{0.01, 0.05, -0.02}};
    q.utility = {{1.0, 0.0}};
    q.ball = {RiskFamily::CVaR, 0.5, 0.0, NormKind::L2};
    const auto v = saa_baseline(q);
    CHECK(v.decision[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(v.value == doctest::Approx(-0.05).epsilon(1e-6));
}

TEST_CASE("portfolio validation") {
    auto p = two_asset(RiskFamily::CVaR, 0.5, 0.1);
    p.utility = {{-1.0, 0.0}};
    CHECK_THROWS_AS(portfolio_optimize(p), Error);
    p = two_asset(RiskFamily::CVaR, 0.5, 0.1);
    p.feasible = DecisionSet::simplex(3);
    CHECK_THROWS_AS(portfolio_optimize(p), Error);
    p = two_asset(RiskFamily::Expectile, 0.3, 0.1);
    CHECK_THROWS_AS(portfolio_optimize(p), Error);
    p = two_asset(RiskFamily::CVaR, 0.5, -0.1);
    CHECK_THROWS_AS(portfolio_optimize(p), Error);
    p = two_asset(RiskFamily::CVaR, 0.5, 0.1);
    p.returns.clear();
    CHECK_THROWS_AS(portfolio_optimize(p), Error);
}

TEST_CASE("capped simplex portfolio stays feasible") {
    auto p = two_asset(RiskFamily::CVaR, 0.5, 0.05);
    p.feasible = DecisionSet::capped_simplex({0.0, 0.0}, {0.4, 1.0});
    const auto r = portfolio_optimize(p);
    CHECK(r.decision[0] <= 0.4 + 1e-9);
    double grid = kInf;
    for (int k = 0; k <= 400; ++k) {
        const double x1 = 1e-3 * k;
        grid = std::min(grid, portfolio_cvar_oracle(p.returns, {x1, 1.0 - x1}, 0.05, 0.5, NormKind::L2));
    }
    CHECK(std::fabs(r.value - grid) <= 2e-3);
}

TEST_CASE("regression example: absolute loss on one sample") {
    LearningProblem p;
    p.features = {{1.0}};
    p.targets = {1.0};
    p.ball = {RiskFamily::CVaR, 0.0, 0.1, NormKind::Linf};
    // ‖(β,−1)‖_1 = |β| + 1
    double best = kInf, arg = 0.0;
    for (int k = -3000; k <= 3000; ++k) {
        const double b = 1e-3 * k;
        const double v = std::fabs(b - 1.0) + 0.1 * (std::fabs(b) + 1.0);
        CHECK(regression_objective(p, {b}) == doctest::Approx(v).epsilon(1e-12));
        if (v < best) best = v, arg = b;
    }
    CHECK(arg == doctest::Approx(1.0));
    const auto r = dr_regression(p);
    CHECK(r.decision[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.value == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("expectile regression formula equals the primal program") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 6; ++t) {
        const NormKind norm = t == 0 ? NormKind::Linf : testutil::random_norm(rng);
        const int n = t == 0 ? 1 : testutil::uniform_int(rng, 1, 3);
        const std::size_t d = t == 0 ? 1 : static_cast<std::size_t>(testutil::uniform_int(rng, 1, 2));
        LearningProblem p;
        p.features = t == 0 ? Matrix{{1.0}} : testutil::random_points(rng, n, d);
        p.targets = t == 0 ? Vec{1.0} : testutil::random_vec(rng, n);
        p.ball = {RiskFamily::Expectile, t == 0 ? 0.9 : testutil::uniform(rng, 0.6, 0.95), 0.1, norm};
        const Vec beta = t == 0 ? Vec{1.0} : testutil::random_vec(rng, d);
        // Loss on the joint (x, y) space: |(β, −1)ᵀ(x, y)|.
        Vec a = beta;
        a.push_back(-1.0);
        Vec na = a;
        for (double& v : na) v = -v;
        const auto loss = LossFunction::max_affine({{a, 0.0}, {na, 0.0}});
        Matrix pts;
        for (int i = 0; i < n; ++i) {
            Vec z = p.features[i];
            z.push_back(p.targets[i]);
            pts.push_back(z);
        }
        const AmbiguityBall ball(RiskSpec::expectile(p.ball.alpha), norm, 0.1, DiscreteDistribution::uniform(pts));
        const auto primal = wce_cvx_pwl_expectile_primal(loss, ball);
        CHECK(regression_objective(p, beta) == doctest::Approx(primal.value).epsilon(1e-3));
    }
}

TEST_CASE("regression requires a split for asymmetric losses") {
    LearningProblem p;
    p.features = {{1.0}, {2.0}};
    p.targets = {0.5, 1.0};
    p.loss = ScalarPwl({{2.0, 0.0}, {-1.0, 0.0}});
    p.ball = {RiskFamily::CVaR, 0.5, 0.1, NormKind::L2};
    CHECK_THROWS_AS(dr_regression(p), Error);
    p.split = 0.0;
    CHECK_NOTHROW(regression_objective(p, {0.3}));
    p.split = 1.0;
    CHECK_THROWS_AS(regression_objective(p, {0.3}), Error);
}

TEST_CASE("saa regression with absolute loss recovers the median") {
    LearningProblem p;
    p.features = {{1.0}, {1.0}, {1.0}, {1.0}, {1.0}};
    p.targets = {3.0, -1.0, 0.4, 7.0, 0.9};
    p.ball = {RiskFamily::CVaR, 0.5, 0.3, NormKind::L2};
    const auto r = saa_regression(p);
    Vec y = p.targets;
    std::sort(y.begin(), y.end());
    CHECK(r.decision[0] == doctest::Approx(y[2]).epsilon(1e-3));
}

TEST_CASE("classification at alpha = 0 is the norm-regularised hinge") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = static_cast<std::size_t>(testutil::uniform_int(rng, 1, 3));
        const int n = testutil::uniform_int(rng, 1, 5);
        LearningProblem p;
        p.loss = hinge_loss();
        p.features = testutil::random_points(rng, n, d);
        p.ball = {RiskFamily::CVaR, 0.0, testutil::uniform(rng, 0.0, 0.2), testutil::random_norm(rng)};
        const Vec beta = testutil::random_vec(rng, d);
        // Labels chosen so margins sit on the linear piece after the shift.
        for (int i = 0; i < n; ++i) {
            const double m = dot(beta, p.features[i]);
            p.targets.push_back(m >= 0.0 ? -1.0 : 1.0);
        }
        BranchReport rep;
        const double v = classification_objective(p, beta, &rep);
        double reg = 0.0;
        for (int i = 0; i < n; ++i) reg += std::max(0.0, 1.0 - p.targets[i] * dot(beta, p.features[i])) / n;
        reg += dual_norm(beta, p.ball.norm) * p.ball.eps;
        CHECK(v == doctest::Approx(reg).epsilon(1e-12));
        CHECK(rep.value_regularized == doctest::Approx(rep.value_shifted).epsilon(1e-12));
    }
}

TEST_CASE("classification branch flip matches the attainability threshold") {
    LearningProblem p;
    p.loss = hinge_loss();
    p.features = {{1.5}, {-2.0}};
    p.targets = {1.0, -1.0};
    const Vec beta{1.0};
    auto gap = [&](double eps) {
        p.ball = {RiskFamily::CVaR, 0.9, eps, NormKind::L2};
        BranchReport rep;
        classification_objective(p, beta, &rep);
        return rep;
    };
    CHECK(gap(0.05).active_branch == 2);
    CHECK(gap(0.9).active_branch == 1);
    const double flip =
        bisect_threshold([&](double e) { return gap(e).active_branch == 1; }, 0.05, 0.9, 1e-12);
    // margins 1.5 and 2: 0.5(ε − 0.5) = 0.1ε
    CHECK(flip == doctest::Approx(0.625).epsilon(1e-9));
    const auto loss = LossFunction::scalar_composite(beta, hinge_loss());
    const auto rep = attainability_threshold(loss, DiscreteDistribution::uniform({{1.5}, {2.0}}), flip, NormKind::L2,
                                             RiskFamily::CVaR);
    CHECK(rep.alpha_star == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("classification validation") {
    LearningProblem p;
    p.loss = hinge_loss();
    p.features = {{1.0}, {2.0}};
    p.targets = {1.0, 0.0};
    p.ball = {RiskFamily::CVaR, 0.5, 0.1, NormKind::L2};
    CHECK_THROWS_AS(dr_classification(p), Error);
    p.targets = {1.0, -1.0};
    p.loss = absolute_loss();
    CHECK_THROWS_AS(dr_classification(p), Error);
    p.loss = hinge_loss();
    p.coefficients = DecisionSet::box({-1.0}, {1.0});
    const auto r = dr_classification(p);
    CHECK(std::fabs(r.decision[0]) <= 1.0 + 1e-12);
    CHECK(r.value >= r.saa - 1e-12);
}

TEST_CASE("classification zero radius is plain hinge ERM") {
    LearningProblem p;
    p.loss = hinge_loss();
    p.features = {{1.0, 0.2}, {-0.5, 1.0}, {0.3, -0.8}};
    p.targets = {1.0, -1.0, 1.0};
    p.ball = {RiskFamily::CVaR, 0.5, 0.0, NormKind::L2};
    const auto r = dr_classification(p);
    const auto s = saa_classification(p);
    CHECK(r.value == doctest::Approx(s.value).epsilon(1e-12));
    CHECK(r.value <= 1e-6);
}

TEST_CASE("DR value dominates SAA and is monotone in eps and alpha") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 200; ++t) {
        const RiskFamily fam = t % 2 ? RiskFamily::CVaR : RiskFamily::Expectile;
        const double lo = fam == RiskFamily::CVaR ? 0.0 : 0.5;
        const NormKind norm = testutil::random_norm(rng);
        const std::size_t d = static_cast<std::size_t>(testutil::uniform_int(rng, 1, 3));
        const int n = testutil::uniform_int(rng, 1, 5);
        LearningProblem p;
        p.features = testutil::random_points(rng, n, d);
        p.targets = testutil::random_vec(rng, n);
        const Vec beta = testutil::random_vec(rng, d, -2.0, 2.0);
        const double a1 = testutil::uniform(rng, lo, 0.95), a2 = testutil::uniform(rng, a1, 0.99);
        const double e1 = testutil::uniform(rng, 0.0, 0.3), e2 = testutil::uniform(rng, e1, 0.6);
        auto value = [&](double a, double e) {
            p.ball = {fam, a, e, norm};
            return regression_objective(p, beta);
        };
        double saa = 0.0;
        for (int i = 0; i < n; ++i) saa += std::fabs(dot(beta, p.features[i]) - p.targets[i]) / n;
        CHECK(value(a1, 0.0) == doctest::Approx(saa).epsilon(1e-12));
        CHECK(value(a1, e1) >= saa - 1e-12);
        CHECK(value(a1, e2) >= value(a1, e1) - 1e-12);
        CHECK(value(a2, e1) <= value(a1, e1) + 1e-12);
        // Classification with folded labels.
        LearningProblem c = p;
        c.loss = hinge_loss();
        for (double& y : c.targets) y = y >= 0.0 ? 1.0 : -1.0;
        c.ball = {fam, a1, e1, norm};
        const double v1 = classification_objective(c, beta);
        c.ball.eps = e2;
        CHECK(classification_objective(c, beta) >= v1 - 1e-12);
        c.ball.eps = 0.0;
        CHECK(v1 >= classification_objective(c, beta) - 1e-12);
    }
}

TEST_CASE("active branch depends on the decision") {
    // Concentrated portfolios push a score into the steep piece of u; diversified ones do not.
    PortfolioProblem p;
    p.returns = {{0.3, -0.1}, {-0.1, 0.3}};
    p.utility = {{1.0, 0.0}, {0.2, 0.0}};
    p.ball = {RiskFamily::CVaR, 0.5, 0.1, NormKind::L2};
    BranchReport r1, r2;
    portfolio_objective(p, {1.0, 0.0}, &r1);
    portfolio_objective(p, {0.5, 0.5}, &r2);
    CHECK(r1.active_branch == 1);
    CHECK(r2.active_branch == 2);
    p.ball = {RiskFamily::Expectile, 0.6, 0.1, NormKind::L2};
    BranchReport e1, e2;
    portfolio_objective(p, {1.0, 0.0}, &e1);
    portfolio_objective(p, {0.5, 0.5}, &e2);
    CHECK(e1.sample_terms == std::vector<int>{0, 1});
    CHECK(e2.sample_terms == std::vector<int>{0, 0});
}

TEST_CASE("drivers are deterministic for a fixed seed") {
    auto p = two_asset(RiskFamily::Expectile, 0.8, 0.08);
    DriverOptions o;
    o.seed = 42;
    const auto a = portfolio_optimize(p, o);
    const auto b = portfolio_optimize(p, o);
    CHECK(a.decision == b.decision);
    CHECK(a.value == b.value);
    CHECK(a.report.iterations_branch1 == b.report.iterations_branch1);
    CHECK(a.report.sample_terms.size() == 2);
}
