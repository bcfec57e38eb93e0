#include <algorithm>
#include <cmath>

#include "gwdro/risk_measures.hpp"
#include "gwdro/transport.hpp"
#include "gwdro/worst_case.hpp"

namespace gwdro {

namespace {

struct FrontierPoint {
    double r;
    double value;
    Vec x;
};

// Largest r such that moving sample i alone by r keeps the risk within ε.
double single_sample_radius(const RiskSpec& risk, double w, double eps) {
    const double a = risk.alpha();
    switch (risk.kind()) {
        case RiskSpec::Kind::EssSup: return eps;
        case RiskSpec::Kind::Expectation: return eps / w;
        case RiskSpec::Kind::CVaR: return w >= 1.0 - a ? eps : eps * (1.0 - a) / w;
        case RiskSpec::Kind::Expectile: return eps * (a * w + (1.0 - a) * (1.0 - w)) / (a * w);
    }
    return eps;
}

double forced_risk(const RiskSpec& risk, const Vec& r, const Vec& w) {
    return evaluate(risk, ScalarDistribution(r, w));
}

// Grid points of Ξ ∩ box around c, reduced to the (distance, value) upper frontier.
std::vector<FrontierPoint> frontier(const LossFunction& loss, const AmbiguityBall& ball, const Vec& c, double R,
                                    double h, long long budget, long long& used) {
    const std::size_t m = c.size();
    const long long per_axis = 2 * static_cast<long long>(std::floor(R / h)) + 1;
    double total = 1.0;
    for (std::size_t d = 0; d < m; ++d) total *= static_cast<double>(per_axis);
    if (total + static_cast<double>(used) > static_cast<double>(budget))
        throw Error(ErrorCode::TooLarge, "brute force: grid exceeds the candidate budget");
    const long long half = per_axis / 2;
    std::vector<FrontierPoint> pts;
    std::vector<long long> idx(m, -half);
    Vec x(m);
    while (true) {
        for (std::size_t d = 0; d < m; ++d) x[d] = c[d] + static_cast<double>(idx[d]) * h;
        ++used;
        if (ball.support.contains(x)) {
            const double r = distance(x, c, ball.norm);
            if (r <= R + 1e-12) pts.push_back({r, loss.evaluate(x), x});
        }
        std::size_t d = 0;
        while (d < m && ++idx[d] > half) idx[d++] = -half;
        if (d == m) break;
    }
    std::sort(pts.begin(), pts.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        return a.r < b.r || (a.r == b.r && a.value > b.value);
    });
    std::vector<FrontierPoint> out;
    for (auto& p : pts)
        if (out.empty() || p.value > out.back().value) out.push_back(std::move(p));
    return out;
}

}  // namespace

BruteForceResult brute_force_oracle(const LossFunction& loss, const AmbiguityBall& ball, const GridSpec& grid) {
    if (loss.dim() != ball.center.dim()) throw Error(ErrorCode::DimensionMismatch, "brute force: dimension mismatch");
    if (!(grid.h > 0.0)) throw Error(ErrorCode::InvalidArgument, "brute force: grid step must be positive");
    const auto& S = ball.center;
    const std::size_t N = S.size();
    const double eps = ball.radius;
    BruteForceResult out;

    std::vector<std::vector<FrontierPoint>> F(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double R = grid.radius > 0.0 ? grid.radius : single_sample_radius(ball.risk, S.weight(i), eps);
        F[i] = frontier(loss, ball, S.point(i), R, grid.h, grid.max_candidates, out.candidates);
        if (F[i].empty()) throw Error(ErrorCode::Infeasible, "brute force: no grid point in the support");
    }

    // One grid point per sample; the last index is found by binary search.
    Vec r(N, 0.0);
    std::vector<std::size_t> best_pick;
    std::vector<std::size_t> cur(N, 0);
    const Vec& w = S.weights();
    auto search = [&](auto&& self, std::size_t i, double partial) -> void {
        if (i + 1 == N) {
            std::size_t lo = 0, hi = F[i].size();
            while (hi - lo > 1) {
                const std::size_t mid = (lo + hi) / 2;
                r[i] = F[i][mid].r;
                ++out.candidates;
                if (forced_risk(ball.risk, r, w) <= eps + 1e-12) lo = mid;
                else hi = mid;
            }
            r[i] = F[i][lo].r;
            if (forced_risk(ball.risk, r, w) > eps + 1e-12) return;
            const double v = partial + w[i] * F[i][lo].value;
            cur[i] = lo;
            if (v > out.value) {
                out.value = v;
                best_pick = cur;
            }
            return;
        }
        for (std::size_t k = 0; k < F[i].size(); ++k) {
            r[i] = F[i][k].r;
            for (std::size_t j = i + 1; j < N; ++j) r[j] = 0.0;
            if (forced_risk(ball.risk, r, w) > eps + 1e-12) break;
            if (++out.candidates > grid.max_candidates)
                throw Error(ErrorCode::TooLarge, "brute force: enumeration exceeds the candidate budget");
            cur[i] = k;
            self(self, i + 1, partial + w[i] * F[i][k].value);
        }
        r[i] = 0.0;
    };
    search(search, 0, 0.0);
    if (best_pick.empty()) throw Error(ErrorCode::Infeasible, "brute force: no feasible candidate");
    Matrix pts(N);
    for (std::size_t i = 0; i < N; ++i) pts[i] = F[i][best_pick[i]].x;
    out.best = DiscreteDistribution(pts, w);

    // Single sample: near point plus a far atom along the sphere maximiser.
    if (grid.two_atom && N == 1 && ball.support.is_unconstrained() && loss.is_convex() &&
        ball.risk.kind() != RiskSpec::Kind::EssSup && eps > 0.0) {
        const double a = ball.risk.alpha();
        const Vec& c = S.point(0);
        for (const auto& near : F[0]) {
            if (near.r > eps) break;
            for (double r2 = eps * 1.01; r2 <= 1e3 * std::max(1.0, eps); r2 *= 1.01) {
                ++out.candidates;
                double theta = 0.0;
                switch (ball.risk.kind()) {
                    case RiskSpec::Kind::Expectation: theta = (eps - near.r) / (r2 - near.r); break;
                    case RiskSpec::Kind::CVaR: theta = (1.0 - a) * (eps - near.r) / (r2 - near.r); break;
                    case RiskSpec::Kind::Expectile:
                        theta = (1.0 - a) * (eps - near.r) / (a * (r2 - eps) + (1.0 - a) * (eps - near.r));
                        break;
                    case RiskSpec::Kind::EssSup: break;
                }
                theta = std::clamp(theta, 0.0, 1.0);
                if (theta <= 0.0) continue;
                for (int k = 0; k < 60 && evaluate(ball.risk, ScalarDistribution({near.r, r2}, {1.0 - theta, theta})) > eps; ++k)
                    theta *= 1.0 - 1e-12 * static_cast<double>(1LL << std::min(k, 40));
                const SphereMax far = sphere_max(loss, c, r2, ball.norm);
                const double v = (1.0 - theta) * near.value + theta * far.value;
                if (v > out.value) {
                    out.value = v;
                    out.best = DiscreteDistribution({near.x, axpy(r2, far.maximizer, c)}, {1.0 - theta, theta});
                }
            }
        }
    }
    out.verified_distance = coherent_distance(S, *out.best, ball.norm, ball.risk).distance;
    return out;
}

}  // namespace gwdro
