#include "gwdro/transport.hpp"

#include <algorithm>
#include <cmath>

#include "gwdro/convex_kernel.hpp"

namespace gwdro {

namespace {

void check_pair(const DiscreteDistribution& P1, const DiscreteDistribution& P2) {
    if (P1.dim() != P2.dim()) throw Error(ErrorCode::DimensionMismatch, "transport: dimension mismatch");
    if (P1.size() > kOracleMaxAtoms || P2.size() > kOracleMaxAtoms)
        throw Error(ErrorCode::TooLarge, "transport: more than 200 atoms per side");
}

Vec distinct_sorted(const Matrix& c) {
    Vec v;
    for (const auto& row : c) v.insert(v.end(), row.begin(), row.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Rounds LP output onto exact marginals so the Coupling invariant holds.
Matrix clean_plan(Matrix pi, const Vec& w1, const Vec& w2) {
    for (auto& row : pi)
        for (double& v : row) v = v < 1e-14 ? 0.0 : v;
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (std::size_t i = 0; i < pi.size(); ++i) {
            double s = 0.0;
            for (double v : pi[i]) s += v;
            if (s > 0.0)
                for (double& v : pi[i]) v *= w1[i] / s;
        }
        for (std::size_t j = 0; j < w2.size(); ++j) {
            double s = 0.0;
            for (const auto& row : pi) s += row[j];
            if (s > 0.0)
                for (auto& row : pi) row[j] *= w2[j] / s;
        }
    }
    return pi;
}

// Allowed-arc transport LP; nullopt if no coupling exists on the allowed arcs.
std::optional<Matrix> solve_plan(const Vec& w1, const Vec& w2, const Matrix& cost,
                                 const std::vector<std::vector<char>>* allowed, double* value) {
    const std::size_t n1 = w1.size(), n2 = w2.size();
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            if (!allowed || (*allowed)[i][j]) arcs.emplace_back(i, j);
    LinearProgram lp;
    const std::size_t n = arcs.size();
    lp.c.resize(n);
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, kInf);
    lp.A_eq.assign(n1 + n2, Vec(n, 0.0));
    lp.b_eq.resize(n1 + n2);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [i, j] = arcs[k];
        lp.c[k] = cost[i][j];
        lp.A_eq[i][k] = 1.0;
        lp.A_eq[n1 + j][k] = 1.0;
    }
    for (std::size_t i = 0; i < n1; ++i) lp.b_eq[i] = w1[i];
    for (std::size_t j = 0; j < n2; ++j) lp.b_eq[n1 + j] = w2[j];
    const LpResult res = lp_solve(lp);
    if (res.status == LpStatus::Infeasible) return std::nullopt;
    if (res.status != LpStatus::Optimal) throw Error(ErrorCode::SolverFailure, "transport: LP not optimal");
    Matrix pi(n1, Vec(n2, 0.0));
    for (std::size_t k = 0; k < n; ++k) pi[arcs[k].first][arcs[k].second] = res.x[k];
    pi = clean_plan(std::move(pi), w1, w2);
    if (value) {
        double v = 0.0;
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) v += pi[i][j] * cost[i][j];
        *value = v;
    }
    return pi;
}

}  // namespace

Matrix cost_matrix(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm) {
    if (P1.dim() != P2.dim()) throw Error(ErrorCode::DimensionMismatch, "transport: dimension mismatch");
    Matrix c(P1.size(), Vec(P2.size()));
    for (std::size_t i = 0; i < P1.size(); ++i)
        for (std::size_t j = 0; j < P2.size(); ++j) c[i][j] = distance(P1.point(i), P2.point(j), norm);
    return c;
}

Matrix transport_plan(const Vec& w1, const Vec& w2, const Matrix& cost, double* value) {
    auto pi = solve_plan(w1, w2, cost, nullptr, value);
    if (!pi) throw Error(ErrorCode::SolverFailure, "transport: product coupling infeasible");
    return *pi;
}

TransportResult w1_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm) {
    check_pair(P1, P2);
    const Matrix c = cost_matrix(P1, P2, norm);
    double v = 0.0;
    Matrix pi = transport_plan(P1.weights(), P2.weights(), c, &v);
    return {v, Coupling(P1, P2, std::move(pi)), std::nullopt};
}

TransportResult winf_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm) {
    check_pair(P1, P2);
    const Matrix c = cost_matrix(P1, P2, norm);
    const Vec levels = distinct_sorted(c);
    auto attempt = [&](double tau) {
        std::vector<std::vector<char>> allowed(P1.size(), std::vector<char>(P2.size(), 0));
        for (std::size_t i = 0; i < P1.size(); ++i)
            for (std::size_t j = 0; j < P2.size(); ++j) allowed[i][j] = c[i][j] <= tau;
        return solve_plan(P1.weights(), P2.weights(), c, &allowed, nullptr);
    };
    std::size_t lo = 0, hi = levels.size() - 1;
    auto best = attempt(levels[hi]);
    if (!best) throw Error(ErrorCode::SolverFailure, "transport: full support infeasible");
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        auto plan = attempt(levels[mid]);
        if (plan) {
            hi = mid;
            best = std::move(plan);
        } else {
            lo = mid + 1;
        }
    }
    if (lo != hi || !best) throw Error(ErrorCode::SolverFailure, "transport: bottleneck search failed");
    best = attempt(levels[hi]);
    return {levels[hi], Coupling(P1, P2, std::move(*best)), std::nullopt};
}

TransportResult cvar_w_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm,
                                double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "CVaR level must lie in [0,1)");
    check_pair(P1, P2);
    const Matrix c = cost_matrix(P1, P2, norm);
    Vec candidates = distinct_sorted(c);
    if (candidates.front() > 0.0) candidates.insert(candidates.begin(), 0.0);
    double best = kInf, tbest = 0.0;
    Matrix best_pi;
    for (double t : candidates) {
        Matrix shifted = c;
        for (auto& row : shifted)
            for (double& v : row) v = std::max(v - t, 0.0);
        double inner = 0.0;
        Matrix pi = transport_plan(P1.weights(), P2.weights(), shifted, &inner);
        const double val = t + inner / (1.0 - alpha);
        if (val < best) {
            best = val;
            tbest = t;
            best_pi = std::move(pi);
        }
    }
    return {best, Coupling(P1, P2, std::move(best_pi)), tbest};
}

TransportResult expectile_w_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2,
                                     NormKind norm, double alpha) {
    if (!(alpha >= 0.5 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "expectile level must lie in [1/2,1)");
    check_pair(P1, P2);
    const Matrix c = cost_matrix(P1, P2, norm);
    double cmax = 0.0;
    for (const auto& row : c)
        for (double v : row) cmax = std::max(cmax, v);
    auto probe = [&](double eps, Matrix* plan) {
        Matrix g = c;
        for (auto& row : g)
            for (double& v : row) v = alpha * std::max(v - eps, 0.0) - (1.0 - alpha) * std::max(eps - v, 0.0);
        double val = 0.0;
        Matrix pi = transport_plan(P1.weights(), P2.weights(), g, &val);
        if (plan) *plan = std::move(pi);
        return val;
    };
    Matrix plan;
    double lo = 0.0, hi = cmax;
    if (probe(0.0, &plan) <= 0.0) {
        hi = 0.0;
    } else {
        probe(hi, &plan);
        while (hi - lo > tolerances().bisection) {
            const double mid = 0.5 * (lo + hi);
            Matrix p;
            if (probe(mid, &p) <= 0.0) {
                hi = mid;
                plan = std::move(p);
            } else {
                lo = mid;
            }
        }
    }
    Coupling pi(P1, P2, std::move(plan));
    const double d = std::min(hi, expectile(coupling_cost(pi, norm), alpha));
    return {d, std::move(pi), std::nullopt};
}

TransportResult coherent_distance(const DiscreteDistribution& P1, const DiscreteDistribution& P2, NormKind norm,
                                  const RiskSpec& spec) {
    switch (spec.kind()) {
        case RiskSpec::Kind::Expectation: return w1_distance(P1, P2, norm);
        case RiskSpec::Kind::CVaR: return cvar_w_distance(P1, P2, norm, spec.alpha());
        case RiskSpec::Kind::Expectile: return expectile_w_distance(P1, P2, norm, spec.alpha());
        case RiskSpec::Kind::EssSup: return winf_distance(P1, P2, norm);
    }
    throw Error(ErrorCode::InvalidArgument, "transport: unknown risk kind");
}

ScalarDistribution coupling_cost(const Coupling& pi, NormKind norm) {
    Vec vals, ws;
    double total = 0.0;
    for (std::size_t i = 0; i < pi.left().size(); ++i)
        for (std::size_t j = 0; j < pi.right().size(); ++j) {
            const double w = pi.mass()[i][j];
            if (w <= 0.0) continue;
            vals.push_back(distance(pi.left().point(i), pi.right().point(j), norm));
            ws.push_back(w);
            total += w;
        }
    for (double& w : ws) w /= total;
    return ScalarDistribution(std::move(vals), std::move(ws));
}

double coupling_risk(const Coupling& pi, NormKind norm, const RiskSpec& spec) {
    return evaluate(spec, coupling_cost(pi, norm));
}

NonconvexityWitness nonconvexity_witness(const DiscreteDistribution& samples, double alpha, double eps,
                                         double lambda, NormKind norm) {
    const std::size_t N = samples.size();
    const double Nd = static_cast<double>(N);
    if (!(1.0 - alpha > 1.0 / Nd)) throw Error(ErrorCode::InvalidArgument, "witness: requires 1 − α > 1/N");
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorCode::InvalidArgument, "witness: λ must lie in (0,1)");
    if (lambda * (1.0 - 1.0 / Nd) > alpha)
        throw Error(ErrorCode::InvalidArgument, "witness: requires λ(1 − 1/N) ≤ α");
    const std::size_t m = samples.dim();
    Vec e(m, 0.0);
    e[0] = 1.0;  // unit in every norm
    // Right support: ξ̂_i + εe (i < N), ξ̂_i (i < N), ξ̂_1 + Nε(1−α)e.
    Matrix right;
    for (std::size_t i = 0; i < N; ++i) right.push_back(axpy(eps, e, samples.point(i)));
    for (std::size_t i = 0; i < N; ++i) right.push_back(samples.point(i));
    right.push_back(axpy(Nd * eps * (1.0 - alpha), e, samples.point(0)));
    const std::size_t R = right.size();
    Matrix m1(N, Vec(R, 0.0)), m2(N, Vec(R, 0.0)), mix(N, Vec(R, 0.0));
    for (std::size_t i = 0; i < N; ++i) {
        m1[i][i] = samples.weight(i);
        if (i == 0) m2[0][R - 1] = samples.weight(0);
        else m2[i][N + i] = samples.weight(i);
    }
    auto right_marginal = [&](const Matrix& mm) {
        Vec w(R, 0.0);
        for (const auto& row : mm)
            for (std::size_t j = 0; j < R; ++j) w[j] += row[j];
        return w;
    };
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < R; ++j) mix[i][j] = (1.0 - lambda) * m1[i][j] + lambda * m2[i][j];
    const RiskSpec spec = RiskSpec::cvar(alpha);
    NonconvexityWitness w{
        Coupling(samples, DiscreteDistribution(right, right_marginal(m1)), m1),
        Coupling(samples, DiscreteDistribution(right, right_marginal(m2)), m2),
        Coupling(samples, DiscreteDistribution(right, right_marginal(mix)), mix),
    };
    w.risk1 = coupling_risk(w.pi1, norm, spec);
    w.risk2 = coupling_risk(w.pi2, norm, spec);
    w.risk_mixture = coupling_risk(w.mixture, norm, spec);
    w.predicted_mixture = eps + eps * lambda * (1.0 - 1.0 / (Nd * (1.0 - alpha)));
    return w;
}

}  // namespace gwdro
