#include "gwdro/worst_case.hpp"

#include <algorithm>
#include <cmath>

#include "gwdro/convex_kernel.hpp"
#include "gwdro/risk_measures.hpp"

namespace gwdro {

std::string to_string(WceMethod method) {
    switch (method) {
        case WceMethod::ConcavePrimal: return "concave_primal";
        case WceMethod::ConcaveDual: return "concave_dual";
        case WceMethod::CvarFiniteDim: return "cvar_finite_dim";
        case WceMethod::CvarClosedForm: return "cvar_closed_form";
        case WceMethod::ExpectilePrimal: return "expectile_primal";
        case WceMethod::ExpectileDual: return "expectile_dual";
        case WceMethod::ExpectileClosedForm: return "expectile_closed_form";
        case WceMethod::BruteForce: return "brute_force";
        case WceMethod::SphereAverage: return "sphere_average";
    }
    return "unknown";
}

namespace {

constexpr double kMassTol = 1e-10;

// Weights with the rounding residue moved onto the largest entry.
DiscreteDistribution make_distribution(Matrix points, Vec weights) {
    double s = 0.0;
    for (double& w : weights) {
        w = std::max(w, 0.0);
        s += w;
    }
    for (double& w : weights) w /= s;
    std::size_t k = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (weights[i] > weights[k]) k = i;
    double t = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (i != k) t += weights[i];
    weights[k] = 1.0 - t;
    return DiscreteDistribution(std::move(points), std::move(weights));
}

void check_loss_dim(const LossFunction& loss, const DiscreteDistribution& S) {
    if (loss.dim() != S.dim()) throw Error(ErrorCode::DimensionMismatch, "worst case: loss/sample dimension mismatch");
}

void check_eps(double eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidArgument, "worst case: ε must be finite and ≥ 0");
}

std::vector<AffinePiece> convex_pieces(const LossFunction& loss) {
    if (!loss.is_convex()) throw Error(ErrorCode::InvalidArgument, "worst case: convex loss required");
    return loss.kind() == LossFunction::Kind::MaxAffine ? loss.pieces() : loss.as_max_affine().pieces();
}

std::vector<AffinePiece> concave_pieces(const LossFunction& loss) {
    if (loss.kind() == LossFunction::Kind::MinAffine) return loss.pieces();
    if (loss.kind() == LossFunction::Kind::MaxAffine && loss.pieces().size() == 1) return loss.pieces();
    throw Error(ErrorCode::InvalidArgument, "worst case: concave (min-affine) loss required");
}

WceResult saa_result(const LossFunction& loss, const DiscreteDistribution& S, WceMethod method) {
    WceResult r;
    r.value = saa_value(loss, S);
    r.method = method;
    r.worst_case = WorstCaseDistribution{S, std::nullopt, true};
    r.diagnostics.duality_gap = 0.0;
    return r;
}

std::vector<int> add_free_block(LpBuilder& b, std::size_t m) {
    std::vector<int> v(m);
    for (auto& j : v) j = b.add_free();
    return v;
}

// Unit direction along which the loss grows at its Lipschitz rate.
Vec escape_direction(const LossFunction& loss, NormKind norm) {
    if (loss.kind() == LossFunction::Kind::ScalarComposite) {
        const auto& env = loss.scalar().envelope();
        const bool right = std::fabs(env.back().slope) >= std::fabs(env.front().slope);
        Vec u = unit_maximizer(loss.direction(), norm);
        if (!right)
            for (double& v : u) v = -v;
        return u;
    }
    const auto& P = loss.pieces();
    std::size_t k = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < P.size(); ++j) {
        const double d = dual_norm(P[j].a, norm);
        if (d > best) {
            best = d;
            k = j;
        }
    }
    return unit_maximizer(P[k].a, norm);
}

struct Geometry {
    const DiscreteDistribution& S;
    std::size_t N, m;
    const Matrix& G;
    const Vec& h;
    NormKind norm;
    double eps;

    explicit Geometry(const AmbiguityBall& ball)
        : S(ball.center), N(ball.center.size()), m(ball.center.dim()), G(ball.support.rows_G()),
          h(ball.support.rows_h()), norm(ball.norm), eps(ball.radius) {}
};

// Atoms ξ̂_i + y_ij/p_ij and escaping rays (p_ij = 0, y_ij ≠ 0) from a perspective solution.
WorstCaseDistribution extract_perspective(const Geometry& g, const std::vector<std::vector<double>>& p,
                                          const std::vector<std::vector<Vec>>& y) {
    std::vector<SampleLaw> laws(g.N);
    bool escaping = false;
    double scale = 0.0;
    for (std::size_t i = 0; i < g.N; ++i) {
        SampleLaw& law = laws[i];
        Vec ray(g.m, 0.0);
        for (std::size_t j = 0; j < p[i].size(); ++j) {
            const double ny = norm(y[i][j], g.norm);
            if (p[i][j] > kMassTol) {
                Vec pt = g.S.point(i);
                for (std::size_t d = 0; d < g.m; ++d) pt[d] += y[i][j][d] / p[i][j];
                law.atoms.push_back(pt);
                law.probs.push_back(p[i][j]);
            } else if (ny > 1e-9) {
                for (std::size_t d = 0; d < g.m; ++d) ray[d] += y[i][j][d];
            }
        }
        const double nr = norm(ray, g.norm);
        if (nr > 1e-9) {
            law.escaping = true;
            law.escape_coef = nr;
            for (double& v : ray) v /= nr;
            law.direction = ray;
            escaping = true;
            scale = std::max(scale, nr);
        }
        double s = 0.0;
        for (double q : law.probs) s += q;
        for (double& q : law.probs) q /= s;
    }
    WorstCaseDistribution wc;
    if (!escaping) {
        Matrix pts;
        Vec ws;
        for (std::size_t i = 0; i < g.N; ++i)
            for (std::size_t k = 0; k < laws[i].atoms.size(); ++k) {
                pts.push_back(laws[i].atoms[k]);
                ws.push_back(g.S.weight(i) * laws[i].probs[k]);
            }
        wc.exact = make_distribution(std::move(pts), std::move(ws));
        wc.attained = true;
    } else {
        wc.asymptotic_family = AsymptoticFamily{g.S, std::move(laws), scale};
        wc.attained = false;
    }
    return wc;
}

// Perspective program shared by the CVaR (fixed t) and expectile primals.
struct PerspectiveLp {
    LpBuilder b;
    std::vector<std::vector<int>> p, r, q;
    std::vector<std::vector<std::vector<int>>> y;
};

PerspectiveLp build_perspective(const Geometry& g, const std::vector<AffinePiece>& pieces) {
    PerspectiveLp lp;
    const std::size_t K = pieces.size();
    lp.p.assign(g.N, std::vector<int>(K));
    lp.r = lp.q = lp.p;
    lp.y.assign(g.N, std::vector<std::vector<int>>(K));
    for (std::size_t i = 0; i < g.N; ++i) {
        const double w = g.S.weight(i);
        LinExpr simplex(-1.0);
        for (std::size_t j = 0; j < K; ++j) {
            const auto& a = pieces[j].a;
            const double z = dot(a, g.S.point(i)) + pieces[j].b;
            const int pj = lp.b.add_nonneg(-w * z);
            auto yj = add_free_block(lp.b, g.m);
            for (std::size_t d = 0; d < g.m; ++d) lp.b.set_cost(yj[d], -w * a[d]);
            const int rj = lp.b.add_nonneg();
            const int qj = lp.b.add_nonneg();
            std::vector<LinExpr> comps;
            for (int v : yj) comps.push_back(LinExpr::var(v));
            lp.b.add_norm_le(comps, LinExpr::var(rj), g.norm);
            // G y ≤ (h − Gξ̂_i) p
            for (std::size_t row = 0; row < g.G.size(); ++row) {
                LinExpr e;
                for (std::size_t d = 0; d < g.m; ++d)
                    if (g.G[row][d] != 0.0) e.add(yj[d], g.G[row][d]);
                e.add(pj, -(g.h[row] - dot(g.G[row], g.S.point(i))));
                lp.b.add_le(e);
            }
            simplex.add(pj, 1.0);
            lp.p[i][j] = pj;
            lp.r[i][j] = rj;
            lp.q[i][j] = qj;
            lp.y[i][j] = yj;
        }
        lp.b.add_eq(simplex);
    }
    return lp;
}

// Shrinks each displacement onto its L2 cone; G y ≤ (h − Gξ̂)p survives the scaling.
LpBuilder::Repair perspective_repair(const PerspectiveLp& lp) {
    return [y = lp.y, r = lp.r](Vec& x) {
        for (std::size_t i = 0; i < y.size(); ++i)
            for (std::size_t j = 0; j < y[i].size(); ++j) {
                double ny = 0.0;
                for (int v : y[i][j]) ny += x[v] * x[v];
                ny = std::sqrt(ny);
                const double rv = std::max(0.0, x[r[i][j]]);
                if (ny > rv) {
                    for (int v : y[i][j]) x[v] *= rv / ny;
                }
            }
    };
}

WorstCaseDistribution extract_from(const Geometry& g, const PerspectiveLp& lp, const Vec& x) {
    std::vector<std::vector<double>> p(g.N);
    std::vector<std::vector<Vec>> y(g.N);
    for (std::size_t i = 0; i < g.N; ++i)
        for (std::size_t j = 0; j < lp.p[i].size(); ++j) {
            p[i].push_back(std::max(0.0, x[lp.p[i][j]]));
            Vec v(g.m);
            for (std::size_t d = 0; d < g.m; ++d) v[d] = x[lp.y[i][j][d]];
            y[i].push_back(v);
        }
    return extract_perspective(g, p, y);
}

void require_status(const LpResult& res, const char* what) {
    if (res.status == LpStatus::Infeasible) throw Error(ErrorCode::Infeasible, std::string(what) + ": infeasible program");
    if (res.status == LpStatus::Unbounded) throw Error(ErrorCode::Unbounded, std::string(what) + ": unbounded program");
}

}  // namespace

DiscreteDistribution AsymptoticFamily::member(int n) const {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "family member index must be ≥ 1");
    const double D = escape_distance(n);
    Matrix pts;
    Vec ws;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const SampleLaw& law = laws[i];
        const double w = center.weight(i);
        const double q = law.escaping ? std::min(1.0, law.escape_coef / D) : 0.0;
        for (std::size_t k = 0; k < law.atoms.size(); ++k) {
            pts.push_back(law.atoms[k]);
            ws.push_back(w * (1.0 - q) * law.probs[k]);
        }
        if (law.escaping) {
            pts.push_back(axpy(D, law.direction, center.point(i)));
            ws.push_back(w * q);
        }
    }
    return make_distribution(std::move(pts), std::move(ws));
}

double saa_value(const LossFunction& loss, const DiscreteDistribution& samples) {
    check_loss_dim(loss, samples);
    double v = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) v += samples.weight(i) * loss.evaluate(samples.point(i));
    return v;
}

// ---------------------------------------------------------------------------
// Closed forms

WceResult wce_closed_form_cvar(const LossFunction& loss, const DiscreteDistribution& samples, double eps,
                               double alpha, NormKind norm) {
    check_loss_dim(loss, samples);
    check_eps(eps);
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "CVaR level must lie in [0,1)");
    if (!loss.is_convex()) throw Error(ErrorCode::InvalidArgument, "closed form: convex loss required");
    const std::size_t N = samples.size();
    const double L = loss.lipschitz(norm);
    const double saa = saa_value(loss, samples);
    double b1 = 0.0;
    Matrix moved(N);
    for (std::size_t i = 0; i < N; ++i) {
        const SphereMax sm = sphere_max(loss, samples.point(i), eps, norm);
        b1 += samples.weight(i) * sm.value;
        moved[i] = axpy(eps, sm.maximizer, samples.point(i));
    }
    const double b2 = saa + L * (1.0 - alpha) * eps;
    WceResult r;
    r.method = WceMethod::CvarClosedForm;
    r.diagnostics.branch_sphere = b1;
    r.diagnostics.branch_wasserstein = b2;
    if (b1 >= b2) {
        r.value = b1;
        r.diagnostics.active_branch = 1;
        r.worst_case = WorstCaseDistribution{make_distribution(moved, samples.weights()), std::nullopt, true};
    } else {
        r.value = b2;
        r.diagnostics.active_branch = 2;
        const Vec u = escape_direction(loss, norm);
        std::vector<SampleLaw> laws(N);
        for (std::size_t i = 0; i < N; ++i) laws[i] = {{samples.point(i)}, {1.0}, true, u, (1.0 - alpha) * eps};
        r.worst_case = WorstCaseDistribution{std::nullopt, AsymptoticFamily{samples, std::move(laws), eps}, false};
    }
    return r;
}

WceResult wce_closed_form_expectile(const LossFunction& loss, const DiscreteDistribution& samples, double eps,
                                    double alpha, NormKind norm) {
    check_loss_dim(loss, samples);
    check_eps(eps);
    if (!(alpha >= 0.5 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "expectile level must lie in [1/2,1)");
    if (!loss.is_convex()) throw Error(ErrorCode::InvalidArgument, "closed form: convex loss required");
    const std::size_t N = samples.size();
    const double L = loss.lipschitz(norm);
    const double beta = (1.0 - alpha) / alpha;
    WceResult r;
    r.method = WceMethod::ExpectileClosedForm;
    r.diagnostics.escaping.assign(N, 0);
    std::vector<SampleLaw> laws(N);
    bool any = false;
    double sphere_avg = 0.0, shift_avg = 0.0;
    const Vec u = escape_direction(loss, norm);
    for (std::size_t i = 0; i < N; ++i) {
        const double li = loss.evaluate(samples.point(i));
        const SphereMax sm = sphere_max(loss, samples.point(i), eps, norm);
        const double shifted = li + beta * L * eps;
        sphere_avg += samples.weight(i) * sm.value;
        shift_avg += samples.weight(i) * shifted;
        if (shifted > sm.value) {
            r.value += samples.weight(i) * shifted;
            r.diagnostics.escaping[i] = 1;
            laws[i] = {{samples.point(i)}, {1.0}, true, u, beta * eps};
            any = true;
        } else {
            r.value += samples.weight(i) * sm.value;
            laws[i] = {{axpy(eps, sm.maximizer, samples.point(i))}, {1.0}, false, {}, 0.0};
        }
    }
    r.diagnostics.branch_sphere = sphere_avg;
    r.diagnostics.branch_wasserstein = shift_avg;
    if (!any) {
        Matrix pts;
        for (const auto& law : laws) pts.push_back(law.atoms.front());
        r.worst_case = WorstCaseDistribution{make_distribution(pts, samples.weights()), std::nullopt, true};
    } else {
        r.worst_case = WorstCaseDistribution{std::nullopt, AsymptoticFamily{samples, std::move(laws), eps}, false};
    }
    return r;
}

// ---------------------------------------------------------------------------
// Concave losses

WceResult wce_concave_primal(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    const auto pieces = concave_pieces(loss);
    check_loss_dim(loss, ball.center);
    if (ball.risk.kind() == RiskSpec::Kind::EssSup)
        throw Error(ErrorCode::InvalidArgument, "concave primal: ess-sup ball not supported (use the type-∞ path)");
    const Geometry g(ball);
    if (g.eps == 0.0) return saa_result(loss, g.S, WceMethod::ConcavePrimal);
    LpBuilder b;
    std::vector<std::vector<int>> y(g.N);
    std::vector<int> r(g.N);
    for (std::size_t i = 0; i < g.N; ++i) {
        const double w = g.S.weight(i);
        y[i] = add_free_block(b, g.m);
        const int tau = b.add_free(-w);
        r[i] = b.add_nonneg();
        for (const auto& pc : pieces) {
            LinExpr e = LinExpr::var(tau);
            e.constant = -pc.b;
            for (std::size_t d = 0; d < g.m; ++d) e.add(y[i][d], -pc.a[d]);
            b.add_le(e);
        }
        for (std::size_t row = 0; row < g.G.size(); ++row) {
            LinExpr e(-g.h[row]);
            for (std::size_t d = 0; d < g.m; ++d)
                if (g.G[row][d] != 0.0) e.add(y[i][d], g.G[row][d]);
            b.add_le(e);
        }
        std::vector<LinExpr> comps;
        for (std::size_t d = 0; d < g.m; ++d) comps.push_back(LinExpr::var(y[i][d]) - LinExpr(g.S.point(i)[d]));
        b.add_norm_le(comps, LinExpr::var(r[i]), g.norm);
    }
    const double a = ball.risk.alpha();
    switch (ball.risk.kind()) {
        case RiskSpec::Kind::Expectation: {
            LinExpr e(-g.eps);
            for (std::size_t i = 0; i < g.N; ++i) e.add(r[i], g.S.weight(i));
            b.add_le(e);
            break;
        }
        case RiskSpec::Kind::CVaR: {
            const int t = b.add_nonneg();
            LinExpr budget = LinExpr::var(t) - LinExpr(g.eps);
            for (std::size_t i = 0; i < g.N; ++i) {
                const int u = b.add_nonneg();
                b.add_le(LinExpr::var(r[i]) - LinExpr::var(t) - LinExpr::var(u));
                budget.add(u, g.S.weight(i) / (1.0 - a));
            }
            b.add_le(budget);
            break;
        }
        case RiskSpec::Kind::Expectile: {
            // (2α−1) E(X−ε)₊ ≤ (1−α)(ε − E X)
            LinExpr budget(-(1.0 - a) * g.eps);
            for (std::size_t i = 0; i < g.N; ++i) {
                const int u = b.add_nonneg();
                b.add_le(LinExpr::var(r[i]) - LinExpr::var(u) - LinExpr(g.eps));
                budget.add(u, (2.0 * a - 1.0) * g.S.weight(i));
                budget.add(r[i], (1.0 - a) * g.S.weight(i));
            }
            b.add_le(budget);
            break;
        }
        case RiskSpec::Kind::EssSup: break;
    }
    const LpResult res = b.solve(opt.max_cut_rounds);
    require_status(res, "concave primal");
    WceResult out;
    out.method = WceMethod::ConcavePrimal;
    out.value = -res.objective;
    out.diagnostics.iterations = b.cut_rounds();
    out.diagnostics.cut_rounds = b.cut_rounds();
    if (opt.extract_worst_case) {
        Matrix pts(g.N, Vec(g.m));
        for (std::size_t i = 0; i < g.N; ++i)
            for (std::size_t d = 0; d < g.m; ++d) pts[i][d] = res.x[y[i][d]];
        out.worst_case = WorstCaseDistribution{make_distribution(pts, g.S.weights()), std::nullopt, true};
    }
    return out;
}

WceResult wce_concave_dual(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    const auto pieces = concave_pieces(loss);
    check_loss_dim(loss, ball.center);
    if (ball.risk.kind() == RiskSpec::Kind::EssSup)
        throw Error(ErrorCode::InvalidArgument, "concave dual: ess-sup ball not supported");
    const Geometry g(ball);
    const double a = ball.risk.alpha();
    LpBuilder b;
    const int lam = b.add_nonneg(g.eps);
    std::vector<LinExpr> p(g.N);
    if (ball.risk.kind() == RiskSpec::Kind::Expectation) {
        for (auto& e : p) e = LinExpr::var(lam);
    } else {
        LinExpr envelope = -1.0 * LinExpr::var(lam);
        for (std::size_t i = 0; i < g.N; ++i) {
            const int v = b.add_nonneg();
            p[i] = LinExpr::var(v);
            envelope.add(v, opt.envelope_scaling == EnvelopeScaling::MeanNormalized ? g.S.weight(i) : 1.0);
        }
        b.add_eq(envelope);
        if (ball.risk.kind() == RiskSpec::Kind::CVaR) {
            for (std::size_t i = 0; i < g.N; ++i) b.add_le(p[i] - (1.0 / (1.0 - a)) * LinExpr::var(lam));
        } else {
            const double ratio = a / (1.0 - a);
            for (std::size_t i = 0; i < g.N; ++i)
                for (std::size_t j = 0; j < g.N; ++j)
                    if (i != j) b.add_le(p[i] - ratio * p[j]);
        }
    }
    for (std::size_t i = 0; i < g.N; ++i) {
        const int s = b.add_free(g.S.weight(i));
        std::vector<int> mu(pieces.size());
        LinExpr simplex(-1.0);
        for (auto& v : mu) {
            v = b.add_nonneg();
            simplex.add(v, 1.0);
        }
        b.add_eq(simplex);
        std::vector<int> eta(g.G.size());
        for (auto& v : eta) v = b.add_nonneg();
        const auto z = add_free_block(b, g.m);
        // Gᵀη = Σ μ_k a_k + z
        for (std::size_t d = 0; d < g.m; ++d) {
            LinExpr e;
            for (std::size_t row = 0; row < g.G.size(); ++row)
                if (g.G[row][d] != 0.0) e.add(eta[row], g.G[row][d]);
            for (std::size_t k = 0; k < pieces.size(); ++k)
                if (pieces[k].a[d] != 0.0) e.add(mu[k], -pieces[k].a[d]);
            e.add(z[d], -1.0);
            b.add_eq(e);
        }
        // hᵀη + Σ μ_k b_k − zᵀξ̂_i ≤ s_i
        LinExpr e = -1.0 * LinExpr::var(s);
        for (std::size_t row = 0; row < g.G.size(); ++row) e.add(eta[row], g.h[row]);
        for (std::size_t k = 0; k < pieces.size(); ++k) e.add(mu[k], pieces[k].b);
        for (std::size_t d = 0; d < g.m; ++d) e.add(z[d], -g.S.point(i)[d]);
        b.add_le(e);
        std::vector<LinExpr> comps;
        for (int v : z) comps.push_back(LinExpr::var(v));
        b.add_norm_le(comps, p[i], dual(g.norm));
    }
    const LpResult res = b.solve(opt.max_cut_rounds);
    require_status(res, "concave dual");
    WceResult out;
    out.method = WceMethod::ConcaveDual;
    out.value = res.objective;
    out.diagnostics.iterations = b.cut_rounds();
    out.diagnostics.cut_rounds = b.cut_rounds();
    out.diagnostics.lambda = res.x[lam];
    return out;
}

// ---------------------------------------------------------------------------
// Convex piecewise-linear losses

WceResult wce_cvx_pwl_cvar(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    check_loss_dim(loss, ball.center);
    double alpha = 0.0;
    if (ball.risk.kind() == RiskSpec::Kind::CVaR) alpha = ball.risk.alpha();
    else if (ball.risk.kind() != RiskSpec::Kind::Expectation)
        throw Error(ErrorCode::InvalidArgument, "cvar engine: CVaR or expectation ball required");
    if (ball.support.is_unconstrained() && !opt.force_finite_dim)
        return wce_closed_form_cvar(loss, ball.center, ball.radius, alpha, ball.norm);
    const auto pieces = convex_pieces(loss);
    const Geometry g(ball);
    if (g.eps == 0.0) return saa_result(loss, g.S, WceMethod::CvarFiniteDim);

    std::vector<std::pair<std::size_t, Vec>> pool;
    int solves = 0, rounds = 0;
    auto solve_at = [&](double t, Vec* x, PerspectiveLp* keep) {
        PerspectiveLp lp = build_perspective(g, pieces);
        LinExpr budget(t - g.eps);
        for (std::size_t i = 0; i < g.N; ++i)
            for (std::size_t j = 0; j < pieces.size(); ++j) {
                // q ≥ r − t p
                lp.b.add_le(LinExpr::var(lp.r[i][j]) - t * LinExpr::var(lp.p[i][j]) - LinExpr::var(lp.q[i][j]));
                budget.add(lp.q[i][j], g.S.weight(i) / (1.0 - alpha));
            }
        lp.b.add_le(budget);
        for (const auto& [cone, dir] : pool) lp.b.add_cut(cone, dir);
        const LpResult res = lp.b.solve(opt.max_cut_rounds, g.norm == NormKind::L2 ? perspective_repair(lp) : nullptr);
        require_status(res, "cvar finite-dimensional program");
        pool = lp.b.active_cuts(res.x, 1e-6);
        ++solves;
        rounds += lp.b.cut_rounds();
        if (x) *x = res.x;
        if (keep) *keep = std::move(lp);
        return -res.objective;
    };
    const GridMin gm = grid_min([&](double t) { return -solve_at(t, nullptr, nullptr); }, 0.0, g.eps,
                                std::max(2, opt.t_grid), opt.t_tol);
    WceResult out;
    out.method = WceMethod::CvarFiniteDim;
    out.value = -gm.value;
    out.diagnostics.t_star = gm.t;
    if (opt.extract_worst_case) {
        Vec x;
        PerspectiveLp lp;
        solve_at(gm.t, &x, &lp);
        out.worst_case = extract_from(g, lp, x);
    }
    out.diagnostics.iterations = solves;
    out.diagnostics.cut_rounds = rounds;
    return out;
}

WceResult wce_cvx_pwl_expectile_primal(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    check_loss_dim(loss, ball.center);
    if (ball.risk.kind() != RiskSpec::Kind::Expectile) throw Error(ErrorCode::InvalidArgument, "expectile engine: expectile ball required");
    const double alpha = ball.risk.alpha();
    if (!(alpha > 0.5)) throw Error(ErrorCode::InvalidArgument, "expectile primal: α = 1/2 has no finite β' (use the type-1 path)");
    const auto pieces = convex_pieces(loss);
    const Geometry g(ball);
    if (g.eps == 0.0) return saa_result(loss, g.S, WceMethod::ExpectilePrimal);
    const double bp = (1.0 - alpha) / (2.0 * alpha - 1.0);
    PerspectiveLp lp = build_perspective(g, pieces);
    LinExpr budget(-bp * g.eps);
    for (std::size_t i = 0; i < g.N; ++i)
        for (std::size_t j = 0; j < pieces.size(); ++j) {
            // q ≥ r − ε p
            lp.b.add_le(LinExpr::var(lp.r[i][j]) - g.eps * LinExpr::var(lp.p[i][j]) - LinExpr::var(lp.q[i][j]));
            budget.add(lp.q[i][j], g.S.weight(i));
            budget.add(lp.r[i][j], bp * g.S.weight(i));
        }
    lp.b.add_le(budget);
    const LpResult res = lp.b.solve(opt.max_cut_rounds, g.norm == NormKind::L2 ? perspective_repair(lp) : nullptr);
    require_status(res, "expectile primal");
    WceResult out;
    out.method = WceMethod::ExpectilePrimal;
    out.value = -res.objective;
    out.diagnostics.iterations = lp.b.cut_rounds();
    out.diagnostics.cut_rounds = lp.b.cut_rounds();
    if (opt.extract_worst_case) out.worst_case = extract_from(g, lp, res.x);
    return out;
}

WceResult wce_cvx_pwl_expectile_dual(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    check_loss_dim(loss, ball.center);
    if (ball.risk.kind() != RiskSpec::Kind::Expectile) throw Error(ErrorCode::InvalidArgument, "expectile engine: expectile ball required");
    const double alpha = ball.risk.alpha();
    if (!(alpha > 0.5)) throw Error(ErrorCode::InvalidArgument, "expectile dual: α = 1/2 has no finite β' (use the type-1 path)");
    const auto pieces = convex_pieces(loss);
    const Geometry g(ball);
    const double bp = (1.0 - alpha) / (2.0 * alpha - 1.0);
    const NormKind dn = dual(g.norm);
    LpBuilder b;
    const double lam_cost = opt.expectile_dual_objective == ExpectileDualObjective::Scaled ? bp * g.eps : g.eps;
    const int lam = b.add_nonneg(lam_cost);
    for (std::size_t i = 0; i < g.N; ++i) {
        const int s = b.add_free(g.S.weight(i));
        for (std::size_t j = 0; j < pieces.size(); ++j) {
            const auto& aj = pieces[j].a;
            std::vector<LinExpr> u(g.m);
            LinExpr row = -1.0 * LinExpr::var(s);
            row.constant = pieces[j].b;
            if (g.G.empty()) {
                // σ_Ξ(u + a) finite only for u = −a.
                for (std::size_t d = 0; d < g.m; ++d) u[d] = LinExpr(-aj[d]);
            } else {
                std::vector<int> eta(g.G.size());
                for (auto& v : eta) v = b.add_nonneg();
                for (std::size_t d = 0; d < g.m; ++d) u[d] = LinExpr::var(b.add_free());
                // Gᵀη = u + a, σ_Ξ(u + a) ≤ hᵀη
                for (std::size_t d = 0; d < g.m; ++d) {
                    LinExpr e = -1.0 * u[d];
                    e.constant = -aj[d];
                    for (std::size_t r = 0; r < g.G.size(); ++r)
                        if (g.G[r][d] != 0.0) e.add(eta[r], g.G[r][d]);
                    b.add_eq(e);
                }
                for (std::size_t r = 0; r < g.G.size(); ++r) row.add(eta[r], g.h[r]);
            }
            for (std::size_t d = 0; d < g.m; ++d) row += (-g.S.point(i)[d]) * u[d];
            const int kappa = b.add_nonneg();
            row.add(kappa, g.eps);
            b.add_le(row);
            const auto v = add_free_block(b, g.m);
            std::vector<LinExpr> vc, uv;
            for (std::size_t d = 0; d < g.m; ++d) {
                vc.push_back(LinExpr::var(v[d]));
                uv.push_back(u[d] + LinExpr::var(v[d]));
            }
            b.add_norm_le(vc, LinExpr::var(kappa), dn);
            b.add_le(LinExpr::var(kappa) - LinExpr::var(lam));
            b.add_norm_le(uv, bp * LinExpr::var(lam), dn);
        }
    }
    const LpResult res = b.solve(opt.max_cut_rounds);
    require_status(res, "expectile dual");
    WceResult out;
    out.method = WceMethod::ExpectileDual;
    out.value = res.objective;
    out.diagnostics.iterations = b.cut_rounds();
    out.diagnostics.cut_rounds = b.cut_rounds();
    out.diagnostics.lambda = res.x[lam];
    return out;
}

// ---------------------------------------------------------------------------
// Type-∞ ball

WceResult wce_type_inf(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    check_loss_dim(loss, ball.center);
    const Geometry g(ball);
    WceResult out;
    out.method = WceMethod::SphereAverage;
    Matrix pts(g.N);
    if (ball.support.is_unconstrained() && loss.is_convex()) {
        for (std::size_t i = 0; i < g.N; ++i) {
            const SphereMax sm = sphere_max(loss, g.S.point(i), g.eps, g.norm);
            out.value += g.S.weight(i) * sm.value;
            pts[i] = axpy(g.eps, sm.maximizer, g.S.point(i));
        }
    } else {
        // max over y ∈ Ξ, ‖y − ξ̂_i‖ ≤ ε: one LP per piece (convex) or one LP (concave).
        const bool concave = !loss.is_convex();
        const auto pieces = concave ? concave_pieces(loss) : convex_pieces(loss);
        for (std::size_t i = 0; i < g.N; ++i) {
            double best = -kInf;
            const std::size_t runs = concave ? 1 : pieces.size();
            for (std::size_t j = 0; j < runs; ++j) {
                LpBuilder b;
                const auto y = add_free_block(b, g.m);
                if (concave) {
                    const int tau = b.add_free(-1.0);
                    for (const auto& pc : pieces) {
                        LinExpr e = LinExpr::var(tau);
                        e.constant = -pc.b;
                        for (std::size_t d = 0; d < g.m; ++d) e.add(y[d], -pc.a[d]);
                        b.add_le(e);
                    }
                } else {
                    for (std::size_t d = 0; d < g.m; ++d) b.set_cost(y[d], -pieces[j].a[d]);
                }
                for (std::size_t row = 0; row < g.G.size(); ++row) {
                    LinExpr e(-g.h[row]);
                    for (std::size_t d = 0; d < g.m; ++d) e.add(y[d], g.G[row][d]);
                    b.add_le(e);
                }
                std::vector<LinExpr> comps;
                for (std::size_t d = 0; d < g.m; ++d) comps.push_back(LinExpr::var(y[d]) - LinExpr(g.S.point(i)[d]));
                b.add_norm_le(comps, LinExpr(g.eps), g.norm);
                const LpResult res = b.solve(opt.max_cut_rounds);
                require_status(res, "type-inf program");
                ++out.diagnostics.iterations;
                const double v = -res.objective + (concave ? 0.0 : pieces[j].b);
                if (v > best) {
                    best = v;
                    pts[i].assign(g.m, 0.0);
                    for (std::size_t d = 0; d < g.m; ++d) pts[i][d] = res.x[y[d]];
                }
            }
            out.value += g.S.weight(i) * best;
        }
    }
    out.worst_case = WorstCaseDistribution{make_distribution(pts, g.S.weights()), std::nullopt, true};
    return out;
}

// ---------------------------------------------------------------------------
// Dispatch

WceResult worst_case_expectation(const LossFunction& loss, const AmbiguityBall& ball, const WceOptions& opt) {
    check_loss_dim(loss, ball.center);
    const RiskSpec& risk = ball.risk;
    if (risk.kind() == RiskSpec::Kind::EssSup) return wce_type_inf(loss, ball, opt);
    if (!loss.is_convex()) return wce_concave_primal(loss, ball, opt);
    const bool free = ball.support.is_unconstrained();
    switch (risk.kind()) {
        case RiskSpec::Kind::Expectation:
        case RiskSpec::Kind::CVaR: return wce_cvx_pwl_cvar(loss, ball, opt);
        case RiskSpec::Kind::Expectile: {
            if (free) return wce_closed_form_expectile(loss, ball.center, ball.radius, risk.alpha(), ball.norm);
            if (risk.alpha() == 0.5) {
                AmbiguityBall w1(RiskSpec::expectation(), ball.norm, ball.radius, ball.center, ball.support);
                return wce_cvx_pwl_cvar(loss, w1, opt);
            }
            if (ball.norm != NormKind::L2) return wce_cvx_pwl_expectile_dual(loss, ball, opt);
            return wce_cvx_pwl_expectile_primal(loss, ball, opt);
        }
        case RiskSpec::Kind::EssSup: break;
    }
    throw Error(ErrorCode::InvalidArgument, "worst case: unsupported configuration");
}

// ---------------------------------------------------------------------------
// Attainability

AttainabilityReport attainability_threshold(const LossFunction& loss, const DiscreteDistribution& samples,
                                            double eps, NormKind norm, RiskFamily family) {
    check_loss_dim(loss, samples);
    check_eps(eps);
    if (!loss.is_convex()) throw Error(ErrorCode::InvalidArgument, "attainability: convex loss required");
    const std::size_t N = samples.size();
    const double L = loss.lipschitz(norm);
    const double scale = L * eps;
    Vec gain(N);
    for (std::size_t i = 0; i < N; ++i)
        gain[i] = sphere_max(loss, samples.point(i), eps, norm).value - loss.evaluate(samples.point(i));
    const double tol = 1e-12 * (1.0 + scale);
    AttainabilityReport rep;
    if (family == RiskFamily::CVaR) {
        double avg = 0.0;
        for (std::size_t i = 0; i < N; ++i) avg += samples.weight(i) * gain[i];
        rep.guaranteed = std::any_of(gain.begin(), gain.end(), [&](double v) { return v > tol; });
        rep.alpha_star = scale > 0.0 ? std::clamp(1.0 - avg / scale, 0.0, 1.0) : 0.0;
        rep.note = rep.guaranteed ? "sphere gain positive for some sample" : "no sample has a positive sphere gain";
    } else {
        rep.per_sample_alpha.resize(N);
        rep.guaranteed = true;
        for (std::size_t i = 0; i < N; ++i) {
            const double bi = scale > 0.0 ? gain[i] / scale : kInf;
            rep.per_sample_alpha[i] = bi > 0.0 ? std::max(0.5, 1.0 / (1.0 + bi)) : 1.0;
            if (!(gain[i] > tol)) rep.guaranteed = false;
            rep.alpha_star = std::max(rep.alpha_star, rep.per_sample_alpha[i]);
        }
        if (N == 0) rep.alpha_star = 0.5;
        rep.alpha_star = std::max(rep.alpha_star, 0.5);
        rep.note = rep.guaranteed ? "sphere gain positive for every sample" : "NotGuaranteed: some sample has no sphere gain";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Expectile primal feasibility

double expectile_budget_slack(const AmbiguityBall& ball, const ExpectilePrimalPoint& pt) {
    if (ball.risk.kind() != RiskSpec::Kind::Expectile || !(ball.risk.alpha() > 0.5))
        throw Error(ErrorCode::InvalidArgument, "expectile budget: expectile ball with α > 1/2 required");
    const double a = ball.risk.alpha();
    const double bp = (1.0 - a) / (2.0 * a - 1.0);
    const auto& S = ball.center;
    if (pt.p.size() != S.size() || pt.y.size() != S.size())
        throw Error(ErrorCode::DimensionMismatch, "expectile budget: point does not match the sample count");
    double lhs = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = 0; j < pt.p[i].size(); ++j) {
            const double ny = norm(pt.y[i][j], ball.norm);
            lhs += S.weight(i) * (std::max(ny - ball.radius * pt.p[i][j], 0.0) + bp * ny);
        }
    return bp * ball.radius - lhs;
}

bool expectile_primal_feasible(const AmbiguityBall& ball, const ExpectilePrimalPoint& pt, double tol) {
    if (expectile_budget_slack(ball, pt) < -tol) return false;
    const auto& S = ball.center;
    for (std::size_t i = 0; i < S.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < pt.p[i].size(); ++j) {
            const double p = pt.p[i][j];
            if (p < -tol) return false;
            s += p;
            const double ny = norm(pt.y[i][j], ball.norm);
            if (p <= 0.0) {
                if (ny > tol) return false;  // y/0 reads as ∞
                continue;
            }
            Vec x = S.point(i);
            for (std::size_t d = 0; d < x.size(); ++d) x[d] += pt.y[i][j][d] / p;
            // Perspective membership scaled by p: G(pξ̂ + y) ≤ p h.
            for (std::size_t r = 0; r < ball.support.rows_G().size(); ++r)
                if (p * (dot(ball.support.rows_G()[r], x) - ball.support.rows_h()[r]) > tol) return false;
        }
        if (std::fabs(s - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace gwdro
