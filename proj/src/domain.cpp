#include "gwdro/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gwdro/convex_kernel.hpp"

namespace gwdro {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec axpy(double alpha, const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "axpy: size mismatch");
    Vec r(y);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
    return r;
}

// ---------------------------------------------------------------------------

DiscreteDistribution::DiscreteDistribution(Matrix points, Vec weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw Error(ErrorCode::EmptyInput, "distribution: no support points");
    if (points_.size() != weights_.size())
        throw Error(ErrorCode::DimensionMismatch, "distribution: points/weights size mismatch");
    const std::size_t m = points_.front().size();
    if (m == 0) throw Error(ErrorCode::DimensionMismatch, "distribution: dimension must be ≥ 1");
    for (const auto& p : points_) {
        if (p.size() != m) throw Error(ErrorCode::DimensionMismatch, "distribution: ragged points");
        for (double v : p)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "distribution: non-finite point");
    }
    double s = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorCode::InvalidWeights, "distribution: negative or non-finite weight");
        s += w;
    }
    if (std::fabs(s - 1.0) > 1e-12) throw Error(ErrorCode::InvalidWeights, "distribution: weights must sum to 1");
}

DiscreteDistribution DiscreteDistribution::uniform(Matrix points) {
    const std::size_t n = points.size();
    if (n == 0) throw Error(ErrorCode::EmptyInput, "distribution: no support points");
    return DiscreteDistribution(std::move(points), Vec(n, 1.0 / static_cast<double>(n)));
}

DiscreteDistribution DiscreteDistribution::dirac(Vec point) {
    return DiscreteDistribution(Matrix{std::move(point)}, Vec{1.0});
}

Coupling::Coupling(DiscreteDistribution left, DiscreteDistribution right, Matrix mass)
    : left_(std::move(left)), right_(std::move(right)), mass_(std::move(mass)) {
    if (mass_.size() != left_.size())
        throw Error(ErrorCode::DimensionMismatch, "coupling: row count mismatch");
    Vec col(right_.size(), 0.0);
    for (std::size_t i = 0; i < mass_.size(); ++i) {
        if (mass_[i].size() != right_.size())
            throw Error(ErrorCode::DimensionMismatch, "coupling: column count mismatch");
        double row = 0.0;
        for (std::size_t j = 0; j < mass_[i].size(); ++j) {
            if (mass_[i][j] < 0.0) throw Error(ErrorCode::InvalidWeights, "coupling: negative mass");
            row += mass_[i][j];
            col[j] += mass_[i][j];
        }
        if (std::fabs(row - left_.weight(i)) > 1e-10)
            throw Error(ErrorCode::InvalidWeights, "coupling: row marginal mismatch");
    }
    for (std::size_t j = 0; j < col.size(); ++j)
        if (std::fabs(col[j] - right_.weight(j)) > 1e-10)
            throw Error(ErrorCode::InvalidWeights, "coupling: column marginal mismatch");
}

// ---------------------------------------------------------------------------

NormKind dual(NormKind kind) {
    switch (kind) {
        case NormKind::L1: return NormKind::Linf;
        case NormKind::L2: return NormKind::L2;
        case NormKind::Linf: return NormKind::L1;
    }
    return kind;
}

double norm(const Vec& v, NormKind kind) {
    double s = 0.0;
    switch (kind) {
        case NormKind::L1:
            for (double x : v) s += std::fabs(x);
            return s;
        case NormKind::L2:
            for (double x : v) s += x * x;
            return std::sqrt(s);
        case NormKind::Linf:
            for (double x : v) s = std::max(s, std::fabs(x));
            return s;
    }
    return s;
}

double dual_norm(const Vec& v, NormKind kind) { return norm(v, dual(kind)); }

double distance(const Vec& a, const Vec& b, NormKind kind) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "distance: size mismatch");
    Vec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return norm(d, kind);
}

Vec unit_maximizer(const Vec& a, NormKind kind) {
    const std::size_t m = a.size();
    Vec e(m, 0.0);
    if (m == 0) return e;
    switch (kind) {
        case NormKind::L2: {
            const double n = norm(a, NormKind::L2);
            if (n == 0.0) e[0] = 1.0;
            else
                for (std::size_t i = 0; i < m; ++i) e[i] = a[i] / n;
            break;
        }
        case NormKind::L1: {
            std::size_t k = 0;
            for (std::size_t i = 1; i < m; ++i)
                if (std::fabs(a[i]) > std::fabs(a[k])) k = i;
            e[k] = a[k] < 0.0 ? -1.0 : 1.0;
            break;
        }
        case NormKind::Linf:
            for (std::size_t i = 0; i < m; ++i) e[i] = a[i] < 0.0 ? -1.0 : 1.0;
            break;
    }
    return e;
}

Vec norm_subgradient(const Vec& v, NormKind kind) {
    const std::size_t m = v.size();
    Vec g(m, 0.0);
    switch (kind) {
        case NormKind::L1:
            for (std::size_t i = 0; i < m; ++i) g[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
            break;
        case NormKind::L2: {
            const double n = norm(v, NormKind::L2);
            if (n > 0.0)
                for (std::size_t i = 0; i < m; ++i) g[i] = v[i] / n;
            break;
        }
        case NormKind::Linf: {
            if (m == 0) break;
            std::size_t k = 0;
            for (std::size_t i = 1; i < m; ++i)
                if (std::fabs(v[i]) > std::fabs(v[k])) k = i;
            if (v[k] != 0.0) g[k] = v[k] > 0.0 ? 1.0 : -1.0;
            break;
        }
    }
    return g;
}

std::string to_string(NormKind kind) {
    switch (kind) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::Linf: return "linf";
    }
    return "?";
}

// ---------------------------------------------------------------------------

SupportSet SupportSet::unconstrained(std::size_t dim) {
    if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "support: dimension must be ≥ 1");
    SupportSet s;
    s.kind_ = Kind::Unconstrained;
    s.dim_ = dim;
    s.lower_.assign(dim, -kInf);
    s.upper_.assign(dim, kInf);
    return s;
}

SupportSet SupportSet::box(Vec lower, Vec upper) {
    if (lower.size() != upper.size() || lower.empty())
        throw Error(ErrorCode::DimensionMismatch, "support: box bound sizes");
    SupportSet s;
    s.kind_ = Kind::Box;
    s.dim_ = lower.size();
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i] || lower[i] == kInf ||
            upper[i] == -kInf)
            throw Error(ErrorCode::Infeasible, "support: empty box");
        if (std::isfinite(upper[i])) {
            Vec g(s.dim_, 0.0);
            g[i] = 1.0;
            s.G_.push_back(g);
            s.h_.push_back(upper[i]);
        }
        if (std::isfinite(lower[i])) {
            Vec g(s.dim_, 0.0);
            g[i] = -1.0;
            s.G_.push_back(g);
            s.h_.push_back(-lower[i]);
        }
    }
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
}

SupportSet SupportSet::polyhedron(Matrix G, Vec h) {
    if (G.empty() || G.size() != h.size()) throw Error(ErrorCode::DimensionMismatch, "support: polyhedron rows");
    const std::size_t m = G.front().size();
    for (const auto& r : G)
        if (r.size() != m || m == 0) throw Error(ErrorCode::DimensionMismatch, "support: ragged polyhedron");
    LinearProgram lp;
    lp.c.assign(m, 0.0);
    lp.lower.assign(m, -kInf);
    lp.upper.assign(m, kInf);
    lp.G = G;
    lp.h = h;
    if (lp_solve(lp).status == LpStatus::Infeasible)
        throw Error(ErrorCode::Infeasible, "support: polyhedron is empty");
    SupportSet s;
    s.kind_ = Kind::Polyhedron;
    s.dim_ = m;
    s.lower_.assign(m, -kInf);
    s.upper_.assign(m, kInf);
    s.G_ = std::move(G);
    s.h_ = std::move(h);
    return s;
}

bool SupportSet::is_unconstrained() const { return G_.empty(); }

bool SupportSet::contains(const Vec& x, double tol) const {
    if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "support: point dimension");
    for (std::size_t i = 0; i < G_.size(); ++i)
        if (dot(G_[i], x) > h_[i] + tol) return false;
    return true;
}

// ---------------------------------------------------------------------------

ScalarPwl::ScalarPwl(std::vector<ScalarPiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw Error(ErrorCode::InvalidArgument, "scalar loss: no pieces");
    for (const auto& p : pieces_)
        if (!std::isfinite(p.slope) || !std::isfinite(p.intercept))
            throw Error(ErrorCode::NonFinite, "scalar loss: non-finite piece");
    // Upper envelope of lines (convex hull trick).
    std::vector<ScalarPiece> s = pieces_;
    std::sort(s.begin(), s.end(), [](const ScalarPiece& a, const ScalarPiece& b) {
        return a.slope < b.slope || (a.slope == b.slope && a.intercept > b.intercept);
    });
    std::vector<ScalarPiece> uniq;
    for (const auto& p : s)
        if (uniq.empty() || uniq.back().slope != p.slope) uniq.push_back(p);
    auto useless = [](const ScalarPiece& l1, const ScalarPiece& l2, const ScalarPiece& l3) {
        // l2 never strictly above max(l1, l3)
        return (l3.intercept - l1.intercept) * (l2.slope - l1.slope) >=
               (l2.intercept - l1.intercept) * (l3.slope - l1.slope);
    };
    for (const auto& p : uniq) {
        while (envelope_.size() >= 2 && useless(envelope_[envelope_.size() - 2], envelope_.back(), p))
            envelope_.pop_back();
        envelope_.push_back(p);
    }
}

double ScalarPwl::operator()(double t) const {
    if (std::isinf(t)) {
        const auto& p = t > 0 ? envelope_.back() : envelope_.front();
        if (p.slope == 0.0) return p.intercept;
        return (p.slope > 0.0) == (t > 0.0) ? kInf : -kInf;
    }
    double v = -kInf;
    for (const auto& p : pieces_) v = std::max(v, p.slope * t + p.intercept);
    return v;
}

double ScalarPwl::slope_at(double t) const {
    double v = -kInf, s = 0.0;
    for (const auto& p : envelope_) {
        const double y = p.slope * t + p.intercept;
        if (y > v || (y == v && p.slope > s)) {
            v = y;
            s = p.slope;
        }
    }
    return s;
}

double ScalarPwl::lipschitz() const {
    return std::max(std::fabs(envelope_.front().slope), std::fabs(envelope_.back().slope));
}

double ScalarPwl::argmin() const {
    const auto& E = envelope_;
    if (E.front().slope > 0.0) return -kInf;
    if (E.back().slope < 0.0) return kInf;
    auto breakpoint = [&](std::size_t k) {
        return (E[k].intercept - E[k + 1].intercept) / (E[k + 1].slope - E[k].slope);
    };
    for (std::size_t k = 0; k < E.size(); ++k) {
        if (E[k].slope < 0.0) continue;
        // Flat piece: centre of its interval.
        if (E[k].slope == 0.0 && k > 0 && k + 1 < E.size()) return 0.5 * (breakpoint(k - 1) + breakpoint(k));
        if (k > 0) return breakpoint(k - 1);
        return E.size() > 1 ? breakpoint(0) : 0.0;
    }
    return 0.0;
}

ScalarPwl quadratic_with_linear_tails(double knot, double tail_slope, int tangents) {
    if (!(knot > 0.0) || tangents < 2 || tail_slope < 2.0 * knot)
        throw Error(ErrorCode::InvalidArgument, "quadratic tails: need knot > 0, ≥ 2 tangents, slope ≥ 2·knot");
    std::vector<ScalarPiece> pieces;
    const int n = tangents - 1;
    for (int k = 0; k <= n; ++k) {
        const double t = knot * static_cast<double>(2 * k - n) / static_cast<double>(n);
        pieces.push_back({2.0 * t, -t * t});
    }
    const double c = tail_slope * knot - knot * knot;
    pieces.push_back({tail_slope, -c});
    pieces.push_back({-tail_slope, -c});
    return ScalarPwl(std::move(pieces));
}

// ---------------------------------------------------------------------------

namespace {
void check_pieces(const std::vector<AffinePiece>& pieces) {
    if (pieces.empty()) throw Error(ErrorCode::InvalidArgument, "loss: no pieces");
    const std::size_t m = pieces.front().a.size();
    if (m == 0) throw Error(ErrorCode::DimensionMismatch, "loss: zero dimension");
    for (const auto& p : pieces) {
        if (p.a.size() != m) throw Error(ErrorCode::DimensionMismatch, "loss: ragged pieces");
        if (!std::isfinite(p.b)) throw Error(ErrorCode::NonFinite, "loss: non-finite intercept");
        for (double v : p.a)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "loss: non-finite slope");
    }
}
}  // namespace

LossFunction LossFunction::max_affine(std::vector<AffinePiece> pieces) {
    check_pieces(pieces);
    LossFunction l;
    l.kind_ = Kind::MaxAffine;
    l.dim_ = pieces.front().a.size();
    l.pieces_ = std::move(pieces);
    return l;
}

LossFunction LossFunction::min_affine(std::vector<AffinePiece> pieces) {
    check_pieces(pieces);
    LossFunction l;
    l.kind_ = Kind::MinAffine;
    l.dim_ = pieces.front().a.size();
    l.pieces_ = std::move(pieces);
    return l;
}

LossFunction LossFunction::scalar_composite(Vec x, ScalarPwl f, std::optional<double> t0) {
    if (x.empty()) throw Error(ErrorCode::DimensionMismatch, "loss: empty direction");
    for (double v : x)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "loss: non-finite direction");
    const double tm = f.argmin();
    double split = tm;
    if (t0) {
        split = *t0;
        // f must be nonincreasing left of the split and nondecreasing right of it.
        const double fl = std::isinf(split) ? 0.0 : f.slope_at(std::nextafter(split, -kInf));
        const double fr = std::isinf(split) ? 0.0 : f.slope_at(std::nextafter(split, kInf));
        bool ok = true;
        if (split == kInf) ok = f.envelope().back().slope <= 0.0;
        else if (split == -kInf) ok = f.envelope().front().slope >= 0.0;
        else ok = f(split) <= f(tm) + 1e-12 * (1.0 + std::fabs(f(tm))) && fl <= 1e-12 && fr >= -1e-12;
        if (!ok) throw Error(ErrorCode::InvalidArgument, "loss: split point is not a minimiser of f");
    }
    LossFunction l;
    l.kind_ = Kind::ScalarComposite;
    l.dim_ = x.size();
    l.x_ = std::move(x);
    l.f_ = std::move(f);
    l.t0_ = split;
    return l;
}

double LossFunction::evaluate(const Vec& xi) const {
    if (xi.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "loss: point dimension mismatch");
    switch (kind_) {
        case Kind::MaxAffine: {
            double v = -kInf;
            for (const auto& p : pieces_) v = std::max(v, dot(p.a, xi) + p.b);
            return v;
        }
        case Kind::MinAffine: {
            double v = kInf;
            for (const auto& p : pieces_) v = std::min(v, dot(p.a, xi) + p.b);
            return v;
        }
        case Kind::ScalarComposite:
            return (*f_)(dot(x_, xi));
    }
    return 0.0;
}

double LossFunction::f1(double t) const {
    if (kind_ != Kind::ScalarComposite) throw Error(ErrorCode::InvalidArgument, "loss: f1 needs a composite loss");
    return (*f_)(std::min(t, t0_));
}

double LossFunction::f2(double t) const {
    if (kind_ != Kind::ScalarComposite) throw Error(ErrorCode::InvalidArgument, "loss: f2 needs a composite loss");
    return (*f_)(std::max(t, t0_));
}

double LossFunction::lipschitz(NormKind norm) const {
    if (kind_ == Kind::ScalarComposite) return f_->lipschitz() * dual_norm(x_, norm);
    double L = 0.0;
    for (const auto& p : pieces_) L = std::max(L, dual_norm(p.a, norm));
    return L;
}

double LossFunction::local_slope(const Vec& xi, NormKind norm, double tol) const {
    if (kind_ == Kind::ScalarComposite) {
        const double t = dot(x_, xi);
        double best = 0.0;
        const double v = (*f_)(t);
        for (const auto& p : f_->pieces())
            if (p.slope * t + p.intercept >= v - tol * (1.0 + std::fabs(v)))
                best = std::max(best, std::fabs(p.slope));
        return best * dual_norm(x_, norm);
    }
    const double v = evaluate(xi);
    double best = 0.0;
    for (const auto& p : pieces_)
        if (std::fabs(dot(p.a, xi) + p.b - v) <= tol * (1.0 + std::fabs(v)))
            best = std::max(best, dual_norm(p.a, norm));
    return best;
}

LossFunction LossFunction::as_max_affine() const {
    if (kind_ == Kind::MaxAffine) return *this;
    if (kind_ == Kind::MinAffine) throw Error(ErrorCode::InvalidArgument, "loss: concave loss is not max-affine");
    std::vector<AffinePiece> pieces;
    for (const auto& p : f_->envelope()) {
        Vec a(x_.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = p.slope * x_[i];
        pieces.push_back({a, p.intercept});
    }
    return max_affine(std::move(pieces));
}

double evaluate_loss(const LossFunction& loss, const Vec& xi) { return loss.evaluate(xi); }

SphereMax sphere_max(const LossFunction& loss, const Vec& center, double eps, NormKind norm) {
    if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere_max: radius must be ≥ 0");
    if (center.size() != loss.dim()) throw Error(ErrorCode::DimensionMismatch, "sphere_max: center dimension");
    SphereMax out;
    switch (loss.kind()) {
        case LossFunction::Kind::MaxAffine: {
            double best = -kInf;
            std::size_t jbest = 0;
            for (std::size_t j = 0; j < loss.pieces().size(); ++j) {
                const auto& p = loss.pieces()[j];
                const double v = dual_norm(p.a, norm) * eps + dot(p.a, center) + p.b;
                if (v > best) {
                    best = v;
                    jbest = j;
                }
            }
            out.value = best;
            out.maximizer = unit_maximizer(loss.pieces()[jbest].a, norm);
            return out;
        }
        case LossFunction::Kind::ScalarComposite: {
            const double t = dot(loss.direction(), center);
            const double r = eps * dual_norm(loss.direction(), norm);
            const double lo = loss.f1(t - r), hi = loss.f2(t + r);
            Vec e = unit_maximizer(loss.direction(), norm);
            if (lo > hi)
                for (double& v : e) v = -v;
            out.value = std::max(lo, hi);
            out.maximizer = e;
            return out;
        }
        case LossFunction::Kind::MinAffine:
            throw Error(ErrorCode::InvalidArgument, "sphere_max: defined for convex losses only");
    }
    return out;
}

// ---------------------------------------------------------------------------

RiskSpec RiskSpec::expectation() { return RiskSpec(Kind::Expectation, 0.0); }

RiskSpec RiskSpec::cvar(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "CVaR level must lie in [0,1)");
    return RiskSpec(Kind::CVaR, alpha);
}

RiskSpec RiskSpec::expectile(double alpha) {
    if (!(alpha >= 0.5 && alpha < 1.0))
        throw Error(ErrorCode::InvalidArgument, "expectile level must lie in [1/2,1)");
    return RiskSpec(Kind::Expectile, alpha);
}

RiskSpec RiskSpec::ess_sup() { return RiskSpec(Kind::EssSup, 1.0); }

double RiskSpec::envelope_constant() const {
    switch (kind_) {
        case Kind::Expectation: return 1.0;
        case Kind::CVaR: return 1.0 / (1.0 - alpha_);
        case Kind::Expectile: return alpha_ / (1.0 - alpha_);
        case Kind::EssSup: return kInf;
    }
    return kInf;
}

std::string RiskSpec::name() const {
    switch (kind_) {
        case Kind::Expectation: return "expectation";
        case Kind::CVaR: return "cvar";
        case Kind::Expectile: return "expectile";
        case Kind::EssSup: return "esssup";
    }
    return "?";
}

AmbiguityBall::AmbiguityBall(RiskSpec r, NormKind n, double eps, DiscreteDistribution c,
                             std::optional<SupportSet> s)
    : risk(r),
      norm(n),
      radius(eps),
      center(std::move(c)),
      support(s ? std::move(*s) : SupportSet::unconstrained(center.dim())) {
    if (!(radius >= 0.0) || !std::isfinite(radius))
        throw Error(ErrorCode::InvalidArgument, "ball: radius must be finite and ≥ 0");
    if (support.dim() != center.dim()) throw Error(ErrorCode::DimensionMismatch, "ball: support dimension");
    for (const auto& p : center.points())
        if (!support.contains(p, 1e-9)) throw Error(ErrorCode::InvalidArgument, "ball: center point outside support");
}

}  // namespace gwdro
