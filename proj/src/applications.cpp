#include "gwdro/applications.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "gwdro/convex_kernel.hpp"

namespace gwdro {

// ---------------------------------------------------------------------------
// DecisionSet

DecisionSet DecisionSet::unconstrained(std::size_t dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "decision set: dimension must be positive");
    DecisionSet s;
    s.kind_ = Kind::Unconstrained;
    s.dim_ = dim;
    s.lower_.assign(dim, -kInf);
    s.upper_.assign(dim, kInf);
    return s;
}

DecisionSet DecisionSet::box(Vec lower, Vec upper) {
    if (lower.empty() || lower.size() != upper.size())
        throw Error(ErrorCode::DimensionMismatch, "decision set: box bounds mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (!(lower[i] <= upper[i])) throw Error(ErrorCode::Infeasible, "decision set: empty box");
    DecisionSet s;
    s.kind_ = Kind::Box;
    s.dim_ = lower.size();
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
}

DecisionSet DecisionSet::simplex(std::size_t dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "decision set: dimension must be positive");
    DecisionSet s;
    s.kind_ = Kind::Simplex;
    s.dim_ = dim;
    s.lower_.assign(dim, 0.0);
    s.upper_.assign(dim, 1.0);
    return s;
}

DecisionSet DecisionSet::capped_simplex(Vec lower, Vec upper) {
    if (lower.empty() || lower.size() != upper.size())
        throw Error(ErrorCode::DimensionMismatch, "decision set: bound dimensions mismatch");
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) {
        lower[i] = std::max(lower[i], 0.0);
        upper[i] = std::min(upper[i], 1.0);
        if (!(lower[i] <= upper[i])) throw Error(ErrorCode::Infeasible, "decision set: empty bounds");
        lo += lower[i];
        hi += upper[i];
    }
    if (lo > 1.0 + 1e-12 || hi < 1.0 - 1e-12) throw Error(ErrorCode::Infeasible, "decision set: bounds exclude Σx = 1");
    DecisionSet s;
    s.kind_ = Kind::CappedSimplex;
    s.dim_ = lower.size();
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
}

Vec DecisionSet::project(const Vec& x) const {
    if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "decision set: point dimension mismatch");
    switch (kind_) {
        case Kind::Unconstrained: return x;
        case Kind::Box: return project_box(x, lower_, upper_);
        case Kind::Simplex: return project_simplex(x);
        case Kind::CappedSimplex: return project_capped_simplex(x, lower_, upper_);
    }
    return x;
}

Vec DecisionSet::center() const {
    switch (kind_) {
        case Kind::Unconstrained: return Vec(dim_, 0.0);
        case Kind::Box: {
            Vec c(dim_);
            for (std::size_t i = 0; i < dim_; ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
            return c;
        }
        case Kind::Simplex:
        case Kind::CappedSimplex: return project(Vec(dim_, 1.0 / static_cast<double>(dim_)));
    }
    return Vec(dim_, 0.0);
}

bool DecisionSet::contains(const Vec& x, double tol) const {
    if (x.size() != dim_) return false;
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
        sum += x[i];
    }
    if (kind_ == Kind::Simplex || kind_ == Kind::CappedSimplex) return std::fabs(sum - 1.0) <= tol * static_cast<double>(dim_);
    return true;
}

double DecisionSet::scale() const {
    if (kind_ != Kind::Box) return 1.0;
    double w = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) w = std::max(w, upper_[i] - lower_[i]);
    return w > 0.0 ? 0.5 * w : 1.0;
}

// ---------------------------------------------------------------------------
// Composite objective

namespace {

Vec resolve_weights(const Vec& w, std::size_t n) {
    if (n == 0) throw Error(ErrorCode::EmptyInput, "application: no samples");
    if (w.empty()) return Vec(n, 1.0 / static_cast<double>(n));
    if (w.size() != n) throw Error(ErrorCode::DimensionMismatch, "application: weight count mismatch");
    double s = 0.0;
    for (double v : w) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidArgument, "application: weights must be nonnegative");
        s += v;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "application: weights must sum to 1");
    return w;
}

void validate_ball(const BallParams& b) {
    if (!std::isfinite(b.eps) || b.eps < 0.0) throw Error(ErrorCode::InvalidArgument, "application: radius must be nonnegative");
    if (b.family == RiskFamily::CVaR && !(b.alpha >= 0.0 && b.alpha < 1.0))
        throw Error(ErrorCode::InvalidArgument, "application: CVaR level must lie in [0,1)");
    if (b.family == RiskFamily::Expectile && !(b.alpha >= 0.5 && b.alpha < 1.0))
        throw Error(ErrorCode::InvalidArgument, "application: expectile level must lie in [1/2,1)");
}

void validate_model(const CompositeModel& m) {
    const std::size_t n = m.a.size();
    if (n == 0) throw Error(ErrorCode::EmptyInput, "application: no samples");
    if (m.c.size() != n || m.weights.size() != n) throw Error(ErrorCode::DimensionMismatch, "application: sample data mismatch");
    const std::size_t d = m.a.front().size();
    for (const auto& row : m.a) {
        if (row.size() != d) throw Error(ErrorCode::DimensionMismatch, "application: ragged sample rows");
        for (double v : row)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "application: non-finite sample");
    }
    for (double v : m.c)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "application: non-finite target");
}

struct Term {
    double value;
    double slope;  // derivative in the shifted score
};

// f(min(u, t0)) and f(max(u, t0)); an infinite split removes the corresponding side.
Term left_term(const ScalarPwl& f, double t0, double u) {
    if (t0 == -kInf) return {-kInf, 0.0};
    if (u < t0) return {f(u), f.slope_at(u)};
    return {f(t0), 0.0};
}

Term right_term(const ScalarPwl& f, double t0, double u) {
    if (t0 == kInf) return {-kInf, 0.0};
    if (u > t0) return {f(u), f.slope_at(u)};
    return {f(t0), 0.0};
}

void add_scaled(Vec& g, double s, const Vec& v) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += s * v[k];
}

double regularizer_level(const BallParams& b) {
    return b.family == RiskFamily::CVaR ? 1.0 - b.alpha : (1.0 - b.alpha) / b.alpha;
}

bool lex_less(const Vec& a, const Vec& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

}  // namespace

double composite_objective(const CompositeModel& model, const BallParams& ball, const Vec& theta, Vec* grad,
                           BranchReport* report) {
    const std::size_t n = model.a.size();
    const std::size_t d = theta.size();
    if (n == 0 || model.a.front().size() != d) throw Error(ErrorCode::DimensionMismatch, "application: decision dimension mismatch");
    Vec v = theta;
    if (model.tail) v.push_back(*model.tail);
    const NormKind dn = dual(model.norm);
    const double kappa = norm(v, dn);
    Vec dk = norm_subgradient(v, dn);
    dk.resize(d);
    const double L = model.f.lipschitz();
    const double eps = ball.eps;
    const double reg = L * regularizer_level(ball) * eps * kappa;
    const double t0 = model.split;

    Vec gA(d, 0.0), gB(d, 0.0);
    double A = 0.0, B = 0.0;
    std::vector<int> terms(n, 0);
    Vec gE(d, 0.0);
    double E = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = model.weights[i];
        const double s = dot(theta, model.a[i]) + model.c[i];
        const double fs = model.f(s);
        const double fp = model.f.slope_at(s);
        const Term lt = left_term(model.f, t0, s - eps * kappa);
        const Term rt = right_term(model.f, t0, s + eps * kappa);
        // Shifted-score term and its gradient direction.
        const bool left = lt.value >= rt.value;
        const Term& sh = left ? lt : rt;
        const double sign = left ? -1.0 : 1.0;
        if (ball.family == RiskFamily::CVaR) {
            A += w * fs;
            add_scaled(gA, w * fp, model.a[i]);
            B += w * sh.value;
            add_scaled(gB, w * sh.slope, model.a[i]);
            add_scaled(gB, w * sh.slope * sign * eps, dk);
        } else {
            const double r = fs + reg;
            if (r >= sh.value) {
                E += w * r;
                add_scaled(gE, w * fp, model.a[i]);
                add_scaled(gE, w * L * regularizer_level(ball) * eps, dk);
                terms[i] = 0;
            } else {
                E += w * sh.value;
                add_scaled(gE, w * sh.slope, model.a[i]);
                add_scaled(gE, w * sh.slope * sign * eps, dk);
                terms[i] = left ? 1 : 2;
            }
        }
    }
    double value;
    if (ball.family == RiskFamily::CVaR) {
        A += reg;
        add_scaled(gA, L * regularizer_level(ball) * eps, dk);
        const bool shifted = B >= A;
        value = shifted ? B : A;
        if (grad) *grad = shifted ? gB : gA;
        if (report) {
            report->active_branch = shifted ? 1 : 2;
            report->value_regularized = A;
            report->value_shifted = B;
            report->sample_terms.clear();
        }
    } else {
        value = E;
        if (grad) *grad = gE;
        if (report) {
            double saa = 0.0, shifted = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = dot(theta, model.a[i]) + model.c[i];
                saa += model.weights[i] * model.f(s);
                shifted += model.weights[i] * std::max(left_term(model.f, t0, s - eps * kappa).value,
                                                       right_term(model.f, t0, s + eps * kappa).value);
            }
            report->active_branch = 0;
            report->value_regularized = saa + reg;
            report->value_shifted = shifted;
            report->sample_terms = terms;
        }
    }
    return value;
}

DriverResult minimize_composite(const CompositeModel& model, const BallParams& ball, const DecisionSet& set,
                                const DriverOptions& opt) {
    validate_model(model);
    validate_ball(ball);
    if (set.dim() != model.a.front().size()) throw Error(ErrorCode::DimensionMismatch, "application: decision set dimension mismatch");
    if (opt.iterations <= 0 || opt.starts <= 0) throw Error(ErrorCode::InvalidArgument, "application: iterations and starts must be positive");

    struct Run {
        SubgradientResult res;
        long long b1 = 0, b2 = 0;
    };
    auto run = [&](int k) {
        Vec x0 = set.center();
        if (k > 0) {
            std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k));
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::exponential_distribution<double> expo(1.0);
            switch (set.kind()) {
                case DecisionSet::Kind::Unconstrained:
                    for (double& v : x0) v += gauss(rng);
                    break;
                case DecisionSet::Kind::Box:
                    for (std::size_t i = 0; i < x0.size(); ++i) {
                        const double lo = set.lower()[i], hi = set.upper()[i];
                        if (std::isfinite(lo) && std::isfinite(hi)) x0[i] = lo + (hi - lo) * unif(rng);
                        else x0[i] += gauss(rng);
                    }
                    break;
                case DecisionSet::Kind::Simplex:
                case DecisionSet::Kind::CappedSimplex: {
                    double s = 0.0;
                    for (double& v : x0) s += (v = expo(rng));
                    for (double& v : x0) v /= s;
                    break;
                }
            }
        }
        Run r;
        SubgradientProblem prob;
        prob.objective = [&](const Vec& x, Vec& g) { return composite_objective(model, ball, x, &g); };
        prob.project = [&](const Vec& x) { return set.project(x); };
        prob.x0 = set.project(x0);
        prob.step_scale = opt.step_scale > 0.0 ? opt.step_scale : set.scale();
        prob.max_iterations = opt.iterations;
        prob.restarts = opt.phases;
        prob.observer = [&](int, const Vec& x) {
            BranchReport rep;
            composite_objective(model, ball, x, nullptr, &rep);
            const bool second = ball.family == RiskFamily::CVaR
                                    ? rep.active_branch == 2
                                    : std::any_of(rep.sample_terms.begin(), rep.sample_terms.end(), [](int t) { return t == 0; });
            (second ? r.b2 : r.b1)++;
        };
        r.res = projected_subgradient(prob);
        return r;
    };

    std::vector<std::future<Run>> jobs;
    for (int k = 0; k < opt.starts; ++k) jobs.push_back(std::async(std::launch::async, run, k));
    std::vector<Run> runs;
    for (auto& j : jobs) runs.push_back(j.get());

    std::size_t best = 0;
    for (std::size_t k = 1; k < runs.size(); ++k) {
        const double a = runs[k].res.value, b = runs[best].res.value;
        if (a < b || (a == b && lex_less(runs[k].res.x, runs[best].res.x))) best = k;
    }
    DriverResult out;
    out.decision = runs[best].res.x;
    out.value = composite_objective(model, ball, out.decision, nullptr, &out.report);
    out.report.iterations_branch1 = runs[best].b1;
    out.report.iterations_branch2 = runs[best].b2;
    out.iterations = runs[best].res.iterations;
    for (std::size_t i = 0; i < model.a.size(); ++i)
        out.saa += model.weights[i] * model.f(dot(out.decision, model.a[i]) + model.c[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Portfolio

namespace {

DecisionSet portfolio_set(const PortfolioProblem& p) {
    if (p.returns.empty()) throw Error(ErrorCode::EmptyInput, "portfolio: no return samples");
    const std::size_t n = p.returns.front().size();
    if (!p.feasible) return DecisionSet::simplex(n);
    if (p.feasible->kind() != DecisionSet::Kind::Simplex && p.feasible->kind() != DecisionSet::Kind::CappedSimplex)
        throw Error(ErrorCode::InvalidArgument, "portfolio: feasible set must be a (capped) simplex");
    if (p.feasible->dim() != n) throw Error(ErrorCode::DimensionMismatch, "portfolio: feasible set dimension mismatch");
    return *p.feasible;
}

DecisionSet learning_set(const LearningProblem& p) {
    if (p.features.empty()) throw Error(ErrorCode::EmptyInput, "learning: no samples");
    const std::size_t d = p.features.front().size();
    if (!p.coefficients) return DecisionSet::unconstrained(d);
    if (p.coefficients->kind() != DecisionSet::Kind::Box && p.coefficients->kind() != DecisionSet::Kind::Unconstrained)
        throw Error(ErrorCode::InvalidArgument, "learning: coefficient set must be a box or unconstrained");
    if (p.coefficients->dim() != d) throw Error(ErrorCode::DimensionMismatch, "learning: coefficient set dimension mismatch");
    return *p.coefficients;
}

bool is_symmetric(const ScalarPwl& f) {
    const auto& E = f.envelope();
    for (std::size_t k = 0; k < E.size(); ++k) {
        const auto& m = E[E.size() - 1 - k];
        if (std::fabs(E[k].slope + m.slope) > 1e-12 || std::fabs(E[k].intercept - m.intercept) > 1e-12) return false;
    }
    return true;
}

DriverResult with_zero_radius(CompositeModel m, BallParams b, const DecisionSet& set, const DriverOptions& opt) {
    b.eps = 0.0;
    return minimize_composite(m, b, set, opt);
}

}  // namespace

CompositeModel portfolio_model(const PortfolioProblem& p) {
    portfolio_set(p);
    if (p.utility.empty()) throw Error(ErrorCode::InvalidArgument, "portfolio: utility has no pieces");
    std::vector<ScalarPiece> neg;
    for (const auto& q : p.utility) {
        if (!(q.slope >= 0.0)) throw Error(ErrorCode::InvalidArgument, "portfolio: utility must be nondecreasing");
        neg.push_back({-q.slope, -q.intercept});
    }
    CompositeModel m{ScalarPwl(neg), 0.0, p.returns, Vec(p.returns.size(), 0.0), resolve_weights(p.weights, p.returns.size()),
                     std::nullopt, p.ball.norm};
    m.split = m.f.argmin();
    validate_model(m);
    return m;
}

double portfolio_objective(const PortfolioProblem& p, const Vec& x, BranchReport* report) {
    validate_ball(p.ball);
    return composite_objective(portfolio_model(p), p.ball, x, nullptr, report);
}

DriverResult portfolio_optimize(const PortfolioProblem& p, const DriverOptions& opt) {
    return minimize_composite(portfolio_model(p), p.ball, portfolio_set(p), opt);
}

DriverResult saa_baseline(const PortfolioProblem& p, const DriverOptions& opt) {
    return with_zero_radius(portfolio_model(p), p.ball, portfolio_set(p), opt);
}

// ---------------------------------------------------------------------------
// Learning

CompositeModel regression_model(const LearningProblem& p) {
    learning_set(p);
    const std::size_t n = p.features.size();
    if (p.targets.size() != n) throw Error(ErrorCode::DimensionMismatch, "regression: target count mismatch");
    double split = 0.0;
    if (p.split) {
        split = LossFunction::scalar_composite(Vec{1.0}, p.loss, *p.split).split();
    } else if (!is_symmetric(p.loss)) {
        throw Error(ErrorCode::InvalidArgument, "regression: non-symmetric loss needs a declared split");
    }
    Vec c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = -p.targets[i];
    CompositeModel m{p.loss, split, p.features, c, resolve_weights(p.weights, n), -1.0, p.ball.norm};
    validate_model(m);
    return m;
}

CompositeModel classification_model(const LearningProblem& p) {
    learning_set(p);
    const std::size_t n = p.features.size();
    if (p.targets.size() != n) throw Error(ErrorCode::DimensionMismatch, "classification: label count mismatch");
    if (p.loss.envelope().back().slope > 0.0)
        throw Error(ErrorCode::InvalidArgument, "classification: loss must be nonincreasing");
    Matrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = p.targets[i];
        if (y != 1.0 && y != -1.0) throw Error(ErrorCode::InvalidArgument, "classification: labels must be -1 or +1");
        a[i] = p.features[i];
        for (double& v : a[i]) v *= y;
    }
    CompositeModel m{p.loss, p.loss.argmin(), a, Vec(n, 0.0), resolve_weights(p.weights, n), std::nullopt, p.ball.norm};
    validate_model(m);
    return m;
}

double regression_objective(const LearningProblem& p, const Vec& beta, BranchReport* report) {
    validate_ball(p.ball);
    return composite_objective(regression_model(p), p.ball, beta, nullptr, report);
}

double classification_objective(const LearningProblem& p, const Vec& beta, BranchReport* report) {
    validate_ball(p.ball);
    return composite_objective(classification_model(p), p.ball, beta, nullptr, report);
}

DriverResult dr_regression(const LearningProblem& p, const DriverOptions& opt) {
    return minimize_composite(regression_model(p), p.ball, learning_set(p), opt);
}

DriverResult dr_classification(const LearningProblem& p, const DriverOptions& opt) {
    return minimize_composite(classification_model(p), p.ball, learning_set(p), opt);
}

DriverResult saa_regression(const LearningProblem& p, const DriverOptions& opt) {
    return with_zero_radius(regression_model(p), p.ball, learning_set(p), opt);
}

DriverResult saa_classification(const LearningProblem& p, const DriverOptions& opt) {
    return with_zero_radius(classification_model(p), p.ball, learning_set(p), opt);
}

ScalarPwl hinge_loss() { return ScalarPwl({{-1.0, 1.0}, {0.0, 0.0}}); }

ScalarPwl absolute_loss() { return ScalarPwl({{1.0, 0.0}, {-1.0, 0.0}}); }

}  // namespace gwdro
