#include "gwdro/convex_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace gwdro {

const Tolerances& tolerances() {
    static const Tolerances t{};
    return t;
}

void LinearProgram::validate() const {
    const std::size_t n = c.size();
    if (lower.size() != n || upper.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "lp: bound vectors must match objective size");
    if (A_eq.size() != b_eq.size() || G.size() != h.size())
        throw Error(ErrorCode::DimensionMismatch, "lp: row count mismatch");
    for (const auto& r : A_eq)
        if (r.size() != n) throw Error(ErrorCode::DimensionMismatch, "lp: equality row width");
    for (const auto& r : G)
        if (r.size() != n) throw Error(ErrorCode::DimensionMismatch, "lp: inequality row width");
    for (double v : c)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "lp: objective must be finite");
    for (std::size_t j = 0; j < n; ++j)
        if (lower[j] > upper[j] || lower[j] == kInf || upper[j] == -kInf)
            throw Error(ErrorCode::InvalidArgument, "lp: inconsistent bounds");
}

namespace {

// Dense two-phase tableau simplex on  min ĉᵀz, Âz = b̂ ≥ 0, z ≥ 0.
class Tableau {
public:
    Tableau(int rows, int cols) : m_(rows), w_(cols + 1), t_((rows + 1) * (cols + 1), 0.0), basis_(rows, -1) {}

    double& at(int r, int c) { return t_[static_cast<std::size_t>(r) * w_ + c]; }
    double at(int r, int c) const { return t_[static_cast<std::size_t>(r) * w_ + c]; }
    double& rhs(int r) { return at(r, w_ - 1); }
    double& obj(int c) { return at(m_, c); }
    int rows() const { return m_; }
    int cols() const { return w_ - 1; }
    std::vector<int>& basis() { return basis_; }

    void pivot(int pr, int pc) {
        double* prow = &t_[static_cast<std::size_t>(pr) * w_];
        const double inv = 1.0 / prow[pc];
        for (int c = 0; c < w_; ++c) prow[c] *= inv;
        prow[pc] = 1.0;
        for (int r = 0; r <= m_; ++r) {
            if (r == pr) continue;
            double* row = &t_[static_cast<std::size_t>(r) * w_];
            const double f = row[pc];
            if (f == 0.0) continue;
            for (int c = 0; c < w_; ++c) row[c] -= f * prow[c];
            row[pc] = 0.0;
        }
        basis_[pr] = pc;
    }

    // Returns 0 optimal, 1 unbounded, throws on iteration cap.
    int run(const std::vector<char>& eligible, int& iterations) {
        const double dtol = 1e-9;
        const double ftol = 1e-11;
        const int cap = 200 * (m_ + w_) + 10000;
        int degenerate_streak = 0;
        bool bland = false;
        for (;;) {
            if (++iterations > cap)
                throw Error(ErrorCode::SolverFailure, "lp: iteration cap exceeded (cycling guard)");
            int enter = -1;
            double best = -dtol;
            for (int c = 0; c < w_ - 1; ++c) {
                if (!eligible[c]) continue;
                const double d = at(m_, c);
                if (bland) {
                    if (d < -dtol) { enter = c; break; }
                } else if (d < best) {
                    best = d;
                    enter = c;
                }
            }
            if (enter < 0) return 0;
            // Harris two-pass ratio test: bound the step with a small feasibility
            // allowance, then take the largest pivot among rows within that bound.
            double colmax = 0.0;
            for (int r = 0; r < m_; ++r) colmax = std::max(colmax, at(r, enter));
            const double ptol = std::max(1e-9, 1e-9 * colmax);
            // Bland mode uses the exact minimum ratio to keep its anti-cycling guarantee.
            const double allow = bland ? 0.0 : ftol;
            double bound = kInf;
            for (int r = 0; r < m_; ++r) {
                const double a = at(r, enter);
                if (a > ptol) bound = std::min(bound, (std::max(at(r, w_ - 1), 0.0) + allow) / a);
            }
            if (bland) bound *= 1.0 + 1e-12;
            int leave = -1;
            double ratio = kInf;
            double piv = 0.0;
            for (int r = 0; r < m_; ++r) {
                const double a = at(r, enter);
                if (a <= ptol) continue;
                const double q = std::max(at(r, w_ - 1), 0.0) / a;
                if (q > bound) continue;
                const bool take = leave < 0 || (bland ? basis_[r] < basis_[leave] : a > piv);
                if (take) {
                    leave = r;
                    ratio = q;
                    piv = a;
                }
            }
            if (leave < 0) return 1;
            if (ratio <= 1e-12) {
                if (++degenerate_streak > 25) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
            pivot(leave, enter);
        }
    }

private:
    int m_, w_;
    std::vector<double> t_;
    std::vector<int> basis_;
};

}  // namespace

LpResult lp_solve(const LinearProgram& lp) {
    lp.validate();
    const int n = static_cast<int>(lp.num_vars());
    const int meq = static_cast<int>(lp.A_eq.size());
    const int mle = static_cast<int>(lp.G.size());

    // Variable substitution x_j = offset_j + z_plus − z_minus.
    std::vector<int> plus(n, -1), minus(n, -1);
    Vec offset(n, 0.0);
    std::vector<int> bounded;  // vars needing z_plus ≤ u − l rows
    int ns = 0;
    for (int j = 0; j < n; ++j) {
        const double l = lp.lower[j], u = lp.upper[j];
        if (std::isfinite(l)) {
            offset[j] = l;
            plus[j] = ns++;
            if (std::isfinite(u)) bounded.push_back(j);
        } else if (std::isfinite(u)) {
            offset[j] = u;
            minus[j] = ns++;
        } else {
            plus[j] = ns++;
            minus[j] = ns++;
        }
    }
    const int mb = static_cast<int>(bounded.size());
    const int m = meq + mle + mb;
    const int nslack = mle + mb;

    // Row data in standard structural columns.
    Matrix rows(m, Vec(ns, 0.0));
    Vec rhs(m, 0.0);
    auto fill = [&](int r, const Vec& a, double b) {
        double shift = 0.0;
        for (int j = 0; j < n; ++j) {
            if (a[j] == 0.0) continue;
            if (plus[j] >= 0) rows[r][plus[j]] += a[j];
            if (minus[j] >= 0) rows[r][minus[j]] -= a[j];
            shift += a[j] * offset[j];
        }
        rhs[r] = b - shift;
    };
    for (int i = 0; i < meq; ++i) fill(i, lp.A_eq[i], lp.b_eq[i]);
    for (int i = 0; i < mle; ++i) fill(meq + i, lp.G[i], lp.h[i]);
    for (int k = 0; k < mb; ++k) {
        const int j = bounded[k];
        rows[meq + mle + k][plus[j]] = 1.0;
        rhs[meq + mle + k] = lp.upper[j] - lp.lower[j];
    }

    Vec sign(m, 1.0);
    for (int r = 0; r < m; ++r)
        if (rhs[r] < 0.0) sign[r] = -1.0;

    // Identity column per row: own slack if row is ≤ and unflipped, else artificial.
    std::vector<int> ident(m, -1);
    std::vector<int> art_row;
    for (int r = 0; r < m; ++r)
        if (r < meq || sign[r] < 0.0) art_row.push_back(r);
    const int na = static_cast<int>(art_row.size());
    const int cols = ns + nslack + na;
    Tableau T(m, cols);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < ns; ++c) T.at(r, c) = sign[r] * rows[r][c];
        if (r >= meq) {
            const int sc = ns + (r - meq);
            T.at(r, sc) = sign[r];
            if (sign[r] > 0.0) ident[r] = sc;
        }
        T.rhs(r) = sign[r] * rhs[r];
    }
    for (int k = 0; k < na; ++k) {
        const int r = art_row[k];
        const int ac = ns + nslack + k;
        T.at(r, ac) = 1.0;
        ident[r] = ac;
    }
    for (int r = 0; r < m; ++r) T.basis()[r] = ident[r];

    LpResult res;
    std::vector<char> eligible(cols, 1);
    for (int k = 0; k < na; ++k) eligible[ns + nslack + k] = 0;

    // Phase I.
    if (na > 0) {
        for (int k = 0; k < na; ++k) {
            const int r = art_row[k];
            for (int c = 0; c <= cols; ++c)
                if (c < ns + nslack || c == cols) T.obj(c) -= T.at(r, c);
        }
        T.run(eligible, res.iterations);
        double bmax = 1.0;
        for (double v : rhs) bmax = std::max(bmax, std::fabs(v));
        if (-T.obj(cols) > 1e-9 * bmax) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        for (int r = 0; r < m; ++r) {
            if (T.basis()[r] < ns + nslack) continue;
            int best = -1;
            double mag = 1e-9;
            for (int c = 0; c < ns + nslack; ++c)
                if (std::fabs(T.at(r, c)) > mag) { mag = std::fabs(T.at(r, c)); best = c; }
            if (best >= 0) T.pivot(r, best);
        }
    }

    // Phase II objective row.
    Vec cstd(cols, 0.0);
    for (int j = 0; j < n; ++j) {
        if (plus[j] >= 0) cstd[plus[j]] += lp.c[j];
        if (minus[j] >= 0) cstd[minus[j]] -= lp.c[j];
    }
    for (int c = 0; c <= cols; ++c) T.obj(c) = c < cols ? cstd[c] : 0.0;
    for (int r = 0; r < m; ++r) {
        const double cb = cstd[T.basis()[r]];
        if (cb == 0.0) continue;
        for (int c = 0; c <= cols; ++c) T.obj(c) -= cb * T.at(r, c);
    }
    if (T.run(eligible, res.iterations) == 1) {
        res.status = LpStatus::Unbounded;
        return res;
    }

    Vec z(cols, 0.0);
    for (int r = 0; r < m; ++r) z[T.basis()[r]] = std::max(T.rhs(r), 0.0);
    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double v = offset[j];
        if (plus[j] >= 0) v += z[plus[j]];
        if (minus[j] >= 0) v -= z[minus[j]];
        res.x[j] = std::clamp(v, lp.lower[j], lp.upper[j]);
    }
    res.status = LpStatus::Optimal;
    res.objective = dot(lp.c, res.x);

    res.dual_eq.assign(meq, 0.0);
    res.dual_ineq.assign(mle, 0.0);
    for (int r = 0; r < meq + mle; ++r) {
        const double y = -T.obj(ident[r]) * sign[r];
        if (r < meq) res.dual_eq[r] = y;
        else res.dual_ineq[r - meq] = std::min(y, 0.0);
    }
    res.reduced_cost = lp.c;
    for (int i = 0; i < meq; ++i)
        for (int j = 0; j < n; ++j) res.reduced_cost[j] -= lp.A_eq[i][j] * res.dual_eq[i];
    for (int i = 0; i < mle; ++i)
        for (int j = 0; j < n; ++j) res.reduced_cost[j] -= lp.G[i][j] * res.dual_ineq[i];
    return res;
}

double lp_dual_objective(const LinearProgram& lp, const LpResult& res) {
    double v = dot(lp.b_eq, res.dual_eq) + dot(lp.h, res.dual_ineq);
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        const double d = res.reduced_cost[j];
        if (d > 0.0 && std::isfinite(lp.lower[j])) v += d * lp.lower[j];
        else if (d < 0.0 && std::isfinite(lp.upper[j])) v += d * lp.upper[j];
    }
    return v;
}

double lp_kkt_residual(const LinearProgram& lp, const LpResult& res) {
    double worst = 0.0;
    const auto& x = res.x;
    for (std::size_t i = 0; i < lp.A_eq.size(); ++i)
        worst = std::max(worst, std::fabs(dot(lp.A_eq[i], x) - lp.b_eq[i]));
    for (std::size_t i = 0; i < lp.G.size(); ++i) {
        const double slack = lp.h[i] - dot(lp.G[i], x);
        worst = std::max(worst, -slack);
        worst = std::max(worst, std::max(res.dual_ineq[i], 0.0));
        worst = std::max(worst, std::fabs(res.dual_ineq[i] * slack));
    }
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        const double d = res.reduced_cost[j];
        const double l = lp.lower[j], u = lp.upper[j];
        worst = std::max(worst, std::max(l - x[j], x[j] - u));
        // d > 0 requires x at lower; d < 0 requires x at upper.
        if (d > 0.0) worst = std::max(worst, std::isfinite(l) ? std::fabs(d * (x[j] - l)) : d);
        if (d < 0.0) worst = std::max(worst, std::isfinite(u) ? std::fabs(d * (u - x[j])) : -d);
    }
    return worst;
}

std::string lp_to_text(const LinearProgram& lp) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "vars " << lp.num_vars() << "\n";
    os << "obj";
    for (double v : lp.c) os << ' ' << v;
    os << "\n";
    for (std::size_t i = 0; i < lp.A_eq.size(); ++i) {
        os << "eq";
        for (double v : lp.A_eq[i]) os << ' ' << v;
        os << " = " << lp.b_eq[i] << "\n";
    }
    for (std::size_t i = 0; i < lp.G.size(); ++i) {
        os << "le";
        for (double v : lp.G[i]) os << ' ' << v;
        os << " <= " << lp.h[i] << "\n";
    }
    os << "lower";
    for (double v : lp.lower) os << ' ' << v;
    os << "\nupper";
    for (double v : lp.upper) os << ' ' << v;
    os << "\n";
    return os.str();
}

void lp_dump(const LinearProgram& lp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "lp: cannot open dump file " + path);
    out << lp_to_text(lp);
}

// ---------------------------------------------------------------------------
// LinExpr / LpBuilder

LinExpr LinExpr::var(int j, double coef) {
    LinExpr e;
    e.terms.emplace_back(j, coef);
    return e;
}

LinExpr& LinExpr::add(int j, double coef) {
    terms.emplace_back(j, coef);
    return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    for (auto& t : terms) t.second *= s;
    constant *= s;
    return *this;
}

double LinExpr::eval(const Vec& x) const {
    double v = constant;
    for (const auto& [j, c] : terms) v += c * x[j];
    return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) {
    LinExpr nb = b;
    nb *= -1.0;
    return a += nb;
}
LinExpr operator*(double s, LinExpr a) { return a *= s; }

int LpBuilder::add_var(double lower, double upper, double cost) {
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return static_cast<int>(cost_.size()) - 1;
}

void LpBuilder::set_cost(int j, double cost) { cost_.at(j) = cost; }

LpBuilder::SparseRow LpBuilder::to_row(const LinExpr& e) {
    SparseRow r;
    r.terms = e.terms;
    r.rhs = -e.constant;
    return r;
}

void LpBuilder::add_le(const LinExpr& e) { le_.push_back(to_row(e)); }
void LpBuilder::add_eq(const LinExpr& e) { eq_.push_back(to_row(e)); }

void LpBuilder::add_norm_le(const std::vector<LinExpr>& comps, const LinExpr& r, NormKind kind) {
    switch (kind) {
        case NormKind::Linf:
            for (const auto& c : comps) {
                add_le(c - r);
                add_le(-1.0 * c - r);
            }
            break;
        case NormKind::L1: {
            LinExpr sum;
            for (const auto& c : comps) {
                const int t = add_nonneg();
                add_le(c - LinExpr::var(t));
                add_le(-1.0 * c - LinExpr::var(t));
                sum.add(t, 1.0);
            }
            add_le(sum - r);
            break;
        }
        case NormKind::L2:
            for (const auto& c : comps) {
                add_le(c - r);
                add_le(-1.0 * c - r);
            }
            cones_.push_back({comps, r});
            break;
    }
}

LinearProgram LpBuilder::build() const {
    LinearProgram lp;
    const std::size_t n = cost_.size();
    lp.c = cost_;
    lp.lower = lower_;
    lp.upper = upper_;
    auto densify = [n](const SparseRow& r) {
        Vec row(n, 0.0);
        for (const auto& [j, c] : r.terms) row[j] += c;
        return row;
    };
    for (const auto& r : eq_) {
        lp.A_eq.push_back(densify(r));
        lp.b_eq.push_back(r.rhs);
    }
    for (const auto& r : le_) {
        lp.G.push_back(densify(r));
        lp.h.push_back(r.rhs);
    }
    return lp;
}

void LpBuilder::add_cut(std::size_t cone, const Vec& g) {
    const Cone& c = cones_.at(cone);
    if (g.size() != c.comps.size()) throw Error(ErrorCode::DimensionMismatch, "lp builder: cut width");
    LinExpr e;
    for (std::size_t k = 0; k < g.size(); ++k) {
        LinExpr t = c.comps[k];
        t *= g[k];
        e += t;
    }
    add_le(e - c.r);
    cuts_.emplace_back(cone, g);
}

std::vector<std::pair<std::size_t, Vec>> LpBuilder::active_cuts(const Vec& x, double tol) const {
    std::vector<std::pair<std::size_t, Vec>> out;
    for (const auto& [ci, g] : cuts_) {
        const Cone& c = cones_[ci];
        double lhs = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) lhs += g[k] * c.comps[k].eval(x);
        const double r = c.r.eval(x);
        if (lhs >= r - tol * (1.0 + std::fabs(r))) out.emplace_back(ci, g);
    }
    return out;
}

LpResult LpBuilder::solve(int max_rounds, const Repair& repair) {
    const Tolerances& tl = tolerances();
    rounds_ = 0;
    int stall = 0;
    double last = -kInf;
    for (;;) {
        LpResult res = lp_solve(build());
        ++rounds_;
        if (res.status != LpStatus::Optimal || cones_.empty()) return res;
        bool cut = false;
        for (std::size_t ci = 0; ci < cones_.size(); ++ci) {
            const Cone& cone = cones_[ci];
            Vec v(cone.comps.size());
            double nv = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                v[k] = cone.comps[k].eval(res.x);
                nv += v[k] * v[k];
            }
            nv = std::sqrt(nv);
            const double rv = cone.r.eval(res.x);
            if (nv > rv + tl.cut * (1.0 + std::fabs(rv))) {
                for (double& x : v) x /= nv;
                add_cut(ci, v);
                cut = true;
            }
        }
        if (!cut) return res;
        const double scale = 1.0 + std::fabs(res.objective);
        stall = res.objective - last <= 1e-12 * scale ? stall + 1 : 0;
        last = res.objective;
        const bool out_of_rounds = rounds_ >= max_rounds || stall >= tl.cut_stall;
        if (repair) {
            Vec z = res.x;
            repair(z);
            double val = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j) val += cost_[j] * z[j];
            if (val - res.objective <= tl.cut_gap * scale || out_of_rounds) {
                res.x = std::move(z);
                res.objective = val;
                return res;
            }
        }
        if (out_of_rounds) return res;
    }
}

// ---------------------------------------------------------------------------
// Projections

Vec project_box(const Vec& x, const Vec& lower, const Vec& upper) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], lower[i], upper[i]);
    return y;
}

Vec project_simplex(const Vec& x) {
    Vec u = x;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) tau = t;
    }
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(x[i] - tau, 0.0);
    return y;
}

Vec project_capped_simplex(const Vec& x, const Vec& lower, const Vec& upper) {
    const double sl = std::accumulate(lower.begin(), lower.end(), 0.0);
    const double su = std::accumulate(upper.begin(), upper.end(), 0.0);
    if (sl > 1.0 + 1e-12 || su < 1.0 - 1e-12)
        throw Error(ErrorCode::Infeasible, "projection: capped simplex is empty");
    auto total = [&](double tau) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::clamp(x[i] - tau, lower[i], upper[i]);
        return s;
    };
    double lo = -1.0, hi = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lo = std::min(lo, x[i] - upper[i] - 1.0);
        hi = std::max(hi, x[i] - lower[i] + 1.0);
    }
    if (!std::isfinite(lo)) lo = *std::min_element(x.begin(), x.end()) - 2.0;
    if (!std::isfinite(hi)) hi = *std::max_element(x.begin(), x.end()) + 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total(mid) > 1.0) lo = mid;
        else hi = mid;
    }
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i] - 0.5 * (lo + hi), lower[i], upper[i]);
    return y;
}

// ---------------------------------------------------------------------------
// Projected subgradient

SubgradientResult projected_subgradient(const SubgradientProblem& prob) {
    if (!prob.objective || !prob.project)
        throw Error(ErrorCode::InvalidArgument, "subgradient: objective and projection required");
    Vec g;
    Vec x = prob.project(prob.x0);
    double fx = prob.objective(x, g);
    if (!std::isfinite(fx))
        throw Error(ErrorCode::NonFinite, "subgradient: non-finite objective at initial point");

    SubgradientResult out;
    out.x = x;
    out.value = fx;
    const int phases = std::max(1, prob.restarts);
    const int len = std::max(1, (prob.max_iterations + phases - 1) / phases);
    double scale = prob.step_scale;
    int it = 0;
    bool stationary = false;
    for (int ph = 0; ph < phases && it < prob.max_iterations && !stationary; ++ph) {
        x = out.x;
        Vec avg(x.size(), 0.0);
        double wsum = 0.0;
        for (int k = 1; k <= len && it < prob.max_iterations; ++k) {
            fx = prob.objective(x, g);
            ++it;
            if (fx < out.value) {
                out.value = fx;
                out.x = x;
            }
            if (prob.observer) prob.observer(it, x);
            double gn = 0.0;
            for (double v : g) gn += v * v;
            gn = std::sqrt(gn);
            if (gn == 0.0) {
                stationary = true;
                break;
            }
            const double step = scale / std::sqrt(static_cast<double>(k));
            Vec y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - step * g[i] / gn;
            x = prob.project(y);
            for (std::size_t i = 0; i < x.size(); ++i) avg[i] += step * x[i];
            wsum += step;
        }
        if (wsum > 0.0) {
            for (double& v : avg) v /= wsum;
            avg = prob.project(avg);
            Vec ga;
            const double fa = prob.objective(avg, ga);
            out.averaged = avg;
            out.averaged_value = fa;
            if (fa < out.value) {
                out.value = fa;
                out.x = avg;
            }
        }
        scale *= 0.5;
    }
    if (out.averaged.empty()) {
        out.averaged = out.x;
        out.averaged_value = out.value;
    }
    out.iterations = it;
    return out;
}

// ---------------------------------------------------------------------------
// Scalar routines

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw Error(ErrorCode::InvalidArgument, "bisect: bracket does not straddle a root");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double bisect_threshold(const std::function<bool(double)>& pred, double lo, double hi, double tol) {
    if (!pred(hi)) throw Error(ErrorCode::InvalidArgument, "bisect: predicate false at upper end");
    if (pred(lo)) return lo;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

GridMin grid_min(const std::function<double(double)>& f, double lo, double hi, int n, double tol) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "grid_min: need at least two points");
    if (!(hi >= lo)) throw Error(ErrorCode::InvalidArgument, "grid_min: empty interval");
    const double step = (hi - lo) / (n - 1);
    GridMin best{lo, f(lo)};
    int kbest = 0;
    for (int k = 1; k < n; ++k) {
        const double t = k == n - 1 ? hi : lo + k * step;
        const double v = f(t);
        if (v < best.value) {
            best = {t, v};
            kbest = k;
        }
    }
    double a = kbest > 0 ? lo + (kbest - 1) * step : lo;
    double b = kbest < n - 1 ? lo + (kbest + 1) * step : hi;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    if (f1 < best.value) best = {x1, f1};
    if (f2 < best.value) best = {x2, f2};
    return best;
}

}  // namespace gwdro
