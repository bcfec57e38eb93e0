#include "gwdro/risk_measures.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace gwdro {

ScalarDistribution::ScalarDistribution(Vec values, Vec weights) : values_(std::move(values)), weights_(std::move(weights)) {
    if (values_.empty()) throw Error(ErrorCode::EmptyInput, "scalar distribution: empty");
    if (values_.size() != weights_.size())
        throw Error(ErrorCode::DimensionMismatch, "scalar distribution: values/weights size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) throw Error(ErrorCode::NonFinite, "scalar distribution: non-finite value");
        if (!(weights_[i] >= 0.0)) throw Error(ErrorCode::InvalidWeights, "scalar distribution: negative weight");
        s += weights_[i];
    }
    if (std::fabs(s - 1.0) > 1e-12) throw Error(ErrorCode::InvalidWeights, "scalar distribution: weights must sum to 1");
}

ScalarDistribution ScalarDistribution::uniform(Vec values) {
    const std::size_t n = values.size();
    if (n == 0) throw Error(ErrorCode::EmptyInput, "scalar distribution: empty");
    return ScalarDistribution(std::move(values), Vec(n, 1.0 / static_cast<double>(n)));
}

double ScalarDistribution::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += weights_[i] * values_[i];
    return s;
}

double ScalarDistribution::min() const {
    double v = kInf;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (weights_[i] > 0.0) v = std::min(v, values_[i]);
    return v;
}

double ScalarDistribution::max() const {
    double v = -kInf;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (weights_[i] > 0.0) v = std::max(v, values_[i]);
    return v;
}

namespace {

void check_level(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "risk level must lie in [0,1)");
}

std::vector<std::size_t> order(const ScalarDistribution& X) {
    std::vector<std::size_t> idx(X.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return X.values()[a] < X.values()[b]; });
    return idx;
}

}  // namespace

double value_at_risk(const ScalarDistribution& X, double alpha) {
    check_level(alpha);
    double cum = 0.0;
    for (std::size_t i : order(X)) {
        if (X.weights()[i] <= 0.0) continue;
        cum += X.weights()[i];
        if (cum >= alpha - 1e-12) return X.values()[i];
    }
    return X.max();
}

double cvar_tail_average(const ScalarDistribution& X, double alpha) {
    check_level(alpha);
    const auto idx = order(X);
    double tail = 1.0 - alpha;
    double acc = 0.0;
    for (auto it = idx.rbegin(); it != idx.rend() && tail > 0.0; ++it) {
        const double w = std::min(X.weights()[*it], tail);
        acc += w * X.values()[*it];
        tail -= w;
    }
    // Remaining tail mass (rounding) sits on the smallest atom.
    if (tail > 0.0) acc += tail * X.min();
    return acc / (1.0 - alpha);
}

double cvar_minimization(const ScalarDistribution& X, double alpha) {
    check_level(alpha);
    double best = kInf;
    for (double t : X.values()) {
        double e = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) e += X.weights()[i] * std::max(X.values()[i] - t, 0.0);
        best = std::min(best, t + e / (1.0 - alpha));
    }
    return best;
}

double cvar(const ScalarDistribution& X, double alpha) {
    const double v = cvar_tail_average(X, alpha);
    assert(std::fabs(v - cvar_minimization(X, alpha)) <= 1e-10 * (1.0 + std::fabs(v)));
    return v;
}

double expectile(const ScalarDistribution& X, double alpha) {
    if (!(alpha >= 0.5 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "expectile level must lie in [1/2,1)");
    // g(x) = α E(X−x)+ − (1−α) E(x−X)+ is continuous and decreasing.
    auto g = [&](double x) {
        double up = 0.0, down = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            const double d = X.values()[i] - x;
            if (d > 0.0) up += X.weights()[i] * d;
            else down -= X.weights()[i] * d;
        }
        return alpha * up - (1.0 - alpha) * down;
    };
    double lo = X.min(), hi = X.max();
    if (hi - lo <= 0.0) return lo;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double ess_sup(const ScalarDistribution& X) { return X.max(); }

double evaluate(const RiskSpec& spec, const ScalarDistribution& X) {
    switch (spec.kind()) {
        case RiskSpec::Kind::Expectation: return X.mean();
        case RiskSpec::Kind::CVaR: return cvar(X, spec.alpha());
        case RiskSpec::Kind::Expectile: return expectile(X, spec.alpha());
        case RiskSpec::Kind::EssSup: return ess_sup(X);
    }
    return 0.0;
}

}  // namespace gwdro
