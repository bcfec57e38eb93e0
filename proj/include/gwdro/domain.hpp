#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwdro {

using Vec = std::vector<double>;
using Matrix = std::vector<Vec>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    InvalidWeights,
    Infeasible,
    Unbounded,
    SolverFailure,
    TooLarge,
    EmptyInput,
    NonFinite,
    ParseError,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

double dot(const Vec& a, const Vec& b);
Vec axpy(double alpha, const Vec& x, const Vec& y);  // alpha*x + y

// ---------------------------------------------------------------------------
// Distributions

class DiscreteDistribution {
public:
    DiscreteDistribution(Matrix points, Vec weights);
    static DiscreteDistribution uniform(Matrix points);
    static DiscreteDistribution dirac(Vec point);

    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return points_.front().size(); }
    const Matrix& points() const { return points_; }
    const Vec& weights() const { return weights_; }
    const Vec& point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

private:
    Matrix points_;
    Vec weights_;
};

class Coupling {
public:
    Coupling(DiscreteDistribution left, DiscreteDistribution right, Matrix mass);

    const DiscreteDistribution& left() const { return left_; }
    const DiscreteDistribution& right() const { return right_; }
    const Matrix& mass() const { return mass_; }

private:
    DiscreteDistribution left_;
    DiscreteDistribution right_;
    Matrix mass_;
};

// ---------------------------------------------------------------------------
// Norms

enum class NormKind { L1, L2, Linf };

NormKind dual(NormKind kind);
double norm(const Vec& v, NormKind kind);
double dual_norm(const Vec& v, NormKind kind);
double distance(const Vec& a, const Vec& b, NormKind kind);
// Unit vector e (‖e‖ = 1 in `kind`) with aᵀe = ‖a‖_*.
Vec unit_maximizer(const Vec& a, NormKind kind);
// One element of the subdifferential of ‖·‖_kind at v.
Vec norm_subgradient(const Vec& v, NormKind kind);
std::string to_string(NormKind kind);

// ---------------------------------------------------------------------------
// Support sets

class SupportSet {
public:
    enum class Kind { Unconstrained, Box, Polyhedron };

    static SupportSet unconstrained(std::size_t dim);
    static SupportSet box(Vec lower, Vec upper);
    static SupportSet polyhedron(Matrix G, Vec h);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    bool is_unconstrained() const;
    bool contains(const Vec& x, double tol = 1e-9) const;
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }
    // Row description Gξ ≤ h (finite box bounds become rows).
    const Matrix& rows_G() const { return G_; }
    const Vec& rows_h() const { return h_; }

private:
    SupportSet() = default;
    Kind kind_ = Kind::Unconstrained;
    std::size_t dim_ = 0;
    Vec lower_, upper_;
    Matrix G_;
    Vec h_;
};

// ---------------------------------------------------------------------------
// Losses

struct AffinePiece {
    Vec a;
    double b = 0.0;
};

struct ScalarPiece {
    double slope = 0.0;
    double intercept = 0.0;
};

// Convex piecewise-linear f(t) = max_k(slope_k t + intercept_k).
class ScalarPwl {
public:
    explicit ScalarPwl(std::vector<ScalarPiece> pieces);

    double operator()(double t) const;
    double slope_at(double t) const;  // slope of an active piece (largest on ties)
    double lipschitz() const;
    // A minimiser of f; -inf when f is increasing everywhere, +inf when decreasing.
    double argmin() const;
    const std::vector<ScalarPiece>& pieces() const { return pieces_; }
    // Pieces that attain the max somewhere, sorted by slope.
    const std::vector<ScalarPiece>& envelope() const { return envelope_; }

private:
    std::vector<ScalarPiece> pieces_;
    std::vector<ScalarPiece> envelope_;
};

// t² on [−knot, knot] (lower tangent approximation with `tangents` points,
// knots included) continued linearly with slope `tail_slope` outside.
ScalarPwl quadratic_with_linear_tails(double knot, double tail_slope, int tangents);

class LossFunction {
public:
    enum class Kind { MaxAffine, MinAffine, ScalarComposite };

    static LossFunction max_affine(std::vector<AffinePiece> pieces);
    static LossFunction min_affine(std::vector<AffinePiece> pieces);
    // f(xᵀξ); t0 defaults to the minimiser of f and is validated otherwise.
    static LossFunction scalar_composite(Vec x, ScalarPwl f, std::optional<double> t0 = std::nullopt);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    bool is_convex() const { return kind_ != Kind::MinAffine; }
    const std::vector<AffinePiece>& pieces() const { return pieces_; }
    const Vec& direction() const { return x_; }
    const ScalarPwl& scalar() const { return *f_; }
    double split() const { return t0_; }

    double evaluate(const Vec& xi) const;
    double operator()(const Vec& xi) const { return evaluate(xi); }
    // f clamped at the split: f1(t) = f(min(t, t0)), f2(t) = f(max(t, t0)).
    double f1(double t) const;
    double f2(double t) const;
    double lipschitz(NormKind norm) const;
    // max ‖g‖_* over g in the subdifferential at xi (active pieces within tol).
    double local_slope(const Vec& xi, NormKind norm, double tol = 1e-12) const;
    // Composite and max-affine losses as an explicit max-of-affine list.
    LossFunction as_max_affine() const;

private:
    LossFunction() = default;
    Kind kind_ = Kind::MaxAffine;
    std::size_t dim_ = 0;
    std::vector<AffinePiece> pieces_;
    Vec x_;
    std::optional<ScalarPwl> f_;
    double t0_ = 0.0;
};

double evaluate_loss(const LossFunction& loss, const Vec& xi);

struct SphereMax {
    double value = 0.0;
    Vec maximizer;  // unit direction e*
};

SphereMax sphere_max(const LossFunction& loss, const Vec& center, double eps, NormKind norm);

// ---------------------------------------------------------------------------
// Risk specifications and balls

class RiskSpec {
public:
    enum class Kind { Expectation, CVaR, Expectile, EssSup };

    static RiskSpec expectation();
    static RiskSpec cvar(double alpha);
    static RiskSpec expectile(double alpha);
    static RiskSpec ess_sup();

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double envelope_constant() const;
    std::string name() const;

private:
    RiskSpec(Kind kind, double alpha) : kind_(kind), alpha_(alpha) {}
    Kind kind_;
    double alpha_;
};

struct AmbiguityBall {
    AmbiguityBall(RiskSpec risk, NormKind norm, double radius, DiscreteDistribution center,
                  std::optional<SupportSet> support = std::nullopt);

    RiskSpec risk;
    NormKind norm;
    double radius;
    DiscreteDistribution center;
    SupportSet support;
};

}  // namespace gwdro
