#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gwdro/applications.hpp"
#include "gwdro/domain.hpp"
#include "gwdro/worst_case.hpp"

namespace gwdro {

inline constexpr int kFormatVersion = 1;

std::string to_string(ErrorCode code);

// ---------------------------------------------------------------------------
// Input parsing

// Comma-separated rows, optional header line; a header column named "weight"
// carries sample weights (normalised), otherwise weights are uniform.
DiscreteDistribution parse_samples(const std::string& path);
DiscreteDistribution parse_samples_text(const std::string& text);
// Raw numeric rows (for labelled data where the last column is the target).
Matrix parse_rows_text(const std::string& text);
Matrix parse_rows(const std::string& path);

NormKind parse_norm(const std::string& s);

// max:a…,b;a…,b | min:a…,b;… | comp:x…|<scalar>[|split:t0]
LossFunction parse_loss(const std::string& descriptor, std::size_t dim);
// abs | hinge | pwl:s,b;s,b | quadtail:knot,slope,tangents
ScalarPwl parse_scalar(const std::string& descriptor);
// exp[:n] | util:s,b;s,b  (min-of-affine, nondecreasing)
std::vector<ScalarPiece> parse_utility(const std::string& descriptor);
// free | box:lo:hi[,lo:hi…] | poly:path (rows g…,h meaning gᵀξ ≤ h)
SupportSet parse_support(const std::string& descriptor, std::size_t dim);

struct AlphaGrid {
    double lo = 0.0;
    double hi = 1.0;
    int n = 21;
    double at(int k) const { return n == 1 ? lo : lo + (hi - lo) * k / (n - 1); }
};
AlphaGrid parse_alpha_grid(const std::string& s);

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
    std::string command;
    std::string input;
    std::string reference;  // distance: second distribution (default δ₀)
    std::string family = "cvar";
    double alpha = 0.5;
    std::optional<AlphaGrid> alpha_grid;
    double eps = 0.0;
    std::string norm = "l2";
    std::string support = "free";
    std::string loss;
    std::optional<double> split;
    std::string caps;    // portfolio: upper bounds, comma-separated
    std::string bounds;  // learning: coefficient box lo:hi[,lo:hi…]
    std::string out;
    std::string table;   // sweep: CSV path
    std::uint64_t seed = 0;
    int iterations = 2000;
    int starts = 5;
    bool timing = false;
    bool force_finite_dim = false;
    // calibrate
    double N = 0.0;
    double eta = 0.05;
    int m = 1;
    double a = 2.0;
    double c1 = 0.0;
    double c2 = 0.0;
    std::string schedule;
};

std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& cfg);

RiskSpec risk_from(const std::string& family, double alpha);

// ---------------------------------------------------------------------------
// Commands: write the result document (and the sweep table) and return an exit code.

struct SweepRow {
    double alpha = 0.0;
    double beta = 0.0;  // (1−α)/α; the CVaR parameter 1−α follows from alpha
    double value_cvar = 0.0;
    std::optional<double> value_expectile;  // α < 1/2 has no expectile ball
    int branch_cvar = 0;
    std::optional<bool> attained_expectile;
};

std::vector<SweepRow> run_sweep(const LossFunction& loss, const DiscreteDistribution& samples, const SupportSet& support,
                                double eps, NormKind norm, const AlphaGrid& grid);
std::string sweep_table_csv(const std::vector<SweepRow>& rows);

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Number formatting shared by all emitted documents.
std::string format_number(double v);

}  // namespace gwdro
