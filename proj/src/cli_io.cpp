#include "gwdro/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gwdro/calibration.hpp"
#include "gwdro/transport.hpp"

namespace gwdro {

using nlohmann::json;

std::string to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidWeights: return "InvalidWeights";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::Unbounded: return "Unbounded";
        case ErrorCode::SolverFailure: return "SolverFailure";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::string format_number(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "output: non-finite number");
    if (v == 0.0) v = 0.0;  // drop the sign of −0
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// Text helpers

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

bool parse_double(const std::string& t, double& v) {
    const std::string s = trim(t);
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::out_of_range&) {
        v = s[0] == '-' ? -kInf : kInf;
        return true;
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

double number(const std::string& t, const std::string& what) {
    double v = 0.0;
    if (!parse_double(t, v)) throw Error(ErrorCode::ParseError, what + ": bad number '" + t + "'");
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, what + ": non-finite number '" + t + "'");
    return v;
}

Vec numbers(const std::string& t, const std::string& what) {
    Vec v;
    for (const auto& s : split(t, ',')) v.push_back(number(s, what));
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    f << text;
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
}

struct Table {
    Matrix rows;
    std::vector<std::string> header;
};

Table parse_table(const std::string& text) {
    Table t;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::size_t width = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        Vec row;
        bool numeric = true;
        for (const auto& c : cells) {
            double v = 0.0;
            if (!parse_double(c, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (t.rows.empty() && t.header.empty()) {
                t.header = cells;
                width = cells.size();
                continue;
            }
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": non-numeric entry");
        }
        for (double v : row)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "line " + std::to_string(lineno) + ": non-finite entry");
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                                                   " columns, found " + std::to_string(row.size()));
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) throw Error(ErrorCode::EmptyInput, "no sample rows");
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Input parsing

DiscreteDistribution parse_samples_text(const std::string& text) {
    Table t = parse_table(text);
    const auto it = std::find(t.header.begin(), t.header.end(), "weight");
    if (it == t.header.end()) return DiscreteDistribution::uniform(std::move(t.rows));
    const std::size_t col = static_cast<std::size_t>(it - t.header.begin());
    if (t.header.size() < 2) throw Error(ErrorCode::ParseError, "weight column without coordinates");
    Matrix pts;
    Vec w;
    double s = 0.0;
    for (auto& r : t.rows) {
        w.push_back(r[col]);
        s += r[col];
        r.erase(r.begin() + static_cast<std::ptrdiff_t>(col));
        pts.push_back(std::move(r));
    }
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidWeights, "weights must have a positive sum");
    for (double& v : w) {
        if (v < 0.0) throw Error(ErrorCode::InvalidWeights, "negative weight");
        v /= s;
    }
    // Rounding residue goes to the largest weight so Σw = 1.
    const std::size_t k = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    double rest = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (i != k) rest += w[i];
    w[k] = 1.0 - rest;
    return DiscreteDistribution(std::move(pts), std::move(w));
}

DiscreteDistribution parse_samples(const std::string& path) { return parse_samples_text(read_file(path)); }

Matrix parse_rows_text(const std::string& text) { return parse_table(text).rows; }

Matrix parse_rows(const std::string& path) { return parse_rows_text(read_file(path)); }

NormKind parse_norm(const std::string& s) {
    if (s == "l1") return NormKind::L1;
    if (s == "l2") return NormKind::L2;
    if (s == "linf") return NormKind::Linf;
    throw Error(ErrorCode::ParseError, "norm must be l1, l2 or linf, got '" + s + "'");
}

ScalarPwl parse_scalar(const std::string& d) {
    if (d == "abs") return absolute_loss();
    if (d == "hinge") return hinge_loss();
    const auto colon = d.find(':');
    const std::string head = d.substr(0, colon), arg = colon == std::string::npos ? "" : d.substr(colon + 1);
    if (head == "pwl") {
        std::vector<ScalarPiece> pieces;
        for (const auto& p : split(arg, ';')) {
            const Vec v = numbers(p, "scalar loss");
            if (v.size() != 2) throw Error(ErrorCode::ParseError, "scalar loss: pieces are slope,intercept");
            pieces.push_back({v[0], v[1]});
        }
        return ScalarPwl(pieces);
    }
    if (head == "quadtail") {
        const Vec v = numbers(arg, "scalar loss");
        if (v.size() != 3) throw Error(ErrorCode::ParseError, "scalar loss: quadtail:knot,slope,tangents");
        return quadratic_with_linear_tails(v[0], v[1], static_cast<int>(v[2]));
    }
    throw Error(ErrorCode::ParseError, "scalar loss: unknown descriptor '" + d + "'");
}

std::vector<ScalarPiece> parse_utility(const std::string& d) {
    const auto colon = d.find(':');
    const std::string head = d.substr(0, colon), arg = colon == std::string::npos ? "" : d.substr(colon + 1);
    std::vector<ScalarPiece> pieces;
    if (head == "exp") {
        // Tangents of 1 − e^{−t} on [−1, 1].
        const int n = arg.empty() ? 9 : static_cast<int>(number(arg, "utility"));
        if (n < 2) throw Error(ErrorCode::InvalidArgument, "utility: exp needs at least 2 tangents");
        for (int k = 0; k < n; ++k) {
            const double t = -1.0 + 2.0 * k / (n - 1);
            const double s = std::exp(-t);
            pieces.push_back({s, 1.0 - s * (1.0 + t)});
        }
        return pieces;
    }
    if (head == "util") {
        for (const auto& p : split(arg, ';')) {
            const Vec v = numbers(p, "utility");
            if (v.size() != 2) throw Error(ErrorCode::ParseError, "utility: pieces are slope,intercept");
            pieces.push_back({v[0], v[1]});
        }
        return pieces;
    }
    throw Error(ErrorCode::ParseError, "utility: unknown descriptor '" + d + "'");
}

LossFunction parse_loss(const std::string& d, std::size_t dim) {
    if (d.empty()) throw Error(ErrorCode::InvalidArgument, "loss descriptor required");
    const auto colon = d.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "loss: expected max:, min: or comp:");
    const std::string head = d.substr(0, colon), arg = d.substr(colon + 1);
    if (head == "max" || head == "min") {
        std::vector<AffinePiece> pieces;
        for (const auto& p : split(arg, ';')) {
            Vec v = numbers(p, "loss");
            if (v.size() != dim + 1)
                throw Error(ErrorCode::DimensionMismatch, "loss: each piece needs " + std::to_string(dim) + " slopes and an offset");
            const double b = v.back();
            v.pop_back();
            pieces.push_back({v, b});
        }
        return head == "max" ? LossFunction::max_affine(pieces) : LossFunction::min_affine(pieces);
    }
    if (head == "comp") {
        const auto parts = split(arg, '|');
        if (parts.size() < 2 || parts.size() > 3) throw Error(ErrorCode::ParseError, "loss: comp:x…|scalar[|split:t0]");
        const Vec x = numbers(parts[0], "loss");
        if (x.size() != dim) throw Error(ErrorCode::DimensionMismatch, "loss: direction dimension mismatch");
        std::optional<double> t0;
        if (parts.size() == 3) {
            if (parts[2].rfind("split:", 0) != 0) throw Error(ErrorCode::ParseError, "loss: expected split:t0");
            t0 = number(parts[2].substr(6), "loss");
        }
        return LossFunction::scalar_composite(x, parse_scalar(parts[1]), t0);
    }
    throw Error(ErrorCode::ParseError, "loss: unknown kind '" + head + "'");
}

SupportSet parse_support(const std::string& d, std::size_t dim) {
    if (d == "free" || d.empty()) return SupportSet::unconstrained(dim);
    if (d.rfind("box:", 0) == 0) {
        const auto ranges = split(d.substr(4), ',');
        if (ranges.size() != 1 && ranges.size() != dim) throw Error(ErrorCode::DimensionMismatch, "support: box range count");
        Vec lo(dim), hi(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const auto lh = split(ranges[ranges.size() == 1 ? 0 : k], ':');
            if (lh.size() != 2) throw Error(ErrorCode::ParseError, "support: box ranges are lo:hi");
            lo[k] = number(lh[0], "support");
            hi[k] = number(lh[1], "support");
        }
        return SupportSet::box(lo, hi);
    }
    if (d.rfind("poly:", 0) == 0) {
        const Matrix rows = parse_rows(d.substr(5));
        Matrix G;
        Vec h;
        for (const auto& r : rows) {
            if (r.size() != dim + 1) throw Error(ErrorCode::DimensionMismatch, "support: polyhedron rows need m+1 entries");
            G.emplace_back(r.begin(), r.end() - 1);
            h.push_back(r.back());
        }
        return SupportSet::polyhedron(G, h);
    }
    throw Error(ErrorCode::ParseError, "support: expected free, box:… or poly:path");
}

AlphaGrid parse_alpha_grid(const std::string& s) {
    const auto p = split(s, ':');
    if (p.size() != 3) throw Error(ErrorCode::ParseError, "alpha grid: expected lo:hi:n");
    AlphaGrid g{number(p[0], "alpha grid"), number(p[1], "alpha grid"), static_cast<int>(number(p[2], "alpha grid"))};
    if (!(g.lo >= 0.0 && g.hi <= 1.0 && g.lo <= g.hi) || g.n < 1 || (g.n == 1 && g.lo != g.hi) ||
        static_cast<double>(g.n) != number(p[2], "alpha grid"))
        throw Error(ErrorCode::InvalidArgument, "alpha grid: need 0 ≤ lo ≤ hi ≤ 1 and an integer n ≥ 1");
    return g;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

json config_json(const RunConfig& c) {
    json j;
    j["format_version"] = kFormatVersion;
    j["command"] = c.command;
    j["input"] = c.input;
    j["reference"] = c.reference;
    j["family"] = c.family;
    j["alpha"] = c.alpha;
    if (c.alpha_grid) j["alpha_grid"] = {{"lo", c.alpha_grid->lo}, {"hi", c.alpha_grid->hi}, {"n", c.alpha_grid->n}};
    j["eps"] = c.eps;
    j["norm"] = c.norm;
    j["support"] = c.support;
    j["loss"] = c.loss;
    if (c.split) j["split"] = *c.split;
    j["caps"] = c.caps;
    j["bounds"] = c.bounds;
    j["out"] = c.out;
    j["table"] = c.table;
    j["seed"] = c.seed;
    j["iterations"] = c.iterations;
    j["starts"] = c.starts;
    j["timing"] = c.timing;
    j["force_finite_dim"] = c.force_finite_dim;
    j["N"] = c.N;
    j["eta"] = c.eta;
    j["m"] = c.m;
    j["a"] = c.a;
    j["c1"] = c.c1;
    j["c2"] = c.c2;
    j["schedule"] = c.schedule;
    return j;
}

template <class T>
void get_if(const json& j, const char* key, T& v) {
    if (j.contains(key)) v = j.at(key).get<T>();
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) { return config_json(cfg).dump(2); }

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config: expected an object");
    static const std::vector<std::string> known = {
        "format_version", "command", "input", "reference", "family", "alpha", "alpha_grid", "eps", "norm", "support",
        "loss", "split", "caps", "bounds", "out", "table", "seed", "iterations", "starts", "timing", "force_finite_dim",
        "N", "eta", "m", "a", "c1", "c2", "schedule"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw Error(ErrorCode::ParseError, "config: unknown key '" + k + "'");
    RunConfig c;
    try {
        if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion)
            throw Error(ErrorCode::ParseError, "config: unsupported format_version");
        get_if(j, "command", c.command);
        get_if(j, "input", c.input);
        get_if(j, "reference", c.reference);
        get_if(j, "family", c.family);
        get_if(j, "alpha", c.alpha);
        if (j.contains("alpha_grid")) {
            const auto& g = j.at("alpha_grid");
            c.alpha_grid = AlphaGrid{g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("n").get<int>()};
        }
        get_if(j, "eps", c.eps);
        get_if(j, "norm", c.norm);
        get_if(j, "support", c.support);
        get_if(j, "loss", c.loss);
        if (j.contains("split")) c.split = j.at("split").get<double>();
        get_if(j, "caps", c.caps);
        get_if(j, "bounds", c.bounds);
        get_if(j, "out", c.out);
        get_if(j, "table", c.table);
        get_if(j, "seed", c.seed);
        get_if(j, "iterations", c.iterations);
        get_if(j, "starts", c.starts);
        get_if(j, "timing", c.timing);
        get_if(j, "force_finite_dim", c.force_finite_dim);
        get_if(j, "N", c.N);
        get_if(j, "eta", c.eta);
        get_if(j, "m", c.m);
        get_if(j, "a", c.a);
        get_if(j, "c1", c.c1);
        get_if(j, "c2", c.c2);
        get_if(j, "schedule", c.schedule);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

RiskSpec risk_from(const std::string& family, double alpha) {
    if (family == "cvar") return RiskSpec::cvar(alpha);
    if (family == "expectile") return RiskSpec::expectile(alpha);
    if (family == "w1") return RiskSpec::expectation();
    if (family == "winf") return RiskSpec::ess_sup();
    throw Error(ErrorCode::InvalidArgument, "family must be cvar, expectile, w1 or winf, got '" + family + "'");
}

void validate_config(const RunConfig& c) {
    static const std::vector<std::string> commands = {"distance", "wce", "sweep", "portfolio", "regress", "classify", "calibrate"};
    if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
        throw Error(ErrorCode::InvalidArgument, "unknown command '" + c.command + "'");
    if (c.command != "sweep" && c.command != "calibrate") risk_from(c.family, c.alpha);
    if (c.command == "calibrate" && c.schedule.empty() && c.family != "w1") risk_from(c.family, c.alpha);
    if ((c.command == "portfolio" || c.command == "regress" || c.command == "classify") && c.family != "cvar" &&
        c.family != "expectile")
        throw Error(ErrorCode::InvalidArgument, "decision drivers need family cvar or expectile");
    if (!std::isfinite(c.eps) || c.eps < 0.0) throw Error(ErrorCode::InvalidArgument, "eps must be a nonnegative number");
    parse_norm(c.norm);
    if (c.iterations <= 0 || c.starts <= 0) throw Error(ErrorCode::InvalidArgument, "iterations and starts must be positive");
    if (c.command != "calibrate" && c.input.empty()) throw Error(ErrorCode::InvalidArgument, "--input is required");
    if ((c.command == "wce" || c.command == "sweep") && c.loss.empty()) throw Error(ErrorCode::InvalidArgument, "--loss is required");
    if (c.command == "sweep" && !c.alpha_grid) throw Error(ErrorCode::InvalidArgument, "--alpha-grid is required");
    if (c.alpha_grid) parse_alpha_grid(format_number(c.alpha_grid->lo) + ":" + format_number(c.alpha_grid->hi) + ":" +
                                       std::to_string(c.alpha_grid->n));
    if (c.command == "calibrate" && !(c.N > 0.0)) throw Error(ErrorCode::InvalidArgument, "--N is required");
}

// ---------------------------------------------------------------------------
// Sweep

std::vector<SweepRow> run_sweep(const LossFunction& loss, const DiscreteDistribution& samples, const SupportSet& support,
                                double eps, NormKind norm, const AlphaGrid& grid) {
    auto point = [&](int k) {
        SweepRow r;
        r.alpha = grid.at(k);
        const double a = r.alpha;
        r.beta = a > 0.0 ? (1.0 - a) / a : kInf;
        if (a >= 1.0) {
            // β = 0 limit of both families: the type-∞ ball.
            const AmbiguityBall ball(RiskSpec::ess_sup(), norm, eps, samples, support);
            const double sphere = worst_case_expectation(loss, ball).value;
            const double saa = saa_value(loss, samples);
            r.value_cvar = std::max(sphere, saa);
            r.branch_cvar = sphere >= saa ? 1 : 2;
            r.value_expectile = sphere;
            r.attained_expectile = true;
            return r;
        }
        const AmbiguityBall cb(RiskSpec::cvar(a), norm, eps, samples, support);
        const WceResult c = worst_case_expectation(loss, cb);
        r.value_cvar = c.value;
        r.branch_cvar = c.diagnostics.active_branch;
        if (a >= 0.5) {
            const AmbiguityBall eb(RiskSpec::expectile(a), norm, eps, samples, support);
            const WceResult e = worst_case_expectation(loss, eb);
            r.value_expectile = e.value;
            r.attained_expectile = e.worst_case ? e.worst_case->attained : false;
        }
        return r;
    };
    std::vector<SweepRow> rows(static_cast<std::size_t>(grid.n));
    const int lanes = std::max(1u, std::thread::hardware_concurrency());
    for (int start = 0; start < grid.n; start += lanes) {
        std::vector<std::future<SweepRow>> jobs;
        for (int k = start; k < std::min(grid.n, start + lanes); ++k) jobs.push_back(std::async(std::launch::async, point, k));
        for (int k = start; k < std::min(grid.n, start + lanes); ++k) rows[static_cast<std::size_t>(k)] = jobs[static_cast<std::size_t>(k - start)].get();
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) { return x.alpha < y.alpha; });
    return rows;
}

std::string sweep_table_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    os << "alpha,beta,value_cvar,value_expectile,branch_cvar,attained_expectile\n";
    for (const auto& r : rows) {
        os << format_number(r.alpha) << ',' << (std::isfinite(r.beta) ? format_number(r.beta) : "") << ','
           << format_number(r.value_cvar) << ',' << (r.value_expectile ? format_number(*r.value_expectile) : "") << ','
           << r.branch_cvar << ',' << (r.attained_expectile ? (*r.attained_expectile ? "1" : "0") : "") << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Commands

namespace {

json vec_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x == 0.0 ? 0.0 : x);
    return a;
}

json distribution_json(const DiscreteDistribution& d) {
    json pts = json::array();
    for (const auto& p : d.points()) pts.push_back(vec_json(p));
    return {{"points", pts}, {"weights", vec_json(d.weights())}};
}

json report_json(const BranchReport& r) {
    json j{{"active_branch", r.active_branch},
           {"value_regularized", r.value_regularized},
           {"value_shifted", r.value_shifted},
           {"iterations_branch1", r.iterations_branch1},
           {"iterations_branch2", r.iterations_branch2}};
    if (!r.sample_terms.empty()) j["sample_terms"] = r.sample_terms;
    return j;
}

json driver_json(const DriverResult& dr, const DriverResult& saa) {
    return {{"decision", vec_json(dr.decision)},
            {"value", dr.value},
            {"saa_at_decision", dr.saa},
            {"iterations", dr.iterations},
            {"branch_report", report_json(dr.report)},
            {"saa_baseline", {{"decision", vec_json(saa.decision)}, {"value", saa.value}}}};
}

json wce_json(const WceResult& r) {
    json j{{"value", r.value}, {"method", to_string(r.method)}};
    json d{{"lp_solves", r.diagnostics.iterations}, {"cut_rounds", r.diagnostics.cut_rounds}};
    if (r.diagnostics.active_branch) d["active_branch"] = r.diagnostics.active_branch;
    if (std::isfinite(r.diagnostics.branch_sphere)) d["branch_sphere"] = r.diagnostics.branch_sphere;
    if (std::isfinite(r.diagnostics.branch_wasserstein)) d["branch_wasserstein"] = r.diagnostics.branch_wasserstein;
    if (std::isfinite(r.diagnostics.duality_gap)) d["duality_gap"] = r.diagnostics.duality_gap;
    if (!r.diagnostics.escaping.empty()) {
        json e = json::array();
        for (char c : r.diagnostics.escaping) e.push_back(c != 0);
        d["escaping"] = e;
    }
    if (r.diagnostics.t_star && std::isfinite(*r.diagnostics.t_star)) d["t_star"] = *r.diagnostics.t_star;
    if (r.diagnostics.lambda && std::isfinite(*r.diagnostics.lambda)) d["lambda"] = *r.diagnostics.lambda;
    j["diagnostics"] = d;
    if (r.worst_case) {
        json w{{"attained", r.worst_case->attained}};
        if (r.worst_case->exact) w["exact"] = distribution_json(*r.worst_case->exact);
        if (r.worst_case->asymptotic_family) {
            const auto& fam = *r.worst_case->asymptotic_family;
            json laws = json::array();
            for (const auto& l : fam.laws) {
                json lj{{"atoms", json::array()}, {"probs", vec_json(l.probs)}, {"escaping", l.escaping}};
                for (const auto& a : l.atoms) lj["atoms"].push_back(vec_json(a));
                if (l.escaping) {
                    lj["direction"] = vec_json(l.direction);
                    lj["escape_coef"] = l.escape_coef;
                }
                laws.push_back(lj);
            }
            w["asymptotic_family"] = {{"scale", fam.scale}, {"laws", laws}};
        }
        j["worst_case"] = w;
    }
    return j;
}

void check_finite(const json& j) {
    if (j.is_number_float() && !std::isfinite(j.get<double>())) throw Error(ErrorCode::NonFinite, "output: non-finite number");
    if (j.is_structured())
        for (const auto& v : j) check_finite(v);
}

Vec parse_caps(const std::string& s, std::size_t n) {
    Vec v = numbers(s, "caps");
    if (v.size() == 1) v.assign(n, v[0]);
    if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "caps: one bound per asset");
    return v;
}

DecisionSet parse_bounds(const std::string& s, std::size_t d) {
    const SupportSet b = parse_support("box:" + s, d);
    return DecisionSet::box(b.lower(), b.upper());
}

void split_labelled(const Matrix& rows, Matrix& x, Vec& y) {
    if (rows.front().size() < 2) throw Error(ErrorCode::DimensionMismatch, "labelled data needs features and a target column");
    for (const auto& r : rows) {
        x.emplace_back(r.begin(), r.end() - 1);
        y.push_back(r.back());
    }
}

json execute(const RunConfig& c, std::string& table) {
    const NormKind norm = parse_norm(c.norm);
    DriverOptions opt;
    opt.iterations = c.iterations;
    opt.starts = c.starts;
    opt.seed = c.seed;
    json res;
    if (c.command == "distance") {
        const auto P = parse_samples(c.input);
        const auto Q = c.reference.empty() ? DiscreteDistribution::dirac(Vec(P.dim(), 0.0)) : parse_samples(c.reference);
        const auto r = coherent_distance(Q, P, norm, risk_from(c.family, c.alpha));
        res["distance"] = r.distance;
        if (r.t_star && std::isfinite(*r.t_star)) res["t_star"] = *r.t_star;
        json mass = json::array();
        const auto& M = r.coupling.mass();
        for (std::size_t i = 0; i < M.size(); ++i)
            for (std::size_t j = 0; j < M[i].size(); ++j)
                if (M[i][j] > 0.0) mass.push_back({{"i", i}, {"j", j}, {"mass", M[i][j]}});
        res["coupling"] = mass;
    } else if (c.command == "wce") {
        const auto P = parse_samples(c.input);
        const auto loss = parse_loss(c.loss, P.dim());
        const AmbiguityBall ball(risk_from(c.family, c.alpha), norm, c.eps, P, parse_support(c.support, P.dim()));
        WceOptions o;
        o.force_finite_dim = c.force_finite_dim;
        res = wce_json(worst_case_expectation(loss, ball, o));
        res["saa"] = saa_value(loss, P);
    } else if (c.command == "sweep") {
        const auto P = parse_samples(c.input);
        const auto loss = parse_loss(c.loss, P.dim());
        const auto rows = run_sweep(loss, P, parse_support(c.support, P.dim()), c.eps, norm, *c.alpha_grid);
        table = sweep_table_csv(rows);
        json jr = json::array();
        for (const auto& r : rows) {
            json row{{"alpha", r.alpha}, {"value_cvar", r.value_cvar}, {"branch_cvar", r.branch_cvar}};
            if (std::isfinite(r.beta)) row["beta"] = r.beta;
            if (r.value_expectile) row["value_expectile"] = *r.value_expectile;
            if (r.attained_expectile) row["attained_expectile"] = *r.attained_expectile;
            jr.push_back(row);
        }
        res["rows"] = jr;
        res["saa"] = saa_value(loss, P);
    } else if (c.command == "portfolio") {
        PortfolioProblem p;
        p.returns = parse_rows(c.input);
        p.utility = parse_utility(c.loss.empty() ? "exp" : c.loss);
        const std::size_t n = p.returns.front().size();
        if (!c.caps.empty()) p.feasible = DecisionSet::capped_simplex(Vec(n, 0.0), parse_caps(c.caps, n));
        p.ball = {c.family == "cvar" ? RiskFamily::CVaR : RiskFamily::Expectile, c.alpha, c.eps, norm};
        res = driver_json(portfolio_optimize(p, opt), saa_baseline(p, opt));
        res["objective"] = "minimise worst-case expected disutility -u(x'xi)";
    } else if (c.command == "regress" || c.command == "classify") {
        LearningProblem p;
        split_labelled(parse_rows(c.input), p.features, p.targets);
        p.loss = parse_scalar(c.loss.empty() ? (c.command == "regress" ? "abs" : "hinge") : c.loss);
        p.split = c.split;
        if (!c.bounds.empty()) p.coefficients = parse_bounds(c.bounds, p.features.front().size());
        p.ball = {c.family == "cvar" ? RiskFamily::CVaR : RiskFamily::Expectile, c.alpha, c.eps, norm};
        if (c.command == "regress") res = driver_json(dr_regression(p, opt), saa_regression(p, opt));
        else res = driver_json(dr_classification(p, opt), saa_classification(p, opt));
    } else if (c.command == "calibrate") {
        if (!c.schedule.empty()) {
            const auto s = RadiusSchedule::parse(c.schedule);
            res["schedule"] = s.describe();
            res["k_N"] = s.k(c.N);
            res["radius"] = radius_schedule(c.N, s, static_cast<std::size_t>(c.m));
        } else {
            CalibrationInputs in;
            in.N = c.N;
            in.eta = c.eta;
            if (c.m <= 0) throw Error(ErrorCode::InvalidArgument, "calibration: m must be positive");
            in.m = static_cast<std::size_t>(c.m);
            in.a = c.a;
            in.c1 = c.c1;
            in.c2 = c.c2;
            const auto r = radius_finite_sample(in, risk_from(c.family, c.alpha));
            res["eps0"] = r.eps0;
            res["radius"] = r.radius;
            res["regime"] = r.small_regime ? "eps0<=c" : "eps0>c";
            res["envelope_constant"] = risk_from(c.family, c.alpha).envelope_constant();
        }
    }
    return res;
}

}  // namespace

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        validate_config(cfg);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    }
    try {
        const auto t0 = std::chrono::steady_clock::now();
        std::string table;
        json body = execute(cfg, table);
        json doc;
        doc["format_version"] = kFormatVersion;
        doc["command"] = cfg.command;
        doc["config"] = config_json(cfg);
        doc["result"] = body;
        if (cfg.timing)
            doc["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        check_finite(doc);
        const std::string text = doc.dump(2) + "\n";
        if (cfg.out.empty()) out << text;
        else write_file(cfg.out, text);
        if (!table.empty()) {
            if (cfg.table.empty()) out << table;
            else write_file(cfg.table, table);
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace gwdro
