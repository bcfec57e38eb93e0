#include <iostream>

#include <CLI11.hpp>

#include "gwdro/cli_io.hpp"

using namespace gwdro;

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust evaluation over coherent Wasserstein balls"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration; flags override its entries");

    RunConfig flags;
    std::string alpha_grid;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", flags.input, "CSV samples (one per line, optional header)");
        sub->add_option("--family", flags.family, "cvar | expectile | w1 | winf")
            ->check(CLI::IsMember({"cvar", "expectile", "w1", "winf"}));
        sub->add_option("--alpha", flags.alpha, "risk level");
        sub->add_option("--eps", flags.eps, "ball radius");
        sub->add_option("--norm", flags.norm, "l1 | l2 | linf")->check(CLI::IsMember({"l1", "l2", "linf"}));
        sub->add_option("--out", flags.out, "result document path (default stdout)");
        sub->add_option("--seed", flags.seed, "multi-start seed");
        sub->add_flag("--timing", flags.timing, "add wall-clock time to the result document");
    };
    auto* distance = app.add_subcommand("distance", "coherent Wasserstein distance between two samples");
    auto* wce = app.add_subcommand("wce", "worst-case expectation over the ball");
    auto* sweep = app.add_subcommand("sweep", "worst-case values of both families over an alpha grid");
    auto* portfolio = app.add_subcommand("portfolio", "distributionally robust portfolio");
    auto* regress = app.add_subcommand("regress", "distributionally robust regression (last column is the target)");
    auto* classify = app.add_subcommand("classify", "distributionally robust classification (last column is the ±1 label)");
    auto* calibrate = app.add_subcommand("calibrate", "radius selection");
    for (auto* s : {distance, wce, sweep, portfolio, regress, classify, calibrate}) add_common(s);

    distance->add_option("--reference", flags.reference, "second CSV distribution (default: Dirac at the origin)");
    for (auto* s : {wce, sweep}) {
        s->add_option("--loss", flags.loss, "max:a…,b;… | min:a…,b;… | comp:x…|scalar[|split:t0]");
        s->add_option("--support", flags.support, "free | box:lo:hi[,lo:hi…] | poly:path");
    }
    wce->add_flag("--force-finite-dim", flags.force_finite_dim, "solve the CVaR program instead of the closed form");
    sweep->add_option("--alpha-grid", alpha_grid, "lo:hi:n");
    sweep->add_option("--table", flags.table, "CSV table path (default stdout after the document)");
    portfolio->add_option("--loss", flags.loss, "utility: exp[:n] | util:s,b;s,b");
    portfolio->add_option("--caps", flags.caps, "upper bounds per asset (one value broadcasts)");
    for (auto* s : {regress, classify}) {
        s->add_option("--loss", flags.loss, "abs | hinge | pwl:s,b;… | quadtail:knot,slope,n");
        s->add_option("--bounds", flags.bounds, "coefficient box lo:hi[,lo:hi…]");
    }
    regress->add_option("--split", flags.split, "split point of a non-symmetric loss");
    for (auto* s : {portfolio, regress, classify}) {
        s->add_option("--iterations", flags.iterations, "subgradient iterations per start");
        s->add_option("--starts", flags.starts, "number of starts");
    }
    calibrate->add_option("--N", flags.N, "sample count");
    calibrate->add_option("--eta", flags.eta, "confidence level in (0,1)");
    calibrate->add_option("--m", flags.m, "dimension");
    calibrate->add_option("--a", flags.a, "light-tail exponent");
    calibrate->add_option("--c1", flags.c1, "concentration constant c1");
    calibrate->add_option("--c2", flags.c2, "concentration constant c2");
    calibrate->add_option("--schedule", flags.schedule, "builtin | log:p | pow:q | k:value");

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        CLI::App* sub = app.get_subcommands().front();
        cfg.command = sub->get_name();
        auto given = [&](const char* name) { return sub->get_option_no_throw(name) && sub->count(name) > 0; };
        if (given("--input")) cfg.input = flags.input;
        if (given("--reference")) cfg.reference = flags.reference;
        if (given("--family")) cfg.family = flags.family;
        if (given("--alpha")) cfg.alpha = flags.alpha;
        if (given("--alpha-grid")) cfg.alpha_grid = parse_alpha_grid(alpha_grid);
        if (given("--eps")) cfg.eps = flags.eps;
        if (given("--norm")) cfg.norm = flags.norm;
        if (given("--support")) cfg.support = flags.support;
        if (given("--loss")) cfg.loss = flags.loss;
        if (given("--split")) cfg.split = flags.split;
        if (given("--caps")) cfg.caps = flags.caps;
        if (given("--bounds")) cfg.bounds = flags.bounds;
        if (given("--out")) cfg.out = flags.out;
        if (given("--table")) cfg.table = flags.table;
        if (given("--seed")) cfg.seed = flags.seed;
        if (given("--iterations")) cfg.iterations = flags.iterations;
        if (given("--starts")) cfg.starts = flags.starts;
        if (given("--timing")) cfg.timing = true;
        if (given("--force-finite-dim")) cfg.force_finite_dim = true;
        if (given("--N")) cfg.N = flags.N;
        if (given("--eta")) cfg.eta = flags.eta;
        if (given("--m")) cfg.m = flags.m;
        if (given("--a")) cfg.a = flags.a;
        if (given("--c1")) cfg.c1 = flags.c1;
        if (given("--c2")) cfg.c2 = flags.c2;
        if (given("--schedule")) cfg.schedule = flags.schedule;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    }
    return run_command(cfg, std::cout, std::cerr);
}
