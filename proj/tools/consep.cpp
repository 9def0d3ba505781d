// consep: command-line front end of the solve -> price -> verify pipeline.
//
// Exit codes: 0 success, 1 configuration error, 2 infeasible instance,
// 3 numerical failure or a failed verification.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "consep/pipeline.hpp"

namespace fs = std::filesystem;
using namespace consep;

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kInfeasible = 2, kNumerical = 3 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::optional<int> threads;
    std::string rho = "0.5:2:0.5";
};

RunConfig load(const Options& o) {
    RunConfig c = load_config(o.config);
    if (!o.out.empty()) c.out_dir = o.out;
    if (o.seed) c.mc.seed = *o.seed;
    if (o.paths) c.mc.n_paths = *o.paths;
    if (o.threads) c.mc.threads = *o.threads;
    c.mc.validate(c.grid);
    return c;
}

fs::path out_dir(const RunConfig& c) {
    fs::create_directories(c.out_dir);
    return c.out_dir;
}

void warn(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<std::string> write_solve(const fs::path& dir, const RunConfig& c, const SolveOutcome& s) {
    write_barrier_csv((dir / "barrier.csv").string(), s.root.barrier());
    write_value_surface_csv((dir / "value.csv").string(), s.root.value.v, c.surface_stride);
    write_surface_csv((dir / "vtau.csv").string(), s.root.vtau, "vtau", c.surface_stride);
    write_starting_law_csv((dir / "zeta.csv").string(), s.root.zeta);
    json r = to_json(s.residual);
    r["pass"] = s.passes();
    r["warnings"] = s.warnings;
    write_json(dir / "residual.json", r);
    return {"barrier.csv", "value.csv", "vtau.csv", "zeta.csv", "residual.json"};
}

std::vector<std::string> write_price(const fs::path& dir, const RunConfig& c, const PriceOutcome& p) {
    auto files = write_solve(dir, c, p.solve);
    const auto& pkg = p.hedge;
    write_json(dir / "price.json", p.price_json());
    write_lambda_csv(dir / "lambda.csv", pkg.h.grid(), pkg.lambda.lambda, &pkg.lambda.extrapolated);
    write_surface_csv((dir / "h.csv").string(), pkg.h, "h", c.surface_stride);
    write_surface_csv((dir / "delta.csv").string(), pkg.ratios.delta, "delta", c.surface_stride);
    write_surface_csv((dir / "alpha.csv").string(), pkg.ratios.alpha, "alpha", c.surface_stride);
    for (const char* f : {"price.json", "lambda.csv", "h.csv", "delta.csv", "alpha.csv"}) files.emplace_back(f);
    return files;
}

void print_price(const PriceOutcome& p) {
    std::cout << "M0 " << p.hedge.price.M0 << "  static " << p.hedge.price.static_leg << "  total "
              << p.hedge.price.total << "  uninformed " << p.uninformed.total << '\n';
}

int cmd_solve(const Options& o) {
    const auto c = load(o);
    const auto s = run_solve(c);
    const auto dir = out_dir(c);
    warn(s.warnings);
    const auto files = write_solve(dir, c, s);
    write_json(dir / "manifest.json", manifest(c, "solve", files));
    std::cout << "potential gap " << s.residual.potential_gap << "  E[tau] " << s.residual.e_tau << "  V "
              << s.residual.V << '\n';
    return s.passes() ? kOk : kNumerical;
}

int cmd_price(const Options& o) {
    const auto c = load(o);
    const auto p = run_price(c);
    const auto dir = out_dir(c);
    warn(p.solve.warnings);
    const auto files = write_price(dir, c, p);
    write_json(dir / "manifest.json", manifest(c, "price", files));
    print_price(p);
    return kOk;
}

int cmd_verify(const Options& o) {
    const auto c = load(o);
    const auto v = run_verify(c);
    const auto dir = out_dir(c);
    warn(v.priced.solve.warnings);
    auto files = write_price(dir, c, v.priced);
    write_json(dir / "verify.json", v.report);
    files.emplace_back("verify.json");
    if (c.dump_samples) {
        write_samples_csv(dir / "samples.csv", v.sim, v.priced.hedge.payoff);
        files.emplace_back("samples.csv");
    }
    write_json(dir / "manifest.json", manifest(c, "verify", files));
    print_price(v.priced);
    for (const auto& [k, e] : v.report.items())
        if (e.is_object() && e.contains("pass")) std::cout << (e["pass"].get<bool>() ? "ok   " : "FAIL ") << k << '\n';
    return v.passes ? kOk : kNumerical;
}

int cmd_noarb(const Options& o) {
    const auto c = load(o);
    const auto v = run_noarb(c);
    const auto dir = out_dir(c);
    write_json(dir / "noarb.json", to_json(v));
    write_json(dir / "manifest.json", manifest(c, "noarb", {"noarb.json"}));
    std::cout << (v.feasible ? "feasible" : "infeasible") << " (" << v.rule << ", " << v.strength << ")";
    if (!v.detail.empty()) std::cout << ": " << v.detail;
    std::cout << '\n';
    return v.feasible ? kOk : kInfeasible;
}

int cmd_sweep(const Options& o) {
    const auto c = load(o);
    const auto rhos = parse_rho_range(o.rho);
    const auto rows = run_sweep(c, rhos, c.mc.threads);
    const auto dir = out_dir(c);
    write_sweep_csv(dir, rows);
    std::vector<std::string> files{"sweep.csv"};
    for (const auto& r : rows) {
        files.push_back(r.barrier_file);
        files.push_back(r.lambda_file);
    }
    write_json(dir / "manifest.json", manifest(c, "sweep", files, {{"rho", o.rho}}));
    for (const auto& r : rows)
        std::cout << r.label << " rho " << r.rho << "  total " << r.price.total << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sub-hedging prices of an insider under a calibrated Root-type model"};
    app.require_subcommand(1);
    Options o;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", o.seed, "Monte Carlo seed (overrides mc.seed)");
        sub->add_option("--paths", o.paths, "Monte Carlo path count (overrides mc.n_paths)");
        sub->add_option("--threads", o.threads, "worker threads (overrides mc.threads)");
        return sub;
    };
    auto* solve = add("solve", "solve for the constrained barrier and check the embedding");
    auto* price = add("price", "solve, then compute lambda, h, the hedge ratios and the price");
    auto* verify = add("verify", "price, then simulate the model and run the pathwise checks");
    auto* noarb = add("noarb", "run the feasibility test named in the config");
    auto* sweep = add("sweep", "price across clock rates plus the uninformed baseline");
    sweep->add_option("--rho", o.rho, "clock rates as a:b:step")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*solve) return cmd_solve(o);
        if (*price) return cmd_price(o);
        if (*verify) return cmd_verify(o);
        if (*noarb) return cmd_noarb(o);
        if (*sweep) return cmd_sweep(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const InfeasibleInstance& e) {
        std::cerr << e.what() << '\n';
        const json v{{"feasible", false},
                     {"rule", "lambda2_convex_order"},
                     {"strength", "iff"},
                     {"witness", {{"x", e.witness_x()}}},
                     {"detail", e.what()}};
        const auto dir = out_dir(load(o));
        write_json(dir / "noarb.json", v);
        std::cout << v.dump() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    return kConfig;
}
