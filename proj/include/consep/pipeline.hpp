#ifndef CONSEP_PIPELINE_HPP
#define CONSEP_PIPELINE_HPP

// Run configuration, the solve -> price -> verify pipeline, and file output.
// This is the only header that needs the JSON library.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "consep/barrier.hpp"
#include "consep/error.hpp"
#include "consep/hedge.hpp"
#include "consep/mc.hpp"
#include "consep/measures.hpp"
#include "consep/noarb.hpp"
#include "consep/optstop.hpp"
#include "consep/stopping.hpp"

namespace consep {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Fully resolved run configuration. The JSON sub-objects are kept in their
/// resolved form so the manifest can echo them verbatim.
struct RunConfig {
    GridSpec grid;
    json measure;
    json stopping;
    json payoff;
    SolverParams solver;
    PathConfig mc;
    json noarb;
    std::string out_dir = "out";
    int surface_stride = 4;
    bool dump_samples = false;
    std::filesystem::path base_dir;  ///< relative input files resolve against this
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

inline double get_num(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + "." + key + " is required");
    return get_or<double>(j, key, 0.0, where);
}

inline std::string get_type(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type")) throw ConfigError(where + ".type is required");
    return get_or<std::string>(j, "type", "", where);
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

inline json default_measure() {
    return {{"type", "mixture"},
            {"components",
             json::array({{{"kind", "gaussian"}, {"mean", 0.0}, {"sd", 2.0}, {"weight", 0.5}},
                          {{"kind", "gaussian"}, {"mean", 0.0}, {"sd", 3.0}, {"weight", 0.5}}})},
            {"truncate", json::array({-1.0, 1.0})}};
}

}  // namespace detail

inline GridMeasure build_measure(const json& j, const GridSpec& g, const std::filesystem::path& base = {}) {
    const std::string w = "measure";
    const std::string type = detail::get_type(j, w);
    if (type == "mixture") {
        detail::check_keys(j, {"type", "components", "truncate"}, w);
        if (!j.contains("components") || !j["components"].is_array())
            throw ConfigError("measure.components must be an array");
        MixtureSpec spec;
        for (const auto& c : j["components"]) {
            const std::string kind = detail::get_or<std::string>(c, "kind", "", "measure.components[]");
            const double wt = detail::get_or<double>(c, "weight", 1.0, "measure.components[]");
            if (wt < 0.0) throw ConfigError("mixture weights must be nonnegative");
            if (kind == "gaussian") {
                detail::check_keys(c, {"kind", "mean", "sd", "weight"}, "gaussian component");
                spec.components.push_back(MixtureComponent::gaussian(detail::get_or<double>(c, "mean", 0.0, w),
                                                                     detail::get_num(c, "sd", w), wt));
            } else if (kind == "dirac") {
                detail::check_keys(c, {"kind", "x", "weight"}, "dirac component");
                spec.components.push_back(MixtureComponent::dirac(detail::get_num(c, "x", w), wt));
            } else if (kind == "uniform") {
                detail::check_keys(c, {"kind", "a", "b", "weight"}, "uniform component");
                spec.components.push_back(
                    MixtureComponent::uniform(detail::get_num(c, "a", w), detail::get_num(c, "b", w), wt));
            } else {
                throw ConfigError("unknown mixture component kind '" + kind + "'");
            }
        }
        if (j.contains("truncate")) {
            const auto& t = j["truncate"];
            if (!t.is_array() || t.size() != 2) throw ConfigError("measure.truncate must be [lo, hi]");
            spec.truncate = std::make_pair(t[0].get<double>(), t[1].get<double>());
        }
        return build_mixture(spec, g);
    }
    if (type == "gaussian") {
        detail::check_keys(j, {"type", "mean", "variance"}, w);
        return gaussian_measure(g, detail::get_or<double>(j, "mean", g.s0, w), detail::get_num(j, "variance", w));
    }
    if (type == "dirac") {
        detail::check_keys(j, {"type", "x"}, w);
        return dirac_measure(g, detail::get_or<double>(j, "x", g.s0, w));
    }
    if (type == "two_point") {
        detail::check_keys(j, {"type", "a"}, w);
        return two_point_measure(g, detail::get_num(j, "a", w));
    }
    if (type == "uniform") {
        detail::check_keys(j, {"type", "a", "b"}, w);
        return uniform_measure(g, detail::get_num(j, "a", w), detail::get_num(j, "b", w));
    }
    if (type == "file") {
        detail::check_keys(j, {"type", "path"}, w);
        return read_measure_csv(detail::resolve(base, detail::get_or<std::string>(j, "path", "", w)).string(), g);
    }
    throw ConfigError("unknown measure type '" + type + "'");
}

/// Barrier given in a config: {"type": "vertical", "t": t0}, {"type": "zero"},
/// {"type": "interval", "a": lo, "b": hi} or {"type": "file", "path": p}.
inline Barrier build_barrier(const json& j, const GridSpec& g, const std::filesystem::path& base = {}) {
    const std::string w = "barrier";
    const std::string type = detail::get_type(j, w);
    if (type == "vertical") {
        detail::check_keys(j, {"type", "t"}, w);
        return Barrier::vertical(g, detail::get_num(j, "t", w));
    }
    if (type == "zero") {
        detail::check_keys(j, {"type"}, w);
        return Barrier::vertical(g, 0.0);
    }
    if (type == "interval") {
        detail::check_keys(j, {"type", "a", "b"}, w);
        return Barrier::interval(g, detail::get_num(j, "a", w), detail::get_num(j, "b", w));
    }
    if (type == "file") {
        detail::check_keys(j, {"type", "path"}, w);
        return read_barrier_csv(detail::resolve(base, detail::get_or<std::string>(j, "path", "", w)).string(), g);
    }
    throw ConfigError("unknown barrier type '" + type + "'");
}

inline StoppingSpec build_stopping_unchecked(const json& j, const GridSpec& g, const std::filesystem::path& base) {
    const std::string w = "stopping";
    const std::string type = detail::get_type(j, w);
    if (type == "zero") {
        detail::check_keys(j, {"type"}, w);
        return ZeroStop{};
    }
    if (type == "fixed_time") {
        detail::check_keys(j, {"type", "t0"}, w);
        return FixedTimeStop{detail::get_num(j, "t0", w)};
    }
    if (type == "interval_exit") {
        detail::check_keys(j, {"type", "a", "b", "rho"}, w);
        return IntervalExitStop{detail::get_or<double>(j, "a", -1.0, w), detail::get_or<double>(j, "b", 1.0, w),
                                detail::get_or<double>(j, "rho", 1.0, w)};
    }
    if (type == "barrier_file") {
        detail::check_keys(j, {"type", "path"}, w);
        const std::string p = detail::get_or<std::string>(j, "path", "", w);
        return BarrierStop{read_barrier_csv(detail::resolve(base, p).string(), g), p};
    }
    throw ConfigError("unknown stopping type '" + type + "'");
}

inline StoppingSpec build_stopping(const json& j, const GridSpec& g, const std::filesystem::path& base = {}) {
    auto spec = build_stopping_unchecked(j, g, base);
    validate_stopping(spec, g);
    return spec;
}

inline Payoff build_payoff(const json& j) {
    const std::string w = "payoff";
    const std::string type = detail::get_type(j, w);
    if (type == "power") {
        detail::check_keys(j, {"type", "p"}, w);
        return Payoff::power(detail::get_or<double>(j, "p", 3.0, w));
    }
    if (type == "linear") {
        detail::check_keys(j, {"type", "c"}, w);
        return Payoff::linear(detail::get_or<double>(j, "c", 1.0, w));
    }
    throw ConfigError("unknown payoff type '" + type + "'");
}

/// Parses and validates a config object. Missing sections take the default
/// instance: grid [-4, 4] x [0, 4] with 401 x 801 nodes, the truncated
/// Gaussian mixture target, exit of (-1, 1) with clock rate 1, F(v) = v^3 / 3.
/// A manifest written by an earlier run is accepted as well.
inline RunConfig parse_config(const json& raw, const std::filesystem::path& base_dir = {}) {
    const json& j = (raw.is_object() && raw.contains("config") && raw.contains("command")) ? raw["config"] : raw;
    detail::check_keys(j, {"grid", "measure", "stopping", "payoff", "solver", "mc", "noarb", "output"}, "config");
    RunConfig c;
    c.base_dir = base_dir;
    if (j.contains("grid")) {
        const auto& gj = j["grid"];
        detail::check_keys(gj, {"x_min", "x_max", "nx", "t_max", "nt", "s0"}, "grid");
        c.grid.x_min = detail::get_or(gj, "x_min", c.grid.x_min, "grid");
        c.grid.x_max = detail::get_or(gj, "x_max", c.grid.x_max, "grid");
        c.grid.nx = detail::get_or(gj, "nx", c.grid.nx, "grid");
        c.grid.t_max = detail::get_or(gj, "t_max", c.grid.t_max, "grid");
        c.grid.nt = detail::get_or(gj, "nt", c.grid.nt, "grid");
        c.grid.s0 = detail::get_or(gj, "s0", c.grid.s0, "grid");
    }
    c.grid.validate();
    c.measure = j.value("measure", detail::default_measure());
    c.stopping = j.value("stopping", json{{"type", "interval_exit"}, {"a", -1.0}, {"b", 1.0}, {"rho", 1.0}});
    c.payoff = j.value("payoff", json{{"type", "power"}, {"p", 3.0}});
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        detail::check_keys(s, {"eps_stop", "psor_omega", "psor_tol", "psor_max_iter"}, "solver");
        c.solver.eps_stop = detail::get_or(s, "eps_stop", c.solver.eps_stop, "solver");
        c.solver.psor_omega = detail::get_or(s, "psor_omega", c.solver.psor_omega, "solver");
        c.solver.psor_tol = detail::get_or(s, "psor_tol", c.solver.psor_tol, "solver");
        c.solver.psor_max_iter = detail::get_or(s, "psor_max_iter", c.solver.psor_max_iter, "solver");
    }
    if (!(c.solver.psor_omega > 0.0 && c.solver.psor_omega < 2.0)) throw ConfigError("solver.psor_omega must lie in (0, 2)");
    if (!(c.solver.psor_tol > 0.0) || c.solver.psor_max_iter < 1 || !(c.solver.eps_stop >= 0.0))
        throw ConfigError("solver tolerances must be positive");
    if (j.contains("mc")) {
        const auto& m = j["mc"];
        detail::check_keys(m, {"n_paths", "dt_sim", "seed", "antithetic", "threads", "t_horizon"}, "mc");
        c.mc.n_paths = detail::get_or(m, "n_paths", c.mc.n_paths, "mc");
        c.mc.dt_sim = detail::get_or(m, "dt_sim", c.mc.dt_sim, "mc");
        c.mc.seed = detail::get_or(m, "seed", c.mc.seed, "mc");
        c.mc.antithetic = detail::get_or(m, "antithetic", c.mc.antithetic, "mc");
        c.mc.threads = detail::get_or(m, "threads", c.mc.threads, "mc");
        c.mc.t_horizon = detail::get_or(m, "t_horizon", c.mc.t_horizon, "mc");
    }
    c.mc.validate(c.grid);
    c.noarb = j.value("noarb", json{{"check", "lambda2"}});
    if (j.contains("output")) {
        const auto& o = j["output"];
        detail::check_keys(o, {"dir", "surface_stride", "samples"}, "output");
        c.out_dir = detail::get_or(o, "dir", c.out_dir, "output");
        c.surface_stride = detail::get_or(o, "surface_stride", c.surface_stride, "output");
        c.dump_samples = detail::get_or(o, "samples", c.dump_samples, "output");
    }
    if (c.surface_stride < 1) throw ConfigError("output.surface_stride must be positive");
    // build once so that errors surface at load time
    build_measure(c.measure, c.grid, c.base_dir);
    build_stopping(c.stopping, c.grid, c.base_dir);
    build_payoff(c.payoff);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

inline json to_json(const RunConfig& c) {
    return {{"grid",
             {{"x_min", c.grid.x_min},
              {"x_max", c.grid.x_max},
              {"nx", c.grid.nx},
              {"t_max", c.grid.t_max},
              {"nt", c.grid.nt},
              {"s0", c.grid.s0}}},
            {"measure", c.measure},
            {"stopping", c.stopping},
            {"payoff", c.payoff},
            {"solver",
             {{"eps_stop", c.solver.eps_stop},
              {"psor_omega", c.solver.psor_omega},
              {"psor_tol", c.solver.psor_tol},
              {"psor_max_iter", c.solver.psor_max_iter}}},
            {"mc",
             {{"n_paths", c.mc.n_paths},
              {"dt_sim", c.mc.dt_sim},
              {"seed", c.mc.seed},
              {"antithetic", c.mc.antithetic},
              {"threads", c.mc.threads},
              {"t_horizon", c.mc.t_horizon}}},
            {"noarb", c.noarb},
            {"output", {{"dir", c.out_dir}, {"surface_stride", c.surface_stride}, {"samples", c.dump_samples}}}};
}

// ---------------------------------------------------------------------------
// JSON views of results

inline json to_json(const FeasibilityVerdict& v) {
    json w = nullptr;
    if (v.witness_x) {
        w = json{{"x", *v.witness_x}};
        if (v.witness_t) w["t"] = std::isinf(*v.witness_t) ? json("inf") : json(*v.witness_t);
    }
    json out{{"feasible", v.feasible}, {"rule", v.rule}, {"strength", v.strength}, {"witness", w}};
    if (!v.detail.empty()) out["detail"] = v.detail;
    return out;
}

inline json to_json(const EmbeddingReport& r) {
    return {{"potential_gap", r.potential_gap},
            {"mass_unabsorbed", r.mass_unabsorbed},
            {"e_tau", r.e_tau},
            {"V", r.V},
            {"rel_gap", r.rel_gap}};
}

// ---------------------------------------------------------------------------
// Pipeline stages

struct SolveOutcome {
    RootSolve root;
    EmbeddingReport residual;
    std::vector<std::string> warnings;
    bool passes() const { return residual.passes(); }
};

inline SolveOutcome run_solve(const StoppingSpec& spec, const GridMeasure& mu, const SolverParams& p) {
    SolveOutcome out{solve_constrained(spec, mu, p)};
    out.residual = verify_embedding_forward(out.root.zeta, out.root.barrier(), mu);
    out.warnings = out.root.zeta.warnings;
    out.warnings.insert(out.warnings.end(), out.root.extraction.warnings.begin(), out.root.extraction.warnings.end());
    return out;
}

inline SolveOutcome run_solve(const RunConfig& c) {
    return run_solve(build_stopping(c.stopping, c.grid, c.base_dir), build_measure(c.measure, c.grid, c.base_dir),
                     c.solver);
}

struct PriceOutcome {
    SolveOutcome solve;
    HedgePackage hedge;
    PriceReport uninformed;

    json price_json() const {
        return {{"M0", hedge.price.M0},
                {"static_leg", hedge.price.static_leg},
                {"total", hedge.price.total},
                {"uninformed_total", uninformed.total},
                {"info_value", hedge.price.total - uninformed.total}};
    }
};

/// Sub-hedging price of the insider plus the benchmark without information
/// (tau_lower = 0), which shares the grid, target and payoff.
inline PriceOutcome run_price(const StoppingSpec& spec, const GridMeasure& mu, const Payoff& payoff,
                              const SolverParams& p) {
    PriceOutcome out{run_solve(spec, mu, p)};
    out.hedge = build_hedge(out.solve.root.barrier(), payoff, spec, out.solve.root.zeta, mu);
    if (std::holds_alternative<ZeroStop>(spec)) {
        out.uninformed = out.hedge.price;
    } else {
        const auto base = solve_constrained(ZeroStop{}, mu, p);
        out.uninformed = build_hedge(base.barrier(), payoff, ZeroStop{}, base.zeta, mu).price;
    }
    out.solve.warnings.insert(out.solve.warnings.end(), out.hedge.ratios.warnings.begin(),
                              out.hedge.ratios.warnings.end());
    return out;
}

inline PriceOutcome run_price(const RunConfig& c) {
    return run_price(build_stopping(c.stopping, c.grid, c.base_dir), build_measure(c.measure, c.grid, c.base_dir),
                     build_payoff(c.payoff), c.solver);
}

struct VerifyOutcome {
    PriceOutcome priced;
    SimResult sim;
    json report;
    bool passes = false;
};

inline constexpr double kCorruptionShift = 0.1;

/// Simulates the computed model and runs every pathwise check. Each entry
/// of the report carries its own pass flag; `passes` is their conjunction.
inline VerifyOutcome run_verify(const StoppingSpec& spec, const GridMeasure& mu, const Payoff& payoff,
                                const SolverParams& p, const PathConfig& mc) {
    VerifyOutcome out{run_price(spec, mu, payoff, p)};
    const auto& pkg = out.priced.hedge;
    out.sim = simulate(spec, pkg.barrier, mc, &pkg);
    const auto& sim = out.sim;
    json r;
    r["seed"] = mc.seed;
    r["n_paths"] = mc.n_paths;
    r["dt_sim"] = mc.dt_sim;
    r["threads"] = mc.threads;
    r["unstopped"] = sim.unstopped;

    const auto emb = verify_embedding(sim, mu);
    r["embedding"] = {{"ks", emb.ks},
                      {"ks_cell", emb.ks_cell},
                      {"ks_threshold", emb.ks_threshold},
                      {"potential_gap", emb.potential_gap},
                      {"potential_threshold", emb.potential_threshold},
                      {"pass", emb.passes()}};

    const double V = mu.second_moment(), et = sim.mean_tau(), se = sim.se_tau();
    const double rel = V > 0.0 ? std::abs(et - V) / V : std::abs(et);
    r["e_tau"] = {{"mean", et}, {"se", se}, {"V", V}, {"rel_gap", rel},
                  {"pass", std::abs(et - V) <= 3.0 * se + 1e-12 && rel <= 0.02}};

    const auto pe = primal_estimate(sim, payoff);
    const double dual = pkg.price.total;
    const double dgap = std::abs(pe.mean - dual) / std::max(std::abs(dual), 1e-300);
    r["duality"] = {{"primal", pe.mean}, {"se", pe.se}, {"ci99", {pe.ci_lo, pe.ci_hi}}, {"dual", dual},
                    {"rel_gap", dgap}, {"pass", dgap <= 0.02}};

    const auto sh = pathwise_subhedge_check(sim, pkg);
    r["subhedge"] = {{"violations", sh.violations}, {"rate", sh.rate}, {"worst_excess", sh.worst},
                     {"tolerance", sh.tolerance}, {"pass", sh.passes()}};
    const auto bad = pathwise_subhedge_check(sim, pkg, kCorruptionShift);
    r["corrupted_control"] = {{"shift", kCorruptionShift}, {"rate", bad.rate}, {"pass", bad.rate > 0.01}};

    const auto sup = barrier_support_check(sim, pkg.barrier);
    r["barrier_support"] = {{"bad_cells", sup.bad_cells}, {"worst_x", sup.worst_x}, {"pass", sup.passes()}};
    r["order"] = {{"violations", sim.order_violations}, {"pass", sim.order_violations == 0}};

    const auto mg = h_martingale_check(sim, pkg);
    r["h_martingale"] = {{"mean", mg.mean}, {"se", mg.se}, {"pass", mg.passes}};
    const auto smg = h_submartingale_check(sim, pkg);
    r["h_submartingale"] = {{"mean", smg.mean}, {"se", smg.se}, {"pass", smg.passes}};
    if (!pkg.ratios.partial) {
        const auto sf = self_financing_check(sim, pkg, pkg.eps_num);
        r["self_financing"] = {{"mean_error", sf.mean_error}, {"se", sf.se}, {"rms_error", sf.rms_error},
                               {"band", sf.bound}, {"pass", sf.passes}};
    } else {
        r["self_financing"] = nullptr;
    }

    bool all = true;
    for (const auto& [k, v] : r.items())
        if (v.is_object() && v.contains("pass")) all = all && v["pass"].get<bool>();
    r["pass"] = all;
    out.report = std::move(r);
    out.passes = all;
    return out;
}

inline VerifyOutcome run_verify(const RunConfig& c) {
    return run_verify(build_stopping(c.stopping, c.grid, c.base_dir), build_measure(c.measure, c.grid, c.base_dir),
                      build_payoff(c.payoff), c.solver, c.mc);
}

/// The feasibility test named by the config's noarb section.
inline FeasibilityVerdict run_noarb(const RunConfig& c) {
    const auto mu = build_measure(c.measure, c.grid, c.base_dir);
    const json& n = c.noarb;
    detail::check_keys(n, {"check", "upper_measure", "h", "barrier"}, "noarb");
    const std::string check = detail::get_or<std::string>(n, "check", "lambda2", "noarb");
    if (check == "lambda2") {
        const auto z = evolve_starting_law(build_stopping(c.stopping, c.grid, c.base_dir), c.grid);
        return check_lambda2(marginal_law(z), mu);
    }
    if (check == "lambda3") {
        if (!n.contains("upper_measure")) throw ConfigError("noarb.upper_measure is required for lambda3");
        const auto z = evolve_starting_law(build_stopping(c.stopping, c.grid, c.base_dir), c.grid);
        return check_lambda3(marginal_law(z), mu, build_measure(n["upper_measure"], c.grid, c.base_dir));
    }
    if (check == "ay") {
        if (!n.contains("h")) throw ConfigError("noarb.h is required for the ay check");
        const auto& hj = n["h"];
        const std::string type = detail::get_type(hj, "noarb.h");
        std::function<double(double)> h;
        if (type == "drawdown") {
            detail::check_keys(hj, {"type", "c"}, "noarb.h");
            const double cc = detail::get_num(hj, "c", "noarb.h");
            h = [cc](double x) { return x - cc; };
        } else if (type == "constant") {
            detail::check_keys(hj, {"type", "value"}, "noarb.h");
            const double v = detail::get_num(hj, "value", "noarb.h");
            h = [v](double) { return v; };
        } else {
            throw ConfigError("unknown noarb.h type '" + type + "'");
        }
        return check_ay(h, mu);
    }
    if (check == "root_inclusion") {
        if (!n.contains("barrier")) throw ConfigError("noarb.barrier is required for root_inclusion");
        return check_root_inclusion(build_barrier(n["barrier"], c.grid, c.base_dir), mu, c.solver);
    }
    throw ConfigError("unknown noarb.check '" + check + "'");
}

// ---------------------------------------------------------------------------
// Sweep over the clock rate

struct SweepRow {
    std::string label;  ///< "informed" or "baseline"
    double rho = 0.0;   ///< +inf for the baseline (the clock rings at once)
    std::string barrier_file, lambda_file;
    PriceReport price;
    double uninformed_total = 0.0;
    Barrier barrier;
    std::vector<double> lambda;
};

/// Parses "a:b:step" (inclusive of b up to rounding) or a single value.
inline std::vector<double> parse_rho_range(const std::string& s) {
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string item;
    try {
        while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
    } catch (const std::exception&) {
        throw ConfigError("--rho expects a:b:step, got '" + s + "'");
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
        throw ConfigError("--rho expects a:b:step with step > 0 and a <= b, got '" + s + "'");
    std::vector<double> out;
    const long n = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(parts[0] + k * parts[2]);
    return out;
}

inline std::string rho_tag(double rho) {
    std::ostringstream o;
    o << rho;
    return o.str();
}

/// One solve and price per rate, plus the uninformed baseline row. Rates
/// run as independent tasks, at most `jobs` at a time.
inline std::vector<SweepRow> run_sweep(const RunConfig& c, const std::vector<double>& rhos, int jobs = 1) {
    const auto mu = build_measure(c.measure, c.grid, c.base_dir);
    const auto payoff = build_payoff(c.payoff);
    double a = -1.0, b = 1.0;
    if (detail::get_or<std::string>(c.stopping, "type", "", "stopping") == "interval_exit") {
        const auto st = std::get<IntervalExitStop>(build_stopping(c.stopping, c.grid, c.base_dir));
        a = st.a;
        b = st.b;
    }
    for (double r : rhos)
        if (!(r >= 0.0)) throw ConfigError("sweep rates must be nonnegative");

    const auto base = solve_constrained(ZeroStop{}, mu, c.solver);
    const auto base_pkg = build_hedge(base.barrier(), payoff, ZeroStop{}, base.zeta, mu);

    auto one = [&](double rho) {
        const StoppingSpec spec = IntervalExitStop{a, b, rho};
        const auto sol = solve_constrained(spec, mu, c.solver);
        const auto pkg = build_hedge(sol.barrier(), payoff, spec, sol.zeta, mu);
        SweepRow row{"informed", rho, "barrier_rho" + rho_tag(rho) + ".csv", "lambda_rho" + rho_tag(rho) + ".csv",
                     pkg.price, base_pkg.price.total, sol.barrier(), pkg.lambda.lambda};
        return row;
    };
    std::vector<SweepRow> rows(rhos.size());
    for (std::size_t start = 0; start < rhos.size(); start += std::max(jobs, 1)) {
        const std::size_t stop = std::min(rhos.size(), start + std::max(jobs, 1));
        if (jobs <= 1) {
            rows[start] = one(rhos[start]);
            continue;
        }
        std::vector<std::future<SweepRow>> fut;
        for (std::size_t k = start; k < stop; ++k) fut.push_back(std::async(std::launch::async, one, rhos[k]));
        for (std::size_t k = start; k < stop; ++k) rows[k] = fut[k - start].get();
    }
    rows.push_back({"baseline", kInf, "barrier_baseline.csv", "lambda_baseline.csv", base_pkg.price,
                    base_pkg.price.total, base.barrier(), base_pkg.lambda.lambda});
    return rows;
}

// ---------------------------------------------------------------------------
// Writers

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline void write_lambda_csv(const std::filesystem::path& path, const GridSpec& g, std::span<const double> lambda,
                             const std::vector<bool>* extrapolated = nullptr) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "x,lambda" << (extrapolated ? ",extrapolated" : "") << '\n';
    for (int i = 0; i < g.nx; ++i) {
        out << g.x(i) << ',' << lambda[i];
        if (extrapolated) out << ',' << ((*extrapolated)[i] ? 1 : 0);
        out << '\n';
    }
}

/// One row per simulated path; payoff is F(tau).
inline void write_samples_csv(const std::filesystem::path& path, const SimResult& sim, const Payoff& payoff) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "path_id,tau_lower,b_lower,tau,b_tau,payoff\n";
    for (std::size_t k = 0; k < sim.paths.size(); ++k) {
        const auto& s = sim.paths[k];
        out << k << ',' << s.tau_lower << ',' << s.b_lower << ',' << s.tau << ',' << s.b_tau << ',' << payoff.F(s.tau)
            << '\n';
    }
}

inline void write_sweep_csv(const std::filesystem::path& dir, const std::vector<SweepRow>& rows) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "sweep.csv");
    if (!out) throw ConfigError("cannot open sweep.csv for writing");
    out.precision(17);
    out << "label,rho,barrier_file,lambda_file,M0,static_leg,total,uninformed_total\n";
    for (const auto& r : rows) {
        out << r.label << ',' << (std::isinf(r.rho) ? std::string("inf") : rho_tag(r.rho)) << ',' << r.barrier_file
            << ',' << r.lambda_file << ',' << r.price.M0 << ',' << r.price.static_leg << ',' << r.price.total << ','
            << r.uninformed_total << '\n';
        write_barrier_csv((dir / r.barrier_file).string(), r.barrier);
        write_lambda_csv(dir / r.lambda_file, r.barrier.grid(), r.lambda);
    }
}

inline json manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& outputs,
                     const json& extra = json::object()) {
    json m{{"tool", "consep"}, {"version", kVersion}, {"command", command}, {"config", to_json(c)},
           {"outputs", outputs}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    return m;
}

}  // namespace consep

#endif  // CONSEP_PIPELINE_HPP
