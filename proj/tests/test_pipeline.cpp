#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "consep/pipeline.hpp"

using namespace consep;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = CONSEP_CONFIGS;

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("consep_pipeline_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CONSEP_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

struct SweepLine {
    std::string label;
    double total = 0.0, uninformed = 0.0;
};

std::vector<SweepLine> read_sweep(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<SweepLine> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        rows.push_back({f.at(0), std::stod(f.at(6)), std::stod(f.at(7))});
    }
    return rows;
}

}  // namespace

TEST(Config, EmptyObjectGivesTheDefaultInstance) {
    const auto c = parse_config(json::object());
    EXPECT_EQ(c.grid, GridSpec{});
    EXPECT_EQ(c.stopping["type"], "interval_exit");
    EXPECT_EQ(c.payoff["p"], 3.0);
    const auto mu = build_measure(c.measure, c.grid);
    EXPECT_EQ(mu.ess_sup(), 1.0);
    EXPECT_NEAR(mu.total_mass(), 1.0, 1e-10);
}

TEST(Config, UnknownKeysAreRejected) {
    EXPECT_THROW(parse_config(json{{"grd", json::object()}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"grid", {{"nx", 401}, {"dx", 0.02}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"mc", {{"paths", 10}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"measure", {{"type", "gaussian"}, {"variance", 1}, {"sd", 1}}}}), ConfigError);
}

TEST(Config, BadValuesAreRejected) {
    EXPECT_THROW(parse_config(json{{"measure", {{"type", "lognormal"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"grid", {{"nx", 2}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"solver", {{"psor_omega", 2.5}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"mc", {{"dt_sim", 1.0}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"payoff", {{"type", "power"}, {"p", 0.5}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"stopping", {{"type", "interval_exit"}, {"a", 1}, {"b", -1}, {"rho", 1}}}}),
                 ConfigError);
}

TEST(Config, ManifestReloadsToTheSameRun) {
    const auto c = load_config(kConfigs / "insider_rho1.json");
    const auto m = manifest(c, "price", {"price.json"});
    EXPECT_EQ(m["tool"], "consep");
    EXPECT_EQ(m["version"], kVersion);
    const auto back = parse_config(m, c.base_dir);
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, FilePathsResolveAgainstTheConfigDirectory) {
    const auto dir = scratch("relative");
    const GridSpec g;
    write_measure_csv((dir / "mu.csv").string(), gaussian_measure(g, 0.0, 1.0));
    const auto p = write_config(dir, json{{"measure", {{"type", "file"}, {"path", "mu.csv"}}}});
    const auto c = load_config(p);
    EXPECT_NEAR(build_measure(c.measure, c.grid, c.base_dir).second_moment(), gaussian_measure(g, 0.0, 1.0).second_moment(),
                1e-12);
}

TEST(Config, RhoRanges) {
    EXPECT_EQ(parse_rho_range("0.5:2:0.5"), (std::vector<double>{0.5, 1.0, 1.5, 2.0}));
    EXPECT_EQ(parse_rho_range("1:1:1"), (std::vector<double>{1.0}));
    EXPECT_THROW(parse_rho_range("1:2"), ConfigError);
    EXPECT_THROW(parse_rho_range("2:1:0.5"), ConfigError);
    EXPECT_THROW(parse_rho_range("0.5:2:0"), ConfigError);
}

TEST(Cli, SolveVerticalWritesBarrierNearOne) {
    const auto out = scratch("vertical");
    ASSERT_EQ(run_cli("solve --config " + (kConfigs / "vertical.json").string() + " --out " + out.string()), 0);
    for (const char* f : {"barrier.csv", "value.csv", "vtau.csv", "zeta.csv", "residual.json", "manifest.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto c = load_config(kConfigs / "vertical.json");
    const auto b = read_barrier_csv((out / "barrier.csv").string(), c.grid);
    for (int i = 0; i < c.grid.nx; ++i)
        if (std::abs(c.grid.x(i)) <= 2.0) {
            EXPECT_NEAR(b.R(i), 1.0, 3.0 * c.grid.dt()) << c.grid.x(i);
        }
    EXPECT_TRUE(read_json(out / "residual.json")["pass"].get<bool>());
    EXPECT_EQ(read_json(out / "manifest.json")["command"], "solve");
}

TEST(Cli, PriceWritesEveryLeg) {
    const auto out = scratch("price");
    ASSERT_EQ(run_cli("price --config " + (kConfigs / "insider_rho1.json").string() + " --out " + out.string()), 0);
    for (const char* f : {"price.json", "lambda.csv", "h.csv", "delta.csv", "alpha.csv", "barrier.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto p = read_json(out / "price.json");
    EXPECT_NEAR(p["total"].get<double>(), p["M0"].get<double>() + p["static_leg"].get<double>(), 1e-12);
    EXPECT_GE(p["info_value"].get<double>(), 0.0);
}

TEST(Cli, ConfigErrorsExitOne) {
    const auto dir = scratch("bad");
    EXPECT_EQ(run_cli("solve --config " + write_config(dir, json{{"grid", {{"dx", 1}}}}).string()), 1);
    EXPECT_EQ(run_cli("solve --config " + (dir / "missing.json").string()), 1);
    EXPECT_EQ(run_cli("solve"), 1);
    EXPECT_EQ(run_cli("frobnicate --config " + (kConfigs / "vertical.json").string()), 1);
}

TEST(Cli, InfeasibleSolveExitsTwoWithWitness) {
    const auto out = scratch("infeasible");
    EXPECT_EQ(run_cli("solve --config " + (kConfigs / "infeasible.json").string() + " --out " + out.string()), 2);
    const auto v = read_json(out / "noarb.json");
    EXPECT_FALSE(v["feasible"].get<bool>());
    EXPECT_EQ(v["rule"], "lambda2_convex_order");
    EXPECT_TRUE(v["witness"].is_object());
}

TEST(Cli, NoarbVerdicts) {
    const auto ok = scratch("noarb_ok"), tight = scratch("noarb_tight"), root = scratch("noarb_root");
    EXPECT_EQ(run_cli("noarb --config " + (kConfigs / "noarb_drawdown.json").string() + " --out " + ok.string()), 0);
    EXPECT_TRUE(read_json(ok / "noarb.json")["feasible"].get<bool>());
    EXPECT_TRUE(read_json(ok / "noarb.json")["witness"].is_null());
    EXPECT_EQ(run_cli("noarb --config " + (kConfigs / "noarb_drawdown_tight.json").string() + " --out " + tight.string()),
              2);
    const auto t = read_json(tight / "noarb.json");
    EXPECT_FALSE(t["feasible"].get<bool>());
    EXPECT_TRUE(t["witness"].contains("x"));
    EXPECT_EQ(run_cli("noarb --config " + (kConfigs / "noarb_root.json").string() + " --out " + root.string()), 2);
    const auto r = read_json(root / "noarb.json");
    EXPECT_FALSE(r["feasible"].get<bool>());
    EXPECT_TRUE(r["witness"].contains("t"));
}

TEST(Cli, SweepIsReproducibleAndOrdered) {
    const auto a = scratch("sweep_a"), b = scratch("sweep_b");
    const auto cfg = (kConfigs / "sweep.json").string();
    ASSERT_EQ(run_cli("sweep --config " + cfg + " --rho 0.5:2:0.5 --out " + a.string()), 0);
    ASSERT_EQ(run_cli("sweep --config " + cfg + " --rho 0.5:2:0.5 --out " + b.string()), 0);
    EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
    EXPECT_EQ(slurp(a / "barrier_rho1.csv"), slurp(b / "barrier_rho1.csv"));
    const auto rows = read_sweep(a / "sweep.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows.back().label, "baseline");
    const double base = rows.back().total;
    EXPECT_NEAR(base, rows.back().uninformed, 1e-12);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        EXPECT_GE(rows[k].total, base - 1e-12) << k;
        if (k > 0) {
            EXPECT_LE(rows[k].total, rows[k - 1].total + 1e-12) << k;
        }
    }
    EXPECT_TRUE(fs::exists(a / "lambda_baseline.csv"));
}

TEST(Cli, VerifyEchoesSeedAndDumpsSamples) {
    const auto dir = scratch("verify");
    auto j = read_json(kConfigs / "insider_rho1.json");
    j["output"] = {{"dir", (dir / "out").string()}, {"samples", true}};
    const auto cfg = write_config(dir, j);
    const int code = run_cli("verify --config " + cfg.string() + " --seed 7 --paths 3000 --threads 1");
    ASSERT_TRUE(code == 0 || code == 3) << code;
    const auto r = read_json(dir / "out" / "verify.json");
    EXPECT_EQ(r["seed"], 7);
    EXPECT_EQ(r["n_paths"], 3000);
    EXPECT_EQ(code == 0, r["pass"].get<bool>());
    for (const char* k : {"embedding", "e_tau", "duality", "subhedge", "corrupted_control", "barrier_support", "order",
                          "h_martingale", "h_submartingale", "self_financing"})
        EXPECT_TRUE(r.contains(k)) << k;
    std::ifstream in(dir / "out" / "samples.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "path_id,tau_lower,b_lower,tau,b_tau,payoff");
    long lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 3000);
    EXPECT_EQ(read_json(dir / "out" / "manifest.json")["config"]["mc"]["seed"], 7);
}
