#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "consep/optstop.hpp"
#include "oracles.hpp"

using namespace consep;

namespace {

double max_abs_R_minus(const Barrier& b, double t0, double half_width) {
    const auto& g = b.grid();
    double worst = 0.0;
    for (int i = 0; i < g.nx; ++i)
        if (std::abs(g.x(i)) <= half_width + 1e-12) worst = std::max(worst, std::abs(b.R(i) - t0));
    return worst;
}

}  // namespace

TEST(Value, EqualMarginalsGiveNoExtraStopping) {
    const GridSpec g;
    const auto z = evolve_starting_law(FixedTimeStop{1.0}, g);
    const auto nu = marginal_law(z);
    const auto vt = stopped_potential(z);
    const auto obs = make_obstacle(vt, nu, nu);
    const auto sol = solve_value(vt, obs, SolverParams{});
    // PSOR stops on the size of an update; the error is larger by the inverse
    // of the contraction gap (about 65 here)
    for (int n = 0; n < g.nt; n += 25)
        for (int i = 0; i < g.nx; ++i) ASSERT_NEAR(sol.v.at(n, i), vt.at(n, i), 100.0 * SolverParams{}.psor_tol);
    const auto ex = extract_barrier(sol.v, obs, SolverParams{}.eps_stop);
    for (int i = 0; i < g.nx; ++i) EXPECT_EQ(ex.barrier.first_step(i), 0);
}

TEST(Value, LongHorizonLimitIsTargetPotential) {
    const GridSpec g;
    const auto r = solve_constrained(ZeroStop{}, gaussian_measure(g, 0.0, 0.5));
    const auto u = potential(gaussian_measure(g, 0.0, 0.5));
    for (int i = 0; i < g.nx; ++i) EXPECT_NEAR(r.value.v.at(g.nt - 1, i), u.values[i], 10.0 * g.dx() * g.dx());
}

TEST(Value, TwoPointTargetTouchesOutsideAtOnce) {
    const GridSpec g;
    const auto r = solve_constrained(ZeroStop{}, two_point_measure(g, 1.0));
    for (int n = 0; n < g.nt; n += 10)
        for (int i = 0; i < g.nx; ++i)
            if (std::abs(g.x(i)) >= 1.0 - 1e-12) {
                ASSERT_NEAR(r.value.v.at(n, i), -std::abs(g.x(i)), 1e-12);
            }
}

// v(t, .) is the potential of B_{t ^ tau}, which decreases as the stopped law
// spreads in convex order.
TEST(Value, DominatesObstacleAndDecreasesInTime) {
    const GridSpec g;
    const auto mu = build_mixture(truncated_gaussian_mixture(), g);
    const auto r = solve_constrained(IntervalExitStop{-1.0, 1.0, 1.0}, mu);
    for (int i = 0; i < g.nx; ++i) EXPECT_EQ(r.value.v.at(0, i), r.vtau.at(0, i));
    for (int n = 1; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) {
            ASSERT_GE(r.value.v.at(n, i), r.obstacle.values.at(n, i) - 1e-12);
            ASSERT_LE(r.value.v.at(n, i), r.value.v.at(n - 1, i) + 1e-12);
        }
}

TEST(Value, InfeasibleInstanceCarriesWitness) {
    const GridSpec g;
    const auto mu = build_mixture(truncated_gaussian_mixture(), g);
    try {
        solve_constrained(FixedTimeStop{1.0}, mu);
        FAIL() << "expected InfeasibleInstance";
    } catch (const InfeasibleInstance& e) {
        EXPECT_LE(std::abs(e.witness_x()), 1.0 + g.dx());
    }
}

TEST(Barrier, GaussianTargetGivesVerticalLine) {
    const GridSpec g{-4.0, 4.0, 401, 2.0, 801, 0.0};
    const auto r = solve_constrained(ZeroStop{}, gaussian_measure(g, 0.0, 1.0));
    EXPECT_LE(max_abs_R_minus(r.barrier(), 1.0, 2.0), 3.0 * g.dt());
    EXPECT_TRUE(r.extraction.warnings.empty());
}

TEST(Barrier, GaussianTargetHalfVariance) {
    const GridSpec g;
    const auto r = solve_constrained(ZeroStop{}, gaussian_measure(g, 0.0, 0.5));
    EXPECT_LE(max_abs_R_minus(r.barrier(), 0.5, 2.0), 3.0 * g.dt());
}

TEST(Barrier, TwoPointTargetGivesExitOfInterval) {
    const GridSpec g;
    for (double a : {0.5, 1.0}) {
        const auto r = solve_constrained(ZeroStop{}, two_point_measure(g, a));
        for (int i = 0; i < g.nx; ++i) {
            if (std::abs(g.x(i)) >= a - 1e-12)
                EXPECT_EQ(r.barrier().R(i), 0.0) << g.x(i);
            else
                EXPECT_TRUE(r.barrier().never(i)) << g.x(i);
        }
    }
}

TEST(Barrier, IsRegularAndMonotoneForTheInsider) {
    const GridSpec g;
    const auto mu = build_mixture(truncated_gaussian_mixture(), g);
    const auto r = solve_constrained(IntervalExitStop{-1.0, 1.0, 1.0}, mu);
    EXPECT_TRUE(r.barrier().is_regular());
    EXPECT_TRUE(r.extraction.warnings.empty());
    // once in, always in: every column stays in contact after its first hit
    for (int i = 0; i < g.nx; ++i)
        for (int n = r.barrier().first_step(i); n < g.nt; ++n)
            ASSERT_LE(r.value.v.at(n, i) - r.obstacle.values.at(n, i), 1e-12);
}

TEST(Forward, VerticalBarrierEmbedsGaussian) {
    const GridSpec g;
    const auto z = evolve_starting_law(ZeroStop{}, g);
    for (double t0 : {0.5, 1.0}) {
        const auto rep = verify_embedding_forward(z, Barrier::vertical(g, t0), gaussian_measure(g, 0.0, t0));
        EXPECT_LE(rep.potential_gap, 10.0 * g.dx() * g.dx()) << t0;
        EXPECT_NEAR(rep.e_tau, t0, 1e-12);
    }
}

TEST(Forward, ExitBarrierEmbedsTwoPoint) {
    const GridSpec g{-4.0, 4.0, 401, 12.0, 2401, 0.0};
    const auto z = evolve_starting_law(ZeroStop{}, g);
    const auto rep = verify_embedding_forward(z, Barrier::interval(g, -1.0, 1.0), two_point_measure(g, 1.0));
    EXPECT_LE(rep.potential_gap, 1e-6);
    EXPECT_LE(rep.mass_unabsorbed, 1e-6);
    EXPECT_NEAR(rep.e_tau, 1.0, g.dt() + g.dx() * g.dx());
}

TEST(Forward, UnconstrainedSolvesEmbedTheirTargets) {
    const GridSpec g;
    const GridMeasure targets[] = {gaussian_measure(g, 0.0, 1.0), uniform_measure(g, -1.0, 1.0),
                                   build_mixture(truncated_gaussian_mixture(), g)};
    for (const auto& mu : targets) {
        const auto r = solve_constrained(ZeroStop{}, mu);
        const auto rep = verify_embedding_forward(r.zeta, r.barrier(), mu);
        EXPECT_LE(rep.potential_gap, 5e-3);
        EXPECT_LE(rep.rel_gap, 0.02);
        EXPECT_LE(rep.mass_unabsorbed, 1e-2);
    }
}

TEST(Forward, InsiderInstanceEmbedsTarget) {
    const GridSpec g;
    const auto mu = build_mixture(truncated_gaussian_mixture(), g);
    const auto r = solve_constrained(IntervalExitStop{-1.0, 1.0, 1.0}, mu);
    const auto rep = verify_embedding_forward(r.zeta, r.barrier(), mu);
    EXPECT_LE(rep.potential_gap, 5e-3);
    EXPECT_NEAR(rep.V, oracle::kMixtureV, 10.0 * g.dx() * g.dx());
    EXPECT_LE(rep.rel_gap, 0.02);
    EXPECT_TRUE(rep.passes());
}

TEST(Forward, ShortWindowIsAHorizonError) {
    const GridSpec g{-4.0, 4.0, 401, 0.5, 101, 0.0};
    const auto z = evolve_starting_law(ZeroStop{}, g);
    EXPECT_THROW(verify_embedding_forward(z, Barrier(g), gaussian_measure(g, 0.0, 1.0)), HorizonError);
}

TEST(BarrierCsv, RoundTripKeepsInfinity) {
    const GridSpec g;
    const auto b = Barrier::interval(g, -1.0, 1.0);
    const auto path = std::filesystem::temp_directory_path() / "consep_barrier.csv";
    write_barrier_csv(path.string(), b);
    const auto back = read_barrier_csv(path.string(), g);
    for (int i = 0; i < g.nx; ++i) EXPECT_EQ(back.first_step(i), b.first_step(i));
    std::filesystem::remove(path);
}
