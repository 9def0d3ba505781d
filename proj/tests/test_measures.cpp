#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "consep/measures.hpp"
#include "oracles.hpp"

using namespace consep;

namespace {

GridSpec default_grid() { return GridSpec{}; }

double atom_at(const GridMeasure& mu, double x) {
    for (const auto& a : mu.atoms())
        if (std::abs(a.x - x) < 1e-12) return a.mass;
    return 0.0;
}

}  // namespace

TEST(Mixture, AtomMatchesQuadratureOracle) {
    const double quad = 0.5 * (oracle::upper_tail(1.0, 2.0) + oracle::upper_tail(1.0, 3.0));
    EXPECT_NEAR(quad, oracle::kMixtureAtom, 1e-12);
    const auto mu = build_mixture(truncated_gaussian_mixture(), default_grid());
    EXPECT_NEAR(atom_at(mu, 1.0), oracle::kMixtureAtom, 1e-10);
    EXPECT_NEAR(atom_at(mu, -1.0), oracle::kMixtureAtom, 1e-10);
}

TEST(Mixture, NormalizedAndCentered) {
    const auto mu = build_mixture(truncated_gaussian_mixture(), default_grid());
    EXPECT_NEAR(mu.total_mass(), 1.0, 1e-10);
    EXPECT_NEAR(mu.mean(), 0.0, 1e-10);
    EXPECT_EQ(mu.ess_inf(), -1.0);
    EXPECT_EQ(mu.ess_sup(), 1.0);
}

TEST(Mixture, SecondMomentMatchesOracle) {
    const double dens = oracle::simpson(
        [](double y) { return y * y * 0.5 * (oracle::normal_pdf(y, 2.0) + oracle::normal_pdf(y, 3.0)); }, -1.0, 1.0);
    EXPECT_NEAR(dens + 2.0 * oracle::kMixtureAtom, oracle::kMixtureV, 1e-12);
    const auto mu = build_mixture(truncated_gaussian_mixture(), default_grid());
    EXPECT_NEAR(mu.second_moment(), oracle::kMixtureV, 10.0 * std::pow(default_grid().dx(), 2));
}

TEST(Mixture, RejectsNegativeWeight) {
    MixtureSpec s{{MixtureComponent::gaussian(0.0, 1.0, -0.5), MixtureComponent::gaussian(0.0, 2.0, 1.5)}};
    EXPECT_THROW(build_mixture(s, default_grid()), ConfigError);
}

TEST(Mixture, RejectsSupportOffGrid) {
    EXPECT_THROW(dirac_measure(default_grid(), 5.0), ConfigError);
    EXPECT_THROW(uniform_measure(default_grid(), -6.0, 1.0), ConfigError);
}

TEST(Potential, DiracIsMinusAbs) {
    const auto g = default_grid();
    const auto u = potential(dirac_measure(g, 0.0));
    for (int i = 0; i < g.nx; ++i) EXPECT_DOUBLE_EQ(u.values[i], -std::abs(g.x(i)));
}

TEST(Potential, TwoPointIsMinusMaxAbsOne) {
    const auto g = default_grid();
    const auto u = potential(two_point_measure(g, 1.0));
    for (int i = 0; i < g.nx; ++i) EXPECT_NEAR(u.values[i], -std::max(std::abs(g.x(i)), 1.0), 1e-14);
}

TEST(Potential, StandardGaussianAtZero) {
    const double quad = 2.0 * oracle::simpson([](double y) { return y * oracle::normal_pdf(y); }, 0.0, 40.0);
    EXPECT_NEAR(quad, oracle::kSqrt2OverPi, 1e-12);
    const auto g = default_grid();
    const auto u = potential(gaussian_measure(g, 0.0, 1.0));
    EXPECT_NEAR(u.values[g.s0_node()], -oracle::kSqrt2OverPi, 10.0 * g.dx() * g.dx());
}

TEST(Potential, GaussianClosedFormEverywhere) {
    const auto g = default_grid();
    const auto u = potential(gaussian_measure(g, 0.0, 1.0));
    for (int i = 0; i < g.nx; i += 10) EXPECT_NEAR(u.values[i], oracle::gaussian_potential(g.x(i), 1.0), 10.0 * g.dx() * g.dx());
}

TEST(Potential, TailsApproachMinusAbs) {
    const auto g = default_grid();
    const auto mu = build_mixture(truncated_gaussian_mixture(), g);
    const auto u = potential(mu);
    EXPECT_NEAR(u.values.front() + std::abs(g.x_min), 0.0, 1e-12);
    EXPECT_NEAR(u.values.back() + std::abs(g.x_max), 0.0, 1e-12);
    EXPECT_NEAR(u.values[g.s0_node()], potential_at(mu, 0.0), 1e-14);
}

TEST(Potential, ConcaveOnGrid) {
    const auto g = default_grid();
    const auto u = potential(build_mixture(truncated_gaussian_mixture(), g));
    for (int i = 1; i + 1 < g.nx; ++i) EXPECT_LE(u.values[i + 1] - 2.0 * u.values[i] + u.values[i - 1], 1e-14);
}

TEST(Potential, RefinementIsSecondOrder) {
    GridSpec coarse{-4.0, 4.0, 201, 4.0, 11, 0.0};
    GridSpec fine{-4.0, 4.0, 401, 4.0, 11, 0.0};
    const auto uc = potential(gaussian_measure(coarse, 0.0, 1.0));
    const auto uf = potential(gaussian_measure(fine, 0.0, 1.0));
    double worst = 0.0;
    for (int i = 0; i < coarse.nx; ++i) worst = std::max(worst, std::abs(uc.values[i] - uf.values[2 * i]));
    EXPECT_LE(worst, 10.0 * coarse.dx() * coarse.dx());
}

TEST(ConvexOrder, DiracPrecedesGaussian) {
    const auto g = default_grid();
    EXPECT_TRUE(convex_order(dirac_measure(g, 0.0), gaussian_measure(g, 0.0, 1.0)).ordered);
}

TEST(ConvexOrder, ReversedVariancesFailNearZero) {
    const auto g = default_grid();
    const auto v = convex_order(gaussian_measure(g, 0.0, 2.0), gaussian_measure(g, 0.0, 1.0));
    EXPECT_FALSE(v.ordered);
    EXPECT_EQ(v.reason, OrderVerdict::Reason::potential);
    EXPECT_NEAR(v.witness_x, 0.0, 2.0 * g.dx());
}

TEST(ConvexOrder, MeanMismatchIsItsOwnReason) {
    const auto g = default_grid();
    const auto v = convex_order(dirac_measure(g, 0.5), gaussian_measure(g, 0.0, 1.0));
    EXPECT_FALSE(v.ordered);
    EXPECT_EQ(v.reason, OrderVerdict::Reason::mean);
}

TEST(ConvexOrder, TransitiveOnRandomTriples) {
    const auto g = default_grid();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> var(0.05, 1.5);
    int checked = 0;
    for (int k = 0; k < 40; ++k) {
        double v[3] = {var(rng), var(rng), var(rng)};
        const GridMeasure m[3] = {gaussian_measure(g, 0.0, v[0]), gaussian_measure(g, 0.0, v[1]),
                                  gaussian_measure(g, 0.0, v[2])};
        if (convex_order(m[0], m[1]).ordered && convex_order(m[1], m[2]).ordered) {
            EXPECT_TRUE(convex_order(m[0], m[2]).ordered);
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(Barycenter, TwoPoint) {
    const auto g = default_grid();
    const auto b = barycenter(two_point_measure(g, 1.0));
    for (double x : {-3.0, -1.5, -1.0}) EXPECT_NEAR(b.b(x), 0.0, 1e-12) << x;
    for (double x : {-0.98, -0.5, 0.0, 0.5, 1.0}) EXPECT_NEAR(b.b(x), 1.0, 1e-12) << x;
}

TEST(Barycenter, Dirac) {
    const auto g = default_grid();
    const auto b = barycenter(dirac_measure(g, 0.0));
    for (double x : {-3.0, -1.0, 0.0}) EXPECT_NEAR(b.b(x), 0.0, 1e-12) << x;
}

TEST(Barycenter, GaussianAtZero) {
    const double quad = oracle::simpson([](double y) { return y * oracle::normal_pdf(y); }, 0.0, 40.0) / 0.5;
    EXPECT_NEAR(quad, oracle::kSqrt2OverPi, 1e-12);
    const auto g = default_grid();
    const auto b = barycenter(gaussian_measure(g, 0.0, 1.0));
    EXPECT_NEAR(b.b(0.0), oracle::kSqrt2OverPi, 10.0 * g.dx() * g.dx());
}

TEST(Barycenter, InverseRoundTrip) {
    const auto g = default_grid();
    const auto b = barycenter(gaussian_measure(g, 0.0, 1.0));
    for (double y = 0.2; y <= 2.0; y += 0.1) EXPECT_NEAR(b.b(b.beta(y)), y, 2.0 * g.dx()) << y;
    double prev = -1e300;
    for (int i = 0; i < g.nx; ++i) {
        EXPECT_GE(b.beta_values()[i], prev);
        prev = b.beta_values()[i];
    }
}

TEST(MeasureCsv, RoundTrip) {
    const auto g = default_grid();
    const auto mu = build_mixture(truncated_gaussian_mixture(), g);
    const auto path = std::filesystem::temp_directory_path() / "consep_measure_roundtrip.csv";
    write_measure_csv(path.string(), mu);
    const auto back = read_measure_csv(path.string(), g);
    EXPECT_NEAR(back.total_mass(), 1.0, 1e-12);
    EXPECT_NEAR(atom_at(back, 1.0), oracle::kMixtureAtom, 1e-12);
    const auto ua = potential(mu), ub = potential(back);
    for (int i = 0; i < g.nx; ++i) EXPECT_NEAR(ua.values[i], ub.values[i], 1e-12);
    std::filesystem::remove(path);
}
