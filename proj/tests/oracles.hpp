#ifndef CONSEP_TESTS_ORACLES_HPP
#define CONSEP_TESTS_ORACLES_HPP

// Reference values computed independently of the library: composite
// Simpson quadrature and closed forms, no shared code paths.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

inline double normal_pdf(double x, double sd = 1.0) {
    return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x, double sd = 1.0) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); }

/// P(N(0, sd^2) >= x) by quadrature of the density.
inline double upper_tail(double x, double sd) {
    return simpson([sd](double y) { return normal_pdf(y, sd); }, x, x + 40.0 * sd);
}

/// Potential of N(0, t): -E|sqrt(t) Z - x|.
inline double gaussian_potential(double x, double t) {
    const double s = std::sqrt(t);
    return -(x * (2.0 * normal_cdf(x / s) - 1.0) + 2.0 * s * normal_pdf(x / s));
}

/// Mass of the atom at +1 of the truncated N(0,4)/N(0,9) mixture, frozen.
inline constexpr double kMixtureAtom = 0.3389894394538753;
/// Second moment of the same mixture, frozen.
inline constexpr double kMixtureV = 0.7825763257603517;
inline constexpr double kSqrt2OverPi = 0.7978845608028654;

/// Interval exit of (-1, 1) from 0 capped by an Exp(rho) clock.
inline double exit_clock_mean(double rho) { return (1.0 - 1.0 / std::cosh(std::sqrt(2.0 * rho))) / rho; }
inline double exit_clock_atom(double rho) { return 0.5 / std::cosh(std::sqrt(2.0 * rho)); }

}  // namespace oracle

#endif  // CONSEP_TESTS_ORACLES_HPP
