#ifndef CONSEP_HEDGE_HPP
#define CONSEP_HEDGE_HPP

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "consep/barrier.hpp"
#include "consep/error.hpp"
#include "consep/grid.hpp"
#include "consep/measures.hpp"
#include "consep/stopping.hpp"

namespace consep {

/// Variance-option payoff F(v) = int_0^v f(r) dr with f nonnegative and
/// nondecreasing.
struct Payoff {
    std::string name;
    std::function<double(double)> F;
    std::function<double(double)> f;

    /// F(v) = v^p / p.
    static Payoff power(double p) {
        if (!(p >= 1.0)) throw ConfigError("power payoff needs p >= 1");
        std::ostringstream n;
        n << "power(" << p << ")";
        return {n.str(), [p](double v) { return std::pow(v, p) / p; },
                [p](double v) { return p == 1.0 ? 1.0 : std::pow(v, p - 1.0); }};
    }
    /// F(v) = c v.
    static Payoff linear(double c) {
        if (!(c >= 0.0)) throw ConfigError("linear payoff needs c >= 0");
        std::ostringstream n;
        n << "linear(" << c << ")";
        return {n.str(), [c](double v) { return c * v; }, [c](double) { return c; }};
    }
};

/// phi(t, x) = E^{t,x}[f(sigma_R)], sigma_R the first entry into the barrier
/// at or after t. Solved backward from phi(t_max, .) = f(t_max) with phi = f(t)
/// on the barrier and reflecting grid edges elsewhere.
///
/// Only the barrier stage is computed: phi_1 and phi_2 coincide because the
/// trivial region stops at once, so the first hedge function vanishes.
inline Surface solve_phi(const Barrier& barrier, const Payoff& payoff) {
    const GridSpec& g = barrier.grid();
    if (barrier.empty()) throw HorizonError("solve_phi: barrier is empty inside the window");
    const int nx = g.nx;
    const double c = g.dt() / (2.0 * g.dx() * g.dx());
    Surface phi(g);
    for (int i = 0; i < nx; ++i) phi.at(g.nt - 1, i) = payoff.f(g.t_max);
    std::vector<double> lower(nx), diag(nx), upper(nx), rhs(nx), out(nx);
    for (int n = g.nt - 2; n >= 0; --n) {
        const double fn = payoff.f(g.t(n));
        for (int i = 0; i < nx; ++i) {
            lower[i] = upper[i] = 0.0;
            if (barrier.contains(n, i)) {
                diag[i] = 1.0;
                rhs[i] = fn;
                continue;
            }
            rhs[i] = phi.at(n + 1, i);
            const int k = (i == 0 || i == nx - 1) ? 1 : 2;
            diag[i] = 1.0 + k * c;
            if (i > 0) {
                if (barrier.contains(n, i - 1))
                    rhs[i] += c * fn;
                else
                    lower[i] = -c;
            }
            if (i < nx - 1) {
                if (barrier.contains(n, i + 1))
                    rhs[i] += c * fn;
                else
                    upper[i] = -c;
            }
        }
        solve_tridiagonal(lower, diag, upper, rhs, out);
        std::copy(out.begin(), out.end(), phi.row(n).begin());
    }
    return phi;
}

/// h(t, x) = int_0^t phi(s, x) ds - 2 int_{s0}^x int_{s0}^y phi(0, z) dz dy,
/// trapezoidal in both directions.
inline Surface assemble_h(const Surface& phi) {
    const GridSpec& g = phi.grid();
    Surface h(g);
    const int s = g.s0_node();
    const auto Phi = cumulative_trapezoid(phi.row(0), g.dx(), s);
    const auto Psi = cumulative_trapezoid(Phi, g.dx(), s);
    for (int i = 0; i < g.nx; ++i) {
        double acc = 0.0;
        h.at(0, i) = -2.0 * Psi[i];
        for (int n = 1; n < g.nt; ++n) {
            acc += 0.5 * g.dt() * (phi.at(n - 1, i) + phi.at(n, i));
            h.at(n, i) = acc - 2.0 * Psi[i];
        }
    }
    return h;
}

struct LambdaResult {
    std::vector<double> lambda;
    std::vector<bool> extrapolated;  ///< R(x) = +inf; value copied from the nearest finite node
    double inf_mass = 0.0;           ///< mu-mass sitting on extrapolated nodes
};

/// lambda(x) = F(R(x)) - f(0) (x - s0)^2 - h(R(x), x).
inline LambdaResult compute_lambda(const Surface& h, const Barrier& barrier, const Payoff& payoff,
                                   const GridMeasure& mu) {
    const GridSpec& g = h.grid();
    LambdaResult out{std::vector<double>(g.nx, 0.0), std::vector<bool>(g.nx, false), 0.0};
    const double f0 = payoff.f(0.0);
    std::vector<int> finite;
    for (int i = 0; i < g.nx; ++i) {
        if (barrier.never(i)) {
            out.extrapolated[i] = true;
            continue;
        }
        const double r = barrier.R(i), dxs = g.x(i) - g.s0;
        out.lambda[i] = payoff.F(r) - f0 * dxs * dxs - h.at(barrier.first_step(i), i);
        finite.push_back(i);
    }
    if (finite.empty()) throw HorizonError("compute_lambda: barrier has no finite node");
    std::vector<double> node_mass(mu.node_mass().begin(), mu.node_mass().end());
    for (const auto& a : mu.atoms()) node_mass[g.node_of(a.x)] += a.mass;
    for (int i = 0; i < g.nx; ++i) {
        if (!out.extrapolated[i]) continue;
        out.inf_mass += node_mass[i];
        const auto it = std::lower_bound(finite.begin(), finite.end(), i);
        int src;
        if (it == finite.end())
            src = finite.back();
        else if (it == finite.begin())
            src = *it;
        else
            src = (i - *(it - 1) <= *it - i) ? *(it - 1) : *it;
        out.lambda[i] = out.lambda[src];
    }
    if (out.inf_mass > 1e-3) {
        std::ostringstream msg;
        msg << "barrier is infinite on a set of target mass " << out.inf_mass << "; increase t_max";
        throw HorizonError(msg.str());
    }
    return out;
}

struct PriceReport {
    double M0 = 0.0;
    double static_leg = 0.0;
    double total = 0.0;
};

/// static_leg = int lambda dmu, M0 = int h dzeta, total = static_leg + M0.
inline PriceReport price(std::span<const double> lambda, const Surface& h, const GridMeasure& mu,
                         const StartingLaw& zeta) {
    const GridSpec& g = h.grid();
    PriceReport p;
    for (int i = 0; i < g.nx; ++i) p.static_leg += lambda[i] * mu.node_mass()[i];
    for (const auto& a : mu.atoms()) p.static_leg += interp_nodes(g, lambda, a.x) * a.mass;
    for (int n = 0; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) {
            const double z = zeta.stopped(n, i);
            if (z != 0.0) p.M0 += h.at(n, i) * z;
        }
    p.total = p.static_leg + p.M0;
    return p;
}

/// Central difference in x (one-sided at the grid edges).
inline Surface x_derivative(const Surface& s) {
    const GridSpec& g = s.grid();
    Surface d(g);
    const double h = g.dx();
    for (int n = 0; n < g.nt; ++n) {
        d.at(n, 0) = (s.at(n, 1) - s.at(n, 0)) / h;
        d.at(n, g.nx - 1) = (s.at(n, g.nx - 1) - s.at(n, g.nx - 2)) / h;
        for (int i = 1; i + 1 < g.nx; ++i) d.at(n, i) = (s.at(n, i + 1) - s.at(n, i - 1)) / (2 * h);
    }
    return d;
}

struct HedgeRatios {
    Surface delta;  ///< dh/dx, units of the underlying held after tau_lower
    Surface g;      ///< M_t = g(t, B_t) before tau_lower
    Surface alpha;  ///< dg/dx, units held before tau_lower
    bool partial = false;
    std::vector<std::string> warnings;
};

/// Ratios of the dynamic legs. Before tau_lower the martingale
/// M_t = E[h(tau_lower, B_{tau_lower}) | F_t] is g(t, B_t) where
///
///   g_t + g_xx / 2 + rho (h - g) = 0 on (a, b),   g = h at a, b and at t_max
///
/// for the interval-exit clock (heat flow back from t0 for a fixed time).
/// The discretization is the exact adjoint of the forward evolution of zeta,
/// so g(0, s0) reproduces int h dzeta up to rounding.
inline HedgeRatios hedge_ratios(const Surface& h, const StoppingSpec& spec) {
    const GridSpec& g = h.grid();
    const int nx = g.nx;
    const double c = g.dt() / (2.0 * g.dx() * g.dx());
    HedgeRatios out{x_derivative(h), h, Surface(g)};
    std::vector<double> lower(nx), diag(nx), upper(nx), rhs(nx), sol(nx);

    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, IntervalExitStop>) {
                const double tol = 1e-9 * g.dx();
                auto outside = [&](int i) { return g.x(i) <= st.a + tol || g.x(i) >= st.b - tol; };
                for (int n = g.nt - 2; n >= 0; --n) {
                    for (int i = 0; i < nx; ++i) {
                        lower[i] = upper[i] = 0.0;
                        if (outside(i)) {
                            diag[i] = 1.0;
                            rhs[i] = h.at(n, i);
                            continue;
                        }
                        diag[i] = 1.0 + st.rho * g.dt() + 2 * c;
                        rhs[i] = out.g.at(n + 1, i) + st.rho * g.dt() * h.at(n, i);
                        lower[i] = -c;
                        upper[i] = -c;
                    }
                    solve_tridiagonal(lower, diag, upper, rhs, sol);
                    for (int i = 0; i < nx; ++i) out.g.at(n, i) = outside(i) ? h.at(n, i) : sol[i];
                }
            } else if constexpr (std::is_same_v<T, FixedTimeStop>) {
                const int n0 = g.step_of(st.t0);
                for (int n = n0 - 1; n >= 0; --n) {
                    for (int i = 0; i < nx; ++i) {
                        const int k = (i == 0 || i == nx - 1) ? 1 : 2;
                        diag[i] = 1.0 + k * c;
                        lower[i] = i > 0 ? -c : 0.0;
                        upper[i] = i < nx - 1 ? -c : 0.0;
                        rhs[i] = out.g.at(n + 1, i);
                    }
                    solve_tridiagonal(lower, diag, upper, rhs, sol);
                    std::copy(sol.begin(), sol.end(), out.g.row(n).begin());
                }
            } else if constexpr (std::is_same_v<T, BarrierStop>) {
                out.partial = true;
                out.warnings.push_back("pre-information hedge ratio not available for barrier_file clocks; "
                                       "only the post-information leg is computed");
            }
        },
        spec);
    out.alpha = x_derivative(out.g);
    return out;
}

/// Everything needed to run and check the insider's sub-hedge.
struct HedgePackage {
    Payoff payoff;
    Barrier barrier;
    Surface phi;
    Surface h;
    LambdaResult lambda;
    HedgeRatios ratios;
    PriceReport price;
    double eps_num = 0.0;

    /// Closed-form hedge function of the immediate-stopping stage.
    double h3(double t, double x) const {
        const double d = x - h.grid().s0;
        return payoff.F(t) - payoff.f(0.0) * d * d;
    }
    double lambda_at(double x) const { return interp_nodes(h.grid(), lambda.lambda, x); }
    double h_at(double t, double x) const { return h.interp(t, x); }
};

/// Tolerance for pathwise checks of F(tau) >= lambda(B_tau) + h(tau, B_tau):
/// scheme truncation (dx + dt) scaled by the payoff slope at the horizon.
inline double subhedge_tolerance(const GridSpec& g, const Payoff& payoff) {
    return 0.1 * (g.dx() + g.dt()) * (1.0 + payoff.f(g.t_max));
}

inline HedgePackage build_hedge(const Barrier& barrier, const Payoff& payoff, const StoppingSpec& spec,
                                const StartingLaw& zeta, const GridMeasure& mu) {
    HedgePackage pkg{payoff, barrier};
    pkg.phi = solve_phi(barrier, payoff);
    pkg.h = assemble_h(pkg.phi);
    pkg.lambda = compute_lambda(pkg.h, barrier, payoff, mu);
    pkg.ratios = hedge_ratios(pkg.h, spec);
    pkg.price = price(pkg.lambda.lambda, pkg.h, mu, zeta);
    pkg.eps_num = subhedge_tolerance(barrier.grid(), payoff);
    return pkg;
}

struct GridSubhedgeReport {
    double max_excess = 0.0;     ///< max of lambda + h - F over {t >= R(x)}
    double max_graph_gap = 0.0;  ///< max |F(R) - lambda - h(R, .)| on the barrier graph
};

inline GridSubhedgeReport check_subhedge_on_grid(const HedgePackage& pkg) {
    const GridSpec& g = pkg.h.grid();
    GridSubhedgeReport r;
    r.max_excess = -kInf;
    for (int i = 0; i < g.nx; ++i) {
        if (pkg.barrier.never(i)) continue;
        const int first = pkg.barrier.first_step(i);
        r.max_graph_gap = std::max(r.max_graph_gap, std::abs(pkg.payoff.F(g.t(first)) - pkg.lambda.lambda[i] -
                                                             pkg.h.at(first, i)));
        for (int n = first; n < g.nt; ++n)
            r.max_excess = std::max(r.max_excess, pkg.lambda.lambda[i] + pkg.h.at(n, i) - pkg.payoff.F(g.t(n)));
    }
    return r;
}

}  // namespace consep

#endif  // CONSEP_HEDGE_HPP
