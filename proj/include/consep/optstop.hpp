#ifndef CONSEP_OPTSTOP_HPP
#define CONSEP_OPTSTOP_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "consep/barrier.hpp"
#include "consep/error.hpp"
#include "consep/forward.hpp"
#include "consep/grid.hpp"
#include "consep/measures.hpp"
#include "consep/stopping.hpp"

namespace consep {

struct SolverParams {
    /// Contact threshold on v - obstacle. The projection writes the obstacle
    /// value exactly, so only rounding noise needs absorbing.
    double eps_stop = 1e-12;
    double psor_omega = 1.5;
    double psor_tol = 1e-10;
    int psor_max_iter = 10000;
};

/// obstacle(t, x) = v_tau(t, x) + w(x) with w = u_mu - u_nu.
struct Obstacle {
    GridSpec grid;
    std::vector<double> w;
    Surface values;
};

/// Builds the obstacle and rejects instances where nu is not dominated by mu
/// in convex order (w > tolerance somewhere, or means differ).
inline Obstacle make_obstacle(const Surface& vtau, const GridMeasure& mu, const GridMeasure& nu,
                              std::optional<double> tol = std::nullopt) {
    const GridSpec& g = vtau.grid();
    if (!(mu.grid() == g) || !(nu.grid() == g)) throw ConfigError("make_obstacle: grids differ");
    const auto verdict = convex_order(nu, mu, tol);
    if (!verdict.ordered) {
        std::ostringstream msg;
        if (verdict.reason == OrderVerdict::Reason::mean) {
            msg << "infeasible instance: mean of the law at the information time differs from the target mean by "
                << verdict.violation;
            throw InfeasibleInstance(msg.str(), g.s0);
        }
        msg << "infeasible instance: target law does not dominate the law at the information time; "
            << "u_mu - u_nu = " << verdict.violation << " at x = " << verdict.witness_x;
        throw InfeasibleInstance(msg.str(), verdict.witness_x);
    }
    Obstacle obs{g, {}, Surface(g)};
    const auto um = potential(mu), un = potential(nu);
    obs.w.resize(g.nx);
    for (int i = 0; i < g.nx; ++i) obs.w[i] = std::min(um.values[i] - un.values[i], 0.0);
    for (int n = 0; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) obs.values.at(n, i) = vtau.at(n, i) + obs.w[i];
    return obs;
}

/// Projected SOR for the linear complementarity problem of one implicit step:
///
///   y >= psi,   A y >= rhs,   (y - psi)^T (A y - rhs) = 0,
///   A = tridiag(-c, 1 + 2c, -c)   (interior rows; end rows pinned to psi).
///
/// Any solver with the same `solve` signature (a pivoting LCP method, for
/// instance) can be passed to solve_value in its place.
struct ProjectedSor {
    double omega = 1.5;
    double tol = 1e-10;
    int max_iter = 10000;

    /// Returns the number of sweeps; `y` holds the initial guess on entry.
    int solve(double c, std::span<const double> rhs, std::span<const double> psi, std::span<double> y) const {
        const int nx = static_cast<int>(y.size());
        y[0] = psi[0];
        y[nx - 1] = psi[nx - 1];
        const double inv = 1.0 / (1.0 + 2.0 * c);
        for (int it = 1; it <= max_iter; ++it) {
            double change = 0.0;
            for (int i = 1; i < nx - 1; ++i) {
                const double gs = (rhs[i] + c * (y[i - 1] + y[i + 1])) * inv;
                const double next = std::max(psi[i], y[i] + omega * (gs - y[i]));
                change = std::max(change, std::abs(next - y[i]));
                y[i] = next;
            }
            if (change < tol) return it;
        }
        std::ostringstream msg;
        msg << "projected SOR did not converge in " << max_iter << " sweeps (omega = " << omega
            << ", tol = " << tol << ")";
        throw NumericalError(msg.str());
    }
};

struct ValueSolution {
    Surface v;
    long total_sweeps = 0;
    int max_sweeps = 0;
};

/// Dynamic programming in the horizon variable:
///   v(0, .) = v_tau(0, .),
///   v(t_{n+1}, .) = max(implicit heat step of v(t_n, .), obstacle(t_{n+1}, .)),
/// with the maximum enforced inside the implicit solve as an LCP and
/// Dirichlet data v = obstacle at the grid edges.
template <class Lcp = ProjectedSor>
ValueSolution solve_value(const Surface& vtau, const Obstacle& obs, const Lcp& lcp) {
    const GridSpec& g = vtau.grid();
    if (!(obs.grid == g)) throw ConfigError("solve_value: grids differ");
    ValueSolution sol{Surface(g)};
    const double c = g.dt() / (2.0 * g.dx() * g.dx());
    std::vector<double> y(g.nx);
    std::copy(vtau.row(0).begin(), vtau.row(0).end(), sol.v.row(0).begin());
    for (int n = 1; n < g.nt; ++n) {
        const auto prev = sol.v.row(n - 1);
        const auto psi = obs.values.row(n);
        for (int i = 0; i < g.nx; ++i) y[i] = std::max(prev[i], psi[i]);
        const int sweeps = lcp.solve(c, prev, psi, y);
        sol.total_sweeps += sweeps;
        sol.max_sweeps = std::max(sol.max_sweeps, sweeps);
        std::copy(y.begin(), y.end(), sol.v.row(n).begin());
    }
    return sol;
}

inline ValueSolution solve_value(const Surface& vtau, const Obstacle& obs, const SolverParams& p) {
    return solve_value(vtau, obs, ProjectedSor{p.psor_omega, p.psor_tol, p.psor_max_iter});
}

struct BarrierExtraction {
    Barrier barrier;
    int repaired_cells = 0;  ///< non-contact cells above a column's first contact
    std::vector<std::string> warnings;
};

/// R(x) = first grid time with v - obstacle <= eps_stop. Each column is
/// closed upward from its first contact; gaps longer than one cell are
/// reported.
inline BarrierExtraction extract_barrier(const Surface& v, const Obstacle& obs, double eps_stop) {
    const GridSpec& g = v.grid();
    BarrierExtraction out;
    std::vector<int> first(g.nx, g.nt);
    int long_gaps = 0;
    for (int i = 0; i < g.nx; ++i) {
        int n = 0;
        while (n < g.nt && v.at(n, i) - obs.values.at(n, i) > eps_stop) ++n;
        first[i] = n;
        int run = 0;
        for (int m = n + 1; m < g.nt; ++m) {
            if (v.at(m, i) - obs.values.at(m, i) > eps_stop) {
                ++out.repaired_cells;
                if (++run == 2) ++long_gaps;
            } else {
                run = 0;
            }
        }
    }
    out.barrier = Barrier(g, std::move(first));
    if (long_gaps > 0) {
        std::ostringstream msg;
        msg << long_gaps << " barrier column(s) leave the contact set for more than one cell after first contact";
        out.warnings.push_back(msg.str());
    }
    bool interior = false;
    for (int i = 1; i + 1 < g.nx; ++i) interior = interior || !out.barrier.never(i);
    if (!interior) throw HorizonError("no contact with the obstacle inside the window; increase t_max");
    if (!out.barrier.is_regular()) out.warnings.push_back("barrier is not regular: {x : R(x) > 0} is not an interval containing s0");
    return out;
}

struct EmbeddingReport {
    GridMeasure embedded;    ///< law of B at tau ^ t_max
    double potential_gap = 0.0;
    double mass_unabsorbed = 0.0;
    double e_tau = 0.0;
    double V = 0.0;
    double rel_gap = 0.0;

    bool passes(double potential_tol = 5e-3, double rel_tol = 0.02, double mass_tol = 1e-2) const {
        return potential_gap <= potential_tol && rel_gap <= rel_tol && mass_unabsorbed <= mass_tol;
    }
};

/// Restarts the forward density from zeta, absorbs it on the barrier, and
/// compares the absorbed law with mu.
inline EmbeddingReport verify_embedding_forward(const StartingLaw& zeta, const Barrier& barrier,
                                                const GridMeasure& mu) {
    const GridSpec& g = zeta.grid;
    const auto ev = evolve_forward(zeta.mass_surface(), barrier, 0.0);
    std::vector<double> law(g.nx, 0.0);
    EmbeddingReport rep;
    for (int n = 0; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) {
            law[i] += ev.stopped(n, i);
            rep.e_tau += g.t(n) * ev.stopped(n, i);
        }
    for (int i = 0; i < g.nx; ++i) {
        const double alive = ev.survive.at(g.nt - 1, i);
        rep.mass_unabsorbed += alive;
        rep.e_tau += g.t_max * alive;
        law[i] += alive;
    }
    if (rep.mass_unabsorbed > 1e-2) {
        std::ostringstream msg;
        msg << "barrier leaves mass " << rep.mass_unabsorbed << " unabsorbed at t_max = " << g.t_max;
        throw HorizonError(msg.str());
    }
    rep.embedded = GridMeasure(g, std::move(law));
    const auto ue = potential(rep.embedded), um = potential(mu);
    for (int i = 0; i < g.nx; ++i) rep.potential_gap = std::max(rep.potential_gap, std::abs(ue.values[i] - um.values[i]));
    rep.V = mu.second_moment();
    rep.rel_gap = rep.V > 0.0 ? std::abs(rep.e_tau - rep.V) / rep.V : std::abs(rep.e_tau);
    return rep;
}

/// Every intermediate of one constrained solve, in pipeline order.
struct RootSolve {
    StartingLaw zeta;
    GridMeasure nu;
    Surface vtau;
    Obstacle obstacle;
    ValueSolution value;
    BarrierExtraction extraction;

    const Barrier& barrier() const { return extraction.barrier; }
};

/// stopping clock -> starting law -> stopped potential -> obstacle -> value -> barrier.
inline RootSolve solve_constrained(const StoppingSpec& spec, const GridMeasure& mu, const SolverParams& p = {}) {
    RootSolve r;
    r.zeta = evolve_starting_law(spec, mu.grid());
    r.nu = marginal_law(r.zeta);
    r.vtau = stopped_potential(r.zeta);
    r.obstacle = make_obstacle(r.vtau, mu, r.nu);
    r.value = solve_value(r.vtau, r.obstacle, p);
    r.extraction = extract_barrier(r.value.v, r.obstacle, p.eps_stop);
    return r;
}

inline void write_value_surface_csv(const std::string& path, const Surface& v, int stride = 1) {
    write_surface_csv(path, v, "v", stride);
}

}  // namespace consep

#endif  // CONSEP_OPTSTOP_HPP
