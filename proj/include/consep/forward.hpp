#ifndef CONSEP_FORWARD_HPP
#define CONSEP_FORWARD_HPP

#include <cmath>
#include <sstream>
#include <vector>

#include "consep/barrier.hpp"
#include "consep/error.hpp"
#include "consep/grid.hpp"

namespace consep {

/// Mass bookkeeping of a forward absorbing evolution. All entries are masses
/// (not densities) attributed to the node (t_n, x_i).
///
/// Mass stopped inside the step [t_n, t_{n+1}] (clock kills and diffusive
/// flux into the barrier) is labelled with the step's start time t_n. Read as
/// a chain observed at exponential ticks, t_n is then an unbiased label for
/// the stopping time (Wald's identity); t_{n+1} would add a bias of dt.
struct ForwardEvolution {
    Surface killed;    ///< removed by the exponential clock during the step starting at t_n
    Surface flux;      ///< carried into barrier nodes during the step starting at t_n
    Surface arrived;   ///< sitting on a node when it joins the barrier at t_n
    Surface survive;   ///< still moving at t_n, after arrivals are removed

    /// All mass stopped at node i with label t_n.
    double stopped(int n, int i) const { return killed.at(n, i) + flux.at(n, i) + arrived.at(n, i); }
};

/// Evolves nodal mass under Brownian motion with killing rate `kill_rate`,
/// absorbing it on the barrier {t_n >= R(x_i)}.
///
/// The walk moves mass to each grid neighbour at rate 1 / (2 dx^2), so its
/// variance grows at rate one; grid edges not in the barrier reflect. Each
/// step is backward Euler:
///
///   (1 + rho dt + k_i c) m'_i - c * sum_{j ~ i, j moving} m'_j = m_i,   c = dt / (2 dx^2)
///
/// with k_i the number of neighbours of node i. The flux into an absorbing
/// node j is c * sum_{i ~ j} m'_i, which makes the scheme conserve mass to
/// rounding. `injection(n, i)` enters at (t_n, x_i) before arrivals are
/// removed at t_n.
inline ForwardEvolution evolve_forward(const Surface& injection, const Barrier& barrier, double kill_rate) {
    const GridSpec& g = injection.grid();
    if (!(barrier.grid() == g)) throw ConfigError("evolve_forward: barrier and injection grids differ");
    if (!(kill_rate >= 0.0)) throw ConfigError("kill rate must be nonnegative");
    const int nx = g.nx, nt = g.nt;
    const double dt = g.dt();
    const double c = dt / (2.0 * g.dx() * g.dx());

    ForwardEvolution out{Surface(g), Surface(g), Surface(g), Surface(g)};
    std::vector<double> m(nx, 0.0), next(nx), lower(nx), diag(nx), upper(nx);
    double injected = 0.0, removed = 0.0;

    auto inject_and_absorb = [&](int n) {
        for (int i = 0; i < nx; ++i) {
            m[i] += injection.at(n, i);
            injected += injection.at(n, i);
            if (barrier.contains(n, i) && m[i] != 0.0) {
                out.arrived.at(n, i) += m[i];
                removed += m[i];
                m[i] = 0.0;
            }
        }
        double alive = 0.0;
        for (int i = 0; i < nx; ++i) {
            out.survive.at(n, i) = m[i];
            alive += m[i];
        }
        const double leak = injected - removed - alive;
        if (std::abs(leak) > 1e-6) {
            std::ostringstream msg;
            msg << "forward evolution leaked mass " << leak << " by t = " << g.t(n);
            throw NumericalError(msg.str());
        }
    };

    inject_and_absorb(0);
    for (int n = 0; n + 1 < nt; ++n) {
        for (int i = 0; i < nx; ++i) {
            lower[i] = upper[i] = 0.0;
            if (barrier.contains(n, i)) {
                diag[i] = 1.0;
                continue;
            }
            const int k = (i == 0 || i == nx - 1) ? 1 : 2;
            diag[i] = 1.0 + kill_rate * dt + k * c;
            if (i > 0 && !barrier.contains(n, i - 1)) lower[i] = -c;
            if (i < nx - 1 && !barrier.contains(n, i + 1)) upper[i] = -c;
        }
        solve_tridiagonal(lower, diag, upper, m, next);
        for (int j = 0; j < nx; ++j) {
            if (!barrier.contains(n, j)) continue;
            double flux = 0.0;
            if (j > 0 && !barrier.contains(n, j - 1)) flux += c * next[j - 1];
            if (j < nx - 1 && !barrier.contains(n, j + 1)) flux += c * next[j + 1];
            out.flux.at(n, j) += flux;
            removed += flux;
            next[j] = 0.0;
        }
        if (kill_rate > 0.0)
            for (int i = 0; i < nx; ++i) {
                const double k = kill_rate * dt * next[i];
                out.killed.at(n, i) = k;
                removed += k;
            }
        m.swap(next);
        inject_and_absorb(n + 1);
    }
    return out;
}

}  // namespace consep

#endif  // CONSEP_FORWARD_HPP
