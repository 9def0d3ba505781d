#ifndef CONSEP_STOPPING_HPP
#define CONSEP_STOPPING_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "consep/barrier.hpp"
#include "consep/error.hpp"
#include "consep/forward.hpp"
#include "consep/grid.hpp"
#include "consep/measures.hpp"

namespace consep {

/// tau_lower = 0.
struct ZeroStop {};

/// tau_lower = t0.
struct FixedTimeStop {
    double t0 = 0.0;
};

/// tau_lower = first exit of (a, b) ^ an independent Exp(rho) clock.
struct IntervalExitStop {
    double a = -1.0;
    double b = 1.0;
    double rho = 1.0;
};

/// tau_lower = first entry into a Root-type information barrier.
struct BarrierStop {
    Barrier barrier;
    std::string source;  ///< file the barrier was read from, for reporting
};

using StoppingSpec = std::variant<ZeroStop, FixedTimeStop, IntervalExitStop, BarrierStop>;

inline std::string describe(const StoppingSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            std::ostringstream o;
            if constexpr (std::is_same_v<T, ZeroStop>)
                o << "zero";
            else if constexpr (std::is_same_v<T, FixedTimeStop>)
                o << "fixed_time(" << s.t0 << ")";
            else if constexpr (std::is_same_v<T, IntervalExitStop>)
                o << "interval_exit(" << s.a << ", " << s.b << ", rho=" << s.rho << ")";
            else
                o << "barrier_file(" << s.source << ")";
            return o.str();
        },
        spec);
}

/// Discretized joint law zeta of (tau_lower, B_{tau_lower}).
///
/// `kill` and `exit` hold mass stopped during the step starting at t_n;
/// `arrive` holds mass stopped exactly at t_n (a fixed time, or a barrier
/// node switching on under it). The distinction only matters for the
/// stopped potential at grid times.
struct StartingLaw {
    GridSpec grid;
    Surface kill;                 ///< stopped in the interior by the clock
    Surface exit;                 ///< absorbed at interval ends or on an information barrier
    Surface arrive;               ///< stopped in place at t_n
    Surface survive;              ///< not yet stopped at t_n
    std::vector<double> terminal; ///< still alive at t_max, folded into zeta at t_max
    bool terminal_flagged = false;
    std::vector<std::string> warnings;

    double stopped(int n, int i) const {
        double s = kill.at(n, i) + exit.at(n, i) + arrive.at(n, i);
        if (n == grid.nt - 1) s += terminal[i];
        return s;
    }

    /// zeta as a single injection surface (terminal mass included at t_max).
    Surface mass_surface() const {
        Surface z(grid);
        for (int n = 0; n < grid.nt; ++n)
            for (int i = 0; i < grid.nx; ++i) z.at(n, i) = stopped(n, i);
        return z;
    }

    double expected_time() const {
        double s = 0.0;
        for (int n = 0; n < grid.nt; ++n)
            for (int i = 0; i < grid.nx; ++i) s += grid.t(n) * stopped(n, i);
        return s;
    }

    double exit_mass(int n, bool upper) const {
        double s = 0.0;
        for (int i = 0; i < grid.nx; ++i)
            if ((grid.x(i) > grid.s0) == upper) s += exit.at(n, i);
        return s;
    }

    double terminal_mass() const {
        double s = 0.0;
        for (double v : terminal) s += v;
        return s;
    }
};

namespace detail {

inline double snap_to_node(const GridSpec& g, double x, const char* what, std::vector<std::string>& warnings) {
    detail::require_inside(g, x, what);
    const double snapped = g.x(g.node_of(x));
    if (!g.is_node(x)) {
        std::ostringstream msg;
        msg << what << " " << x << " is not a grid node; using " << snapped;
        warnings.push_back(msg.str());
    }
    return snapped;
}

}  // namespace detail

/// Throws ConfigError if the clock does not fit the grid.
inline void validate_stopping(const StoppingSpec& spec, const GridSpec& grid) {
    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, FixedTimeStop>) {
                if (!(st.t0 >= 0.0 && st.t0 <= grid.t_max)) throw ConfigError("fixed_time t0 must lie in [0, t_max]");
            } else if constexpr (std::is_same_v<T, IntervalExitStop>) {
                if (!(st.a < grid.s0 && grid.s0 < st.b)) throw ConfigError("interval_exit requires a < s0 < b");
                if (!(st.rho >= 0.0)) throw ConfigError("interval_exit requires rho >= 0");
                if (st.a < grid.x_min || st.b > grid.x_max) throw ConfigError("interval_exit ends must lie on the grid");
            } else if constexpr (std::is_same_v<T, BarrierStop>) {
                if (!(st.barrier.grid() == grid)) throw ConfigError("information barrier lives on another grid");
            }
        },
        spec);
}

/// Forward evolution of the information clock from unit mass at (0, s0).
inline StartingLaw evolve_starting_law(const StoppingSpec& spec, const GridSpec& grid) {
    grid.validate();
    validate_stopping(spec, grid);
    StartingLaw z{grid, Surface(grid), Surface(grid), Surface(grid), Surface(grid), std::vector<double>(grid.nx, 0.0), false, {}};
    const int s = grid.s0_node();
    Surface injection(grid);
    injection.at(0, s) = 1.0;

    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, ZeroStop>) {
                z.arrive.at(0, s) = 1.0;
            } else if constexpr (std::is_same_v<T, FixedTimeStop>) {
                const int n0 = grid.step_of(st.t0);
                if (std::abs(grid.t(n0) - st.t0) > 1e-9 * grid.dt()) {
                    std::ostringstream msg;
                    msg << "fixed_time t0 = " << st.t0 << " is not a grid time; using " << grid.t(n0);
                    z.warnings.push_back(msg.str());
                }
                const auto ev = evolve_forward(injection, Barrier::vertical(grid, grid.t(n0)), 0.0);
                z.arrive = ev.arrived;
                z.survive = ev.survive;
            } else if constexpr (std::is_same_v<T, IntervalExitStop>) {
                const double a = detail::snap_to_node(grid, st.a, "interval end", z.warnings);
                const double b = detail::snap_to_node(grid, st.b, "interval end", z.warnings);
                const auto ev = evolve_forward(injection, Barrier::interval(grid, a, b), st.rho);
                z.kill = ev.killed;
                z.exit = ev.flux;
                z.survive = ev.survive;
            } else {
                const auto ev = evolve_forward(injection, st.barrier, 0.0);
                z.exit = ev.flux;
                z.arrive = ev.arrived;
                z.survive = ev.survive;
            }
        },
        spec);

    const auto last = z.survive.row(grid.nt - 1);
    z.terminal.assign(last.begin(), last.end());
    const double tm = z.terminal_mass();
    if (tm > 0.0) z.terminal_flagged = true;
    if (tm > 1e-3) {
        std::ostringstream msg;
        msg << "horizon too short for tau_lower: surviving mass " << tm << " at t_max = " << grid.t_max;
        z.warnings.push_back(msg.str());
    }
    return z;
}

/// Spatial marginal nu of zeta. Flux into interval ends or an information
/// barrier becomes atoms; everything else stays nodal.
inline GridMeasure marginal_law(const StartingLaw& z) {
    const auto& g = z.grid;
    std::vector<double> nodal(g.nx, 0.0), exits(g.nx, 0.0);
    for (int n = 0; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i) {
            nodal[i] += z.kill.at(n, i) + z.arrive.at(n, i);
            exits[i] += z.exit.at(n, i);
        }
    for (int i = 0; i < g.nx; ++i) nodal[i] += z.terminal[i];
    std::vector<Atom> atoms;
    for (int i = 0; i < g.nx; ++i)
        if (exits[i] > 0.0) atoms.push_back({g.x(i), exits[i]});
    return GridMeasure(g, std::move(nodal), std::move(atoms));
}

/// v(t, x) = -E|B_{t ^ tau_lower} - x|: the potential of the mass still
/// moving at t plus all mass frozen at its stopping location by time t.
/// Mass stopped during a step is frozen from the end of that step.
inline Surface stopped_potential(const StartingLaw& z) {
    const auto& g = z.grid;
    Surface v(g);
    std::vector<double> frozen(g.nx, 0.0), mass(g.nx);
    for (int n = 0; n < g.nt; ++n) {
        for (int i = 0; i < g.nx; ++i) {
            if (n > 0) frozen[i] += z.kill.at(n - 1, i) + z.exit.at(n - 1, i);
            frozen[i] += z.arrive.at(n, i);
            mass[i] = frozen[i] + z.survive.at(n, i);
        }
        const auto u = potential_of_node_masses(g, mass);
        std::copy(u.begin(), u.end(), v.row(n).begin());
    }
    return v;
}

inline void write_starting_law_csv(const std::string& path, const StartingLaw& z) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.precision(17);
    const auto& g = z.grid;
    out << "#kill\nt,x,kill_mass\n";
    for (int n = 0; n < g.nt; ++n)
        for (int i = 0; i < g.nx; ++i)
            if (const double k = z.kill.at(n, i) + z.arrive.at(n, i); k > 0.0)
                out << g.t(n) << ',' << g.x(i) << ',' << k << '\n';
    out << "#exit\nt,exit_side,mass\n";
    for (int n = 0; n < g.nt; ++n) {
        const double lo = z.exit_mass(n, false), hi = z.exit_mass(n, true);
        if (lo > 0.0) out << g.t(n) << ",lower," << lo << '\n';
        if (hi > 0.0) out << g.t(n) << ",upper," << hi << '\n';
    }
    out << "#terminal\nx,terminal_mass\n";
    for (int i = 0; i < g.nx; ++i)
        if (z.terminal[i] > 0.0) out << g.x(i) << ',' << z.terminal[i] << '\n';
}

/// Dumps a surface as `t,x,<value_name>` rows, every `stride`-th time row.
inline void write_surface_csv(const std::string& path, const Surface& s, const std::string& value_name,
                              int stride = 1) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.precision(12);
    const auto& g = s.grid();
    out << "t,x," << value_name << '\n';
    for (int n = 0; n < g.nt; n += std::max(stride, 1))
        for (int i = 0; i < g.nx; ++i) out << g.t(n) << ',' << g.x(i) << ',' << s.at(n, i) << '\n';
}

}  // namespace consep

#endif  // CONSEP_STOPPING_HPP
