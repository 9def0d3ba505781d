#ifndef CONSEP_GRID_HPP
#define CONSEP_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "consep/error.hpp"

namespace consep {

/// Uniform space-time grid on [x_min, x_max] x [0, t_max].
///
/// Node i sits at x_min + (x_max - x_min) * i / (nx - 1), so symmetric grids
/// place nodes at exactly mirrored positions. The Brownian start s0 must lie
/// strictly inside the spatial window.
struct GridSpec {
    double x_min = -4.0;
    double x_max = 4.0;
    int nx = 401;
    double t_max = 4.0;
    int nt = 801;
    double s0 = 0.0;

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dt() const { return t_max / (nt - 1); }
    double x(int i) const { return x_min + (x_max - x_min) * i / (nx - 1); }
    double t(int n) const { return t_max * n / (nt - 1); }

    /// Nearest node index, clamped to the grid.
    int node_of(double xv) const {
        const long i = std::lround((xv - x_min) / dx());
        return static_cast<int>(std::clamp<long>(i, 0, nx - 1));
    }
    /// Largest node index with x(i) <= xv, clamped to [0, nx - 2].
    int cell_of(double xv) const {
        const long i = static_cast<long>(std::floor((xv - x_min) / dx()));
        return static_cast<int>(std::clamp<long>(i, 0, nx - 2));
    }
    int step_of(double tv) const {
        const long n = std::lround(tv / dt());
        return static_cast<int>(std::clamp<long>(n, 0, nt - 1));
    }
    int s0_node() const { return node_of(s0); }

    bool is_node(double xv, double rel_tol = 1e-9) const {
        return std::abs(x(node_of(xv)) - xv) <= rel_tol * dx();
    }

    void validate() const {
        std::ostringstream msg;
        if (nx < 3) msg << "nx must be >= 3 (got " << nx << "); ";
        if (nt < 2) msg << "nt must be >= 2 (got " << nt << "); ";
        if (!(x_min < s0 && s0 < x_max))
            msg << "grid [" << x_min << ", " << x_max << "] must contain s0 = " << s0
                << " in its interior; ";
        else if (nx >= 3 && !is_node(s0)) msg << "s0 = " << s0 << " must be a grid node; ";
        if (!(t_max > 0.0)) msg << "t_max must be positive; ";
        const std::string m = msg.str();
        if (!m.empty()) throw ConfigError("invalid grid: " + m);
    }

    bool operator==(const GridSpec&) const = default;
};

/// Scalar field on the (t, x) nodes of a grid, row-major in time.
class Surface {
public:
    Surface() = default;
    Surface(const GridSpec& grid, double fill = 0.0)
        : grid_(grid), values_(static_cast<std::size_t>(grid.nt) * grid.nx, fill) {}

    const GridSpec& grid() const { return grid_; }
    int nt() const { return grid_.nt; }
    int nx() const { return grid_.nx; }

    double& at(int n, int i) { return values_[index(n, i)]; }
    double at(int n, int i) const { return values_[index(n, i)]; }

    std::span<double> row(int n) {
        return {values_.data() + index(n, 0), static_cast<std::size_t>(grid_.nx)};
    }
    std::span<const double> row(int n) const {
        return {values_.data() + index(n, 0), static_cast<std::size_t>(grid_.nx)};
    }

    std::span<const double> data() const { return values_; }

    /// Bilinear interpolation; arguments outside the grid are clamped.
    double interp(double t, double x) const {
        const double tt = std::clamp(t, 0.0, grid_.t_max);
        const double xx = std::clamp(x, grid_.x_min, grid_.x_max);
        const int n = std::min(static_cast<int>(tt / grid_.dt()), grid_.nt - 2);
        const int i = grid_.cell_of(xx);
        const double wt = std::clamp((tt - grid_.t(n)) / grid_.dt(), 0.0, 1.0);
        const double wx = std::clamp((xx - grid_.x(i)) / grid_.dx(), 0.0, 1.0);
        const double lo = (1 - wx) * at(n, i) + wx * at(n, i + 1);
        const double hi = (1 - wx) * at(n + 1, i) + wx * at(n + 1, i + 1);
        return (1 - wt) * lo + wt * hi;
    }

private:
    std::size_t index(int n, int i) const {
        return static_cast<std::size_t>(n) * grid_.nx + static_cast<std::size_t>(i);
    }

    GridSpec grid_;
    std::vector<double> values_;
};

/// Linear interpolation of nodal values at x, clamped to the grid.
inline double interp_nodes(const GridSpec& grid, std::span<const double> values, double x) {
    const double xx = std::clamp(x, grid.x_min, grid.x_max);
    const int i = grid.cell_of(xx);
    const double w = std::clamp((xx - grid.x(i)) / grid.dx(), 0.0, 1.0);
    return (1 - w) * values[i] + w * values[i + 1];
}

/// Thomas algorithm for a tridiagonal system. `lower[0]` and `upper[n-1]` are
/// ignored. The system must be diagonally dominant; no pivoting is done.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<const double> rhs,
                              std::span<double> out) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), d(n);
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (std::size_t k = 1; k < n; ++k) {
        const double m = diag[k] - lower[k] * c[k - 1];
        c[k] = k + 1 < n ? upper[k] / m : 0.0;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / m;
    }
    out[n - 1] = d[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) out[k] = d[k] - c[k] * out[k + 1];
}

/// Cumulative trapezoidal integral of nodal values from node `origin`
/// (signed: negative to the left of the origin).
inline std::vector<double> cumulative_trapezoid(std::span<const double> f, double h, int origin) {
    const int n = static_cast<int>(f.size());
    std::vector<double> out(n, 0.0);
    for (int i = origin + 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    for (int i = origin - 1; i >= 0; --i) out[i] = out[i + 1] - 0.5 * h * (f[i + 1] + f[i]);
    return out;
}

}  // namespace consep

#endif  // CONSEP_GRID_HPP
