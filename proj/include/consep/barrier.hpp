#ifndef CONSEP_BARRIER_HPP
#define CONSEP_BARRIER_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "consep/error.hpp"
#include "consep/grid.hpp"

namespace consep {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Root-type barrier {(t, x) : t >= R(x)} stored as the first contact step of
/// every spatial node. A node that never enters the barrier inside the window
/// holds the sentinel step nt and R(x) = +inf. Right-closedness in t is
/// structural: a node is in the barrier at every step >= its first step.
class Barrier {
public:
    Barrier() = default;
    explicit Barrier(const GridSpec& grid) : grid_(grid), first_(grid.nx, grid.nt) {}
    Barrier(const GridSpec& grid, std::vector<int> first_step) : grid_(grid), first_(std::move(first_step)) {
        if (static_cast<int>(first_.size()) != grid_.nx) throw ConfigError("barrier size does not match grid");
        for (auto& s : first_) s = std::clamp(s, 0, grid_.nt);
    }

    /// Snaps barrier times onto the time grid (first step n with t_n >= R).
    static Barrier from_times(const GridSpec& grid, std::span<const double> times) {
        std::vector<int> first(grid.nx, grid.nt);
        for (int i = 0; i < grid.nx; ++i) {
            const double r = times[i];
            if (std::isinf(r) || r > grid.t_max * (1 + 1e-12)) continue;
            first[i] = static_cast<int>(std::ceil(std::max(r, 0.0) / grid.dt() - 1e-9));
        }
        return Barrier(grid, std::move(first));
    }

    /// Vertical line t = t0 across the whole grid.
    static Barrier vertical(const GridSpec& grid, double t0) {
        return from_times(grid, std::vector<double>(grid.nx, t0));
    }

    /// R = 0 outside the open interval (lo, hi), +inf inside.
    static Barrier interval(const GridSpec& grid, double lo, double hi) {
        std::vector<double> r(grid.nx, kInf);
        const double tol = 1e-9 * grid.dx();
        for (int i = 0; i < grid.nx; ++i)
            if (grid.x(i) <= lo + tol || grid.x(i) >= hi - tol) r[i] = 0.0;
        return from_times(grid, r);
    }

    const GridSpec& grid() const { return grid_; }
    std::span<const int> first_steps() const { return first_; }
    int first_step(int i) const { return first_[i]; }
    bool never(int i) const { return first_[i] >= grid_.nt; }
    bool contains(int n, int i) const { return n >= first_[i]; }

    double R(int i) const { return never(i) ? kInf : grid_.t(first_[i]); }
    std::vector<double> times() const {
        std::vector<double> r(grid_.nx);
        for (int i = 0; i < grid_.nx; ++i) r[i] = R(i);
        return r;
    }

    /// Linear interpolation of R between nodes. If either neighbour is +inf
    /// the open cell is +inf and only the node itself keeps its finite value.
    /// Outside the grid R is extended flat.
    double interp(double x) const {
        if (x <= grid_.x_min) return R(0);
        if (x >= grid_.x_max) return R(grid_.nx - 1);
        const int i = grid_.cell_of(x);
        const double w = (x - grid_.x(i)) / grid_.dx();
        const double a = R(i), b = R(i + 1);
        if (w <= 1e-12) return a;
        if (w >= 1 - 1e-12) return b;
        if (std::isinf(a) || std::isinf(b)) return kInf;
        return (1 - w) * a + w * b;
    }

    /// Upper envelope: inside an open cell R is the larger of its two node
    /// values, so the cell keeps moving until both of its nodes have stopped.
    /// This is the continuous-path reading of the nodal walk, and it puts
    /// stops next to an R = 0 node exactly on that node.
    double envelope(double x) const {
        if (x <= grid_.x_min) return R(0);
        if (x >= grid_.x_max) return R(grid_.nx - 1);
        const int i = grid_.cell_of(x);
        const double w = (x - grid_.x(i)) / grid_.dx();
        if (w <= 1e-12) return R(i);
        if (w >= 1 - 1e-12) return R(i + 1);
        return std::max(R(i), R(i + 1));
    }

    bool empty() const {
        return std::all_of(first_.begin(), first_.end(), [this](int s) { return s >= grid_.nt; });
    }

    /// Nodes with R > 0 form one interval containing s0.
    bool is_regular() const {
        const int s = grid_.s0_node();
        if (first_[s] == 0) return false;
        int lo = s, hi = s;
        while (lo > 0 && first_[lo - 1] > 0) --lo;
        while (hi < grid_.nx - 1 && first_[hi + 1] > 0) ++hi;
        for (int i = 0; i < grid_.nx; ++i)
            if ((i < lo || i > hi) && first_[i] > 0) return false;
        return true;
    }

private:
    GridSpec grid_;
    std::vector<int> first_;
};

inline void write_barrier_csv(const std::string& path, const Barrier& b) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.precision(17);
    out << "x,R\n";
    for (int i = 0; i < b.grid().nx; ++i) {
        out << b.grid().x(i) << ',';
        if (b.never(i))
            out << "inf";
        else
            out << b.R(i);
        out << '\n';
    }
}

/// Reads `x,R` rows and maps them onto `grid` with the same interpolation
/// rule as Barrier::interp.
inline Barrier read_barrier_csv(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open barrier file " + path);
    std::vector<std::pair<double, double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == "x,R") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected x,R");
        try {
            const double x = std::stod(line.substr(0, comma));
            const std::string rs = line.substr(comma + 1);
            const double r = (rs == "inf" || rs == "+inf") ? kInf : std::stod(rs);
            rows.emplace_back(x, r);
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    if (rows.empty()) throw ConfigError("barrier file " + path + " has no rows");
    std::sort(rows.begin(), rows.end());
    std::vector<double> r(grid.nx, kInf);
    for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i);
        auto hi = std::lower_bound(rows.begin(), rows.end(), std::make_pair(x, -kInf));
        if (hi == rows.end()) {
            r[i] = rows.back().second;
            continue;
        }
        if (hi == rows.begin() || std::abs(hi->first - x) <= 1e-9 * grid.dx()) {
            r[i] = hi->second;
            continue;
        }
        const auto lo = hi - 1;
        if (std::isinf(lo->second) || std::isinf(hi->second)) {
            r[i] = kInf;
            continue;
        }
        const double w = (x - lo->first) / (hi->first - lo->first);
        r[i] = (1 - w) * lo->second + w * hi->second;
    }
    return Barrier::from_times(grid, r);
}

}  // namespace consep

#endif  // CONSEP_BARRIER_HPP
