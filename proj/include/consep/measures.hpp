#ifndef CONSEP_MEASURES_HPP
#define CONSEP_MEASURES_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "consep/error.hpp"
#include "consep/grid.hpp"

namespace consep {

struct Atom {
    double x;
    double mass;
};

/// Probability measure on a grid: nodal masses (trapezoidal weights already
/// folded in, so node i carries the mass of [x_i - dx/2, x_i + dx/2]) plus
/// point atoms at arbitrary locations.
class GridMeasure {
public:
    GridMeasure() = default;
    explicit GridMeasure(const GridSpec& grid)
        : grid_(grid), node_mass_(static_cast<std::size_t>(grid.nx), 0.0) {}
    GridMeasure(const GridSpec& grid, std::vector<double> node_mass, std::vector<Atom> atoms = {})
        : grid_(grid), node_mass_(std::move(node_mass)), atoms_(std::move(atoms)) {
        if (static_cast<int>(node_mass_.size()) != grid_.nx)
            throw ConfigError("node mass array does not match grid size");
        merge_atoms();
    }

    const GridSpec& grid() const { return grid_; }
    std::span<const double> node_mass() const { return node_mass_; }
    std::span<double> node_mass() { return node_mass_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    void add_atom(double x, double mass) {
        atoms_.push_back({x, mass});
        merge_atoms();
    }

    double total_mass() const {
        double s = std::accumulate(node_mass_.begin(), node_mass_.end(), 0.0);
        for (const auto& a : atoms_) s += a.mass;
        return s;
    }

    double mean() const { return moment([](double x) { return x; }) / total_mass(); }

    /// Second moment about the grid's start point s0.
    double second_moment() const {
        const double s0 = grid_.s0;
        return moment([s0](double x) { return (x - s0) * (x - s0); }) / total_mass();
    }

    GridMeasure normalized() const {
        const double m = total_mass();
        if (!(m > 0.0)) throw ConfigError("cannot normalize a measure with zero mass");
        GridMeasure out = *this;
        for (auto& v : out.node_mass_) v /= m;
        for (auto& a : out.atoms_) a.mass /= m;
        return out;
    }

    /// Smallest and largest locations carrying positive mass.
    double ess_inf() const { return support_end(false); }
    double ess_sup() const { return support_end(true); }

    /// P(X <= x); nodal mass is spread uniformly over its cell.
    double cdf(double x) const { return cdf_impl(x, true); }
    /// P(X < x).
    double cdf_left(double x) const { return cdf_impl(x, false); }

private:
    template <class Fn>
    double moment(Fn fn) const {
        double s = 0.0;
        for (int i = 0; i < grid_.nx; ++i) s += fn(grid_.x(i)) * node_mass_[i];
        for (const auto& a : atoms_) s += fn(a.x) * a.mass;
        return s;
    }

    void merge_atoms() {
        std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
        std::vector<Atom> merged;
        for (const auto& a : atoms_) {
            if (a.mass < 0.0) throw ConfigError("atom with negative mass");
            if (!merged.empty() && std::abs(merged.back().x - a.x) <= 1e-12 * (1.0 + std::abs(a.x)))
                merged.back().mass += a.mass;
            else if (a.mass > 0.0)
                merged.push_back(a);
        }
        atoms_ = std::move(merged);
    }

    double support_end(bool upper) const {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = 0; i < grid_.nx; ++i)
            if (node_mass_[i] > 0.0) {
                lo = std::min(lo, grid_.x(i));
                hi = std::max(hi, grid_.x(i));
            }
        for (const auto& a : atoms_) {
            lo = std::min(lo, a.x);
            hi = std::max(hi, a.x);
        }
        return upper ? hi : lo;
    }

    double cdf_impl(double x, bool inclusive) const {
        const double h = grid_.dx();
        double s = 0.0;
        for (int i = 0; i < grid_.nx; ++i) {
            const double lo = grid_.x(i) - 0.5 * h;
            s += node_mass_[i] * std::clamp((x - lo) / h, 0.0, 1.0);
        }
        for (const auto& a : atoms_)
            if (a.x < x || (inclusive && a.x == x)) s += a.mass;
        return s;
    }

    GridSpec grid_;
    std::vector<double> node_mass_;
    std::vector<Atom> atoms_;
};

/// Potential u(x) = -E|X - x| tabulated on the grid nodes.
struct Potential {
    GridSpec grid;
    std::vector<double> values;

    double operator()(double x) const { return interp_nodes(grid, values, x); }
};

/// -sum_i m_i |x_i - x_j| at every node j, O(nx) by prefix sums.
inline std::vector<double> potential_of_node_masses(const GridSpec& grid, std::span<const double> mass) {
    const int nx = grid.nx;
    std::vector<double> u(nx);
    double right_mass = 0.0, right_moment = 0.0;
    for (int i = 0; i < nx; ++i) {
        right_mass += mass[i];
        right_moment += mass[i] * grid.x(i);
    }
    double left_mass = 0.0, left_moment = 0.0;
    for (int j = 0; j < nx; ++j) {
        const double xj = grid.x(j);
        right_mass -= mass[j];
        right_moment -= mass[j] * grid.x(j);
        u[j] = -((xj * left_mass - left_moment) + (right_moment - xj * right_mass));
        left_mass += mass[j];
        left_moment += mass[j] * xj;
    }
    return u;
}

inline Potential potential(const GridMeasure& mu) {
    Potential p{mu.grid(), potential_of_node_masses(mu.grid(), mu.node_mass())};
    for (const auto& a : mu.atoms())
        for (int j = 0; j < mu.grid().nx; ++j) p.values[j] -= a.mass * std::abs(a.x - mu.grid().x(j));
    return p;
}

/// Exact potential at an arbitrary point (no interpolation).
inline double potential_at(const GridMeasure& mu, double x) {
    double s = 0.0;
    const auto& g = mu.grid();
    for (int i = 0; i < g.nx; ++i) s += mu.node_mass()[i] * std::abs(g.x(i) - x);
    for (const auto& a : mu.atoms()) s += a.mass * std::abs(a.x - x);
    return -s;
}

// ---------------------------------------------------------------------------
// Construction

struct MixtureComponent {
    enum class Kind { gaussian, dirac, uniform };
    Kind kind = Kind::gaussian;
    double p1 = 0.0;  ///< mean (gaussian), location (dirac), lower end (uniform)
    double p2 = 1.0;  ///< standard deviation (gaussian), upper end (uniform)
    double weight = 1.0;

    static MixtureComponent gaussian(double mean, double sd, double w = 1.0) {
        return {Kind::gaussian, mean, sd, w};
    }
    static MixtureComponent dirac(double x, double w = 1.0) { return {Kind::dirac, x, 0.0, w}; }
    static MixtureComponent uniform(double a, double b, double w = 1.0) { return {Kind::uniform, a, b, w}; }
};

/// Weighted mixture, optionally truncated to [lo, hi] with the Gaussian tails
/// collapsed onto atoms at the interval ends.
struct MixtureSpec {
    std::vector<MixtureComponent> components;
    std::optional<std::pair<double, double>> truncate;
};

/// Equal-weight mixture of N(0, 4) and N(0, 9) on (-1, 1), tails folded onto
/// atoms at -1 and 1.
inline MixtureSpec truncated_gaussian_mixture() {
    return {{MixtureComponent::gaussian(0.0, 2.0, 0.5), MixtureComponent::gaussian(0.0, 3.0, 0.5)},
            std::make_pair(-1.0, 1.0)};
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

/// Trapezoid weights of the nodes covering [lo, hi] (ends snapped inward).
inline std::vector<double> trapezoid_weights(const GridSpec& g, double lo, double hi) {
    std::vector<double> w(g.nx, 0.0);
    const double tol = 1e-9 * g.dx();
    int first = -1, last = -1;
    for (int i = 0; i < g.nx; ++i)
        if (g.x(i) >= lo - tol && g.x(i) <= hi + tol) {
            if (first < 0) first = i;
            last = i;
        }
    if (first < 0) return w;
    for (int i = first; i <= last; ++i) w[i] = g.dx();
    if (last > first) {
        w[first] *= 0.5;
        w[last] *= 0.5;
    }
    return w;
}

inline void require_inside(const GridSpec& g, double x, const char* what) {
    const double tol = 1e-9 * g.dx();
    if (x < g.x_min - tol || x > g.x_max + tol) {
        std::ostringstream msg;
        msg << what << " at " << x << " lies outside the grid [" << g.x_min << ", " << g.x_max << "]";
        throw ConfigError(msg.str());
    }
}

}  // namespace detail

/// Discretizes a mixture on the grid. Each component's density part is
/// rescaled to its exact probability on the covered interval, so atoms keep
/// their exact mass.
inline GridMeasure build_mixture(const MixtureSpec& spec, const GridSpec& grid) {
    grid.validate();
    if (spec.components.empty()) throw ConfigError("mixture has no components");
    double wsum = 0.0;
    for (const auto& c : spec.components) {
        if (!(c.weight >= 0.0)) throw ConfigError("mixture weights must be nonnegative");
        wsum += c.weight;
    }
    if (!(wsum > 0.0)) throw ConfigError("mixture weights sum to zero");

    GridMeasure mu(grid);
    auto mass = mu.node_mass();
    for (const auto& c : spec.components) {
        const double w = c.weight / wsum;
        if (w == 0.0) continue;
        switch (c.kind) {
        case MixtureComponent::Kind::dirac:
            detail::require_inside(grid, c.p1, "dirac component");
            mu.add_atom(c.p1, w);
            break;
        case MixtureComponent::Kind::uniform: {
            if (!(c.p1 < c.p2)) throw ConfigError("uniform component needs lower < upper");
            detail::require_inside(grid, c.p1, "uniform component end");
            detail::require_inside(grid, c.p2, "uniform component end");
            const auto tw = detail::trapezoid_weights(grid, c.p1, c.p2);
            const double s = std::accumulate(tw.begin(), tw.end(), 0.0);
            if (!(s > 0.0)) throw ConfigError("uniform component narrower than the grid spacing");
            for (int i = 0; i < grid.nx; ++i) mass[i] += w * tw[i] / s;
            break;
        }
        case MixtureComponent::Kind::gaussian: {
            const double m = c.p1, sd = c.p2;
            if (!(sd > 0.0)) throw ConfigError("gaussian component needs a positive standard deviation");
            double lo = grid.x_min, hi = grid.x_max;
            if (spec.truncate) {
                lo = spec.truncate->first;
                hi = spec.truncate->second;
                detail::require_inside(grid, lo, "truncation end");
                detail::require_inside(grid, hi, "truncation end");
                mu.add_atom(lo, w * detail::normal_cdf((lo - m) / sd));
                mu.add_atom(hi, w * (1.0 - detail::normal_cdf((hi - m) / sd)));
            }
            const double inside = detail::normal_cdf((hi - m) / sd) - detail::normal_cdf((lo - m) / sd);
            if (!spec.truncate && 1.0 - inside > 1e-2) {
                std::ostringstream msg;
                msg << "grid does not cover the support of N(" << m << ", " << sd * sd
                    << "): mass outside the grid is " << 1.0 - inside;
                throw ConfigError(msg.str());
            }
            const auto tw = detail::trapezoid_weights(grid, lo, hi);
            std::vector<double> dens(grid.nx, 0.0);
            double s = 0.0;
            for (int i = 0; i < grid.nx; ++i) {
                dens[i] = tw[i] * detail::normal_pdf((grid.x(i) - m) / sd) / sd;
                s += dens[i];
            }
            // without truncation the density part carries all of the weight
            const double target = spec.truncate ? w * inside : w;
            if (s > 0.0)
                for (int i = 0; i < grid.nx; ++i) mass[i] += target * dens[i] / s;
            break;
        }
        }
    }
    return GridMeasure(grid, std::vector<double>(mass.begin(), mass.end()), mu.atoms());
}

inline GridMeasure gaussian_measure(const GridSpec& g, double mean, double variance) {
    return build_mixture({{MixtureComponent::gaussian(mean, std::sqrt(variance))}, std::nullopt}, g);
}
inline GridMeasure dirac_measure(const GridSpec& g, double x) {
    return build_mixture({{MixtureComponent::dirac(x)}, std::nullopt}, g);
}
/// (delta_{s0-a} + delta_{s0+a}) / 2
inline GridMeasure two_point_measure(const GridSpec& g, double a) {
    return build_mixture({{MixtureComponent::dirac(g.s0 - a, 0.5), MixtureComponent::dirac(g.s0 + a, 0.5)},
                          std::nullopt},
                         g);
}
inline GridMeasure uniform_measure(const GridSpec& g, double a, double b) {
    return build_mixture({{MixtureComponent::uniform(a, b)}, std::nullopt}, g);
}

// ---------------------------------------------------------------------------
// Convex order

struct OrderVerdict {
    enum class Reason { none, mean, potential };
    bool ordered = true;
    Reason reason = Reason::none;
    double witness_x = std::numeric_limits<double>::quiet_NaN();
    double violation = 0.0;  ///< max of u_mu - u_nu, or the mean gap
};

inline double convex_order_tolerance(const GridSpec& g) { return 10.0 * g.dx() * g.dx() + 1e-12; }
inline constexpr double kMeanTolerance = 1e-8;

/// Is nu <= mu in convex order? Compares means, then potentials node by node;
/// on failure the witness is the node of largest violation u_mu - u_nu.
inline OrderVerdict convex_order(const GridMeasure& nu, const GridMeasure& mu,
                                 std::optional<double> tol = std::nullopt) {
    if (!(nu.grid() == mu.grid())) throw ConfigError("convex_order: measures live on different grids");
    OrderVerdict v;
    const double gap = nu.mean() - mu.mean();
    if (std::abs(gap) > kMeanTolerance) {
        v.ordered = false;
        v.reason = OrderVerdict::Reason::mean;
        v.violation = gap;
        return v;
    }
    const double t = tol.value_or(convex_order_tolerance(mu.grid()));
    const auto un = potential(nu), um = potential(mu);
    int worst = -1;
    double worst_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < mu.grid().nx; ++i) {
        const double d = um.values[i] - un.values[i];
        if (d > worst_val) {
            worst_val = d;
            worst = i;
        }
    }
    v.violation = worst_val;
    if (worst_val > t) {
        v.ordered = false;
        v.reason = OrderVerdict::Reason::potential;
        v.witness_x = mu.grid().x(worst);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Barycenter and its right-continuous inverse

/// b(x) = E[X | X >= x], capped at the essential supremum where the upper
/// tail is empty; beta(y) = sup{x : b(x) <= y}.
class Barycenter {
public:
    Barycenter() = default;
    Barycenter(const GridSpec& grid, std::vector<double> b) : grid_(grid), b_(std::move(b)) {
        beta_.resize(grid_.nx);
        for (int i = 0; i < grid_.nx; ++i) beta_[i] = beta(grid_.x(i));
    }

    const GridSpec& grid() const { return grid_; }
    std::span<const double> b_values() const { return b_; }
    std::span<const double> beta_values() const { return beta_; }

    double b(double x) const { return interp_nodes(grid_, b_, x); }

    /// Generalized inverse evaluated at any y. Between adjacent nodes where b
    /// increases continuously (step below kJumpCells * dx) the inverse is
    /// interpolated linearly; across jumps it stays at the left node.
    double beta(double y) const {
        const auto it = std::upper_bound(b_.begin(), b_.end(), y);
        if (it == b_.begin()) return grid_.x_min;
        const int k = static_cast<int>(it - b_.begin()) - 1;
        if (k == grid_.nx - 1) return grid_.x_max;
        const double step = b_[k + 1] - b_[k];
        if (step > 0.0 && step <= kJumpCells * grid_.dx())
            return grid_.x(k) + (y - b_[k]) / step * grid_.dx();
        return grid_.x(k);
    }

    static constexpr double kJumpCells = 5.0;

private:
    GridSpec grid_;
    std::vector<double> b_;
    std::vector<double> beta_;
};

inline Barycenter barycenter(const GridMeasure& mu) {
    const auto& g = mu.grid();
    const double top = mu.ess_sup();
    std::vector<double> b(g.nx);
    // tail sums from the right; atoms are merged in by location
    const auto& atoms = mu.atoms();
    int ai = static_cast<int>(atoms.size()) - 1;
    double tail_mass = 0.0, tail_moment = 0.0;
    // nodal mass is spread over its cell, as in cdf(): only the upper half
    // of node i lies at or above x_i, with mean x_i + dx / 4
    for (int i = g.nx - 1; i >= 0; --i) {
        const double xi = g.x(i), mi = mu.node_mass()[i];
        while (ai >= 0 && atoms[ai].x >= xi - 1e-12) {
            tail_mass += atoms[ai].mass;
            tail_moment += atoms[ai].mass * atoms[ai].x;
            --ai;
        }
        const double mass = tail_mass + 0.5 * mi, moment = tail_moment + 0.5 * mi * (xi + 0.25 * g.dx());
        b[i] = mass > 1e-300 ? std::min(moment / mass, top) : top;
        tail_mass += mi;
        tail_moment += mi * xi;
    }
    for (int i = 1; i < g.nx; ++i) b[i] = std::max(b[i], b[i - 1]);
    return Barycenter(g, std::move(b));
}

// ---------------------------------------------------------------------------
// CSV I/O
//
//   #atoms
//   x,mass
//   ...
//   #density
//   x,density
//   ...

inline void write_measure_csv(const std::string& path, const GridMeasure& mu) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.precision(17);
    out << "#atoms\nx,mass\n";
    for (const auto& a : mu.atoms()) out << a.x << ',' << a.mass << '\n';
    out << "#density\nx,density\n";
    const auto& g = mu.grid();
    for (int i = 0; i < g.nx; ++i) out << g.x(i) << ',' << mu.node_mass()[i] / g.dx() << '\n';
}

/// Reads a measure file onto `grid`. Density rows are linearly interpolated
/// onto the grid nodes (zero outside their range); the result is normalized.
inline GridMeasure read_measure_csv(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open measure file " + path);
    enum class Section { none, atoms, density } section = Section::none;
    std::vector<Atom> atoms;
    std::vector<std::pair<double, double>> dens;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "#atoms") {
            section = Section::atoms;
            continue;
        }
        if (line == "#density") {
            section = Section::density;
            continue;
        }
        if (line.rfind("x,", 0) == 0) continue;  // column header
        const auto comma = line.find(',');
        if (section == Section::none || comma == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unexpected line '" + line + "'");
        double a = 0.0, b = 0.0;
        try {
            a = std::stod(line.substr(0, comma));
            b = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (b < 0.0) throw ConfigError(path + ":" + std::to_string(lineno) + ": negative mass or density");
        if (section == Section::atoms) {
            detail::require_inside(grid, a, "atom");
            atoms.push_back({a, b});
        } else {
            dens.emplace_back(a, b);
        }
    }
    std::sort(dens.begin(), dens.end());
    std::vector<double> mass(grid.nx, 0.0);
    if (dens.size() >= 2) {
        if (dens.front().first < grid.x_min - 1e-9 * grid.dx() || dens.back().first > grid.x_max + 1e-9 * grid.dx())
            throw ConfigError("density rows in " + path + " extend beyond the grid");
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i);
            if (x < dens.front().first || x > dens.back().first) continue;
            auto hi = std::lower_bound(dens.begin(), dens.end(), std::make_pair(x, -1.0));
            if (hi == dens.begin()) {
                mass[i] = hi->second * grid.dx();
                continue;
            }
            auto lo = hi - 1;
            if (hi == dens.end()) hi = lo;
            const double span = hi->first - lo->first;
            const double w = span > 0 ? (x - lo->first) / span : 0.0;
            mass[i] = ((1 - w) * lo->second + w * hi->second) * grid.dx();
        }
    }
    GridMeasure mu(grid, std::move(mass), std::move(atoms));
    return mu.normalized();
}

}  // namespace consep

#endif  // CONSEP_MEASURES_HPP
