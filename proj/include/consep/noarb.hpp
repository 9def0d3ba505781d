#ifndef CONSEP_NOARB_HPP
#define CONSEP_NOARB_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "consep/barrier.hpp"
#include "consep/measures.hpp"
#include "consep/optstop.hpp"

namespace consep {

/// Outcome of a feasibility test. `strength` says whether passing the test
/// settles feasibility ("iff") or only fails to rule it out ("necessary").
/// A witness is present exactly when the instance is rejected.
struct FeasibilityVerdict {
    bool feasible = true;
    std::string rule;
    std::string strength = "iff";
    std::optional<double> witness_x;
    std::optional<double> witness_t;
    std::string detail;
};

namespace detail {

inline FeasibilityVerdict from_order(const OrderVerdict& o, std::string rule, std::string strength,
                                     const GridSpec& g) {
    FeasibilityVerdict v{o.ordered, std::move(rule), std::move(strength)};
    if (o.ordered) return v;
    std::ostringstream msg;
    if (o.reason == OrderVerdict::Reason::mean) {
        v.witness_x = g.s0;
        msg << "means differ by " << o.violation;
    } else {
        v.witness_x = o.witness_x;
        msg << "potential ordering fails by " << o.violation << " at x = " << o.witness_x;
    }
    v.detail = msg.str();
    return v;
}

}  // namespace detail

/// Lower-time clock only: a calibrated model exists iff nu <= mu in convex order.
inline FeasibilityVerdict check_lambda2(const GridMeasure& nu, const GridMeasure& mu) {
    return detail::from_order(convex_order(nu, mu), "lambda2_convex_order", "iff", mu.grid());
}

/// Two-sided clock nu <= mu <= mubar: both orderings are required, neither
/// is known to suffice.
inline FeasibilityVerdict check_lambda3(const GridMeasure& nu, const GridMeasure& mu, const GridMeasure& mubar) {
    auto first = detail::from_order(convex_order(nu, mu), "lambda3_lower_order", "necessary", mu.grid());
    if (!first.feasible) return first;
    auto second = detail::from_order(convex_order(mu, mubar), "lambda3_upper_order", "necessary", mu.grid());
    if (!second.feasible) return second;
    return {true, "lambda3_convex_order", "necessary"};
}

/// Drawdown-type constraint B_t >= h(running max): the Azema-Yor rule is
/// admissible iff h <= beta on [s0, inf). Checked at grid nodes x >= s0 with
/// tolerance 2 dx for the interpolated inverse; the witness is the first
/// violating node.
inline FeasibilityVerdict check_ay(const std::function<double(double)>& h, const GridMeasure& mu,
                                   std::optional<double> tol = std::nullopt) {
    const GridSpec& g = mu.grid();
    const auto bc = barycenter(mu);
    const double t = tol.value_or(2.0 * g.dx());
    FeasibilityVerdict v{true, "azema_yor_inverse_barycenter", "iff"};
    for (int i = g.s0_node(); i < g.nx; ++i) {
        const double x = g.x(i);
        const double hv = h(x), bv = bc.beta(x);
        if (hv > bv + t) {
            v.feasible = false;
            v.witness_x = x;
            std::ostringstream msg;
            msg << "h(" << x << ") = " << hv << " exceeds beta = " << bv;
            v.detail = msg.str();
            break;
        }
    }
    return v;
}

/// Upper information barrier B: the bounded-time embedding exists iff the
/// unconstrained Root barrier of mu contains B, i.e. B(x) >= R_mu(x) - 3 dt
/// at every node. The witness is the violating node nearest s0.
inline FeasibilityVerdict check_root_inclusion(const Barrier& info, const GridMeasure& mu,
                                               const SolverParams& params = {},
                                               std::optional<double> tol_t = std::nullopt) {
    const GridSpec& g = mu.grid();
    if (!(info.grid() == g)) throw ConfigError("check_root_inclusion: barrier and measure grids differ");
    const auto root = solve_constrained(ZeroStop{}, mu, params);
    const double t = tol_t.value_or(3.0 * g.dt());
    FeasibilityVerdict v{true, "root_barrier_inclusion", "iff"};
    const int s = g.s0_node();
    int best = -1;
    for (int i = 0; i < g.nx; ++i) {
        const double b = info.R(i), r = root.barrier().R(i);
        const bool bad = std::isinf(r) ? !std::isinf(b) : b < r - t;
        if (bad && (best < 0 || std::abs(i - s) < std::abs(best - s))) best = i;
    }
    if (best >= 0) {
        v.feasible = false;
        v.witness_x = g.x(best);
        v.witness_t = info.R(best);
        std::ostringstream msg;
        msg << "information barrier B(" << g.x(best) << ") = " << info.R(best)
            << " lies before the Root barrier R = " << root.barrier().R(best);
        v.detail = msg.str();
    }
    return v;
}

}  // namespace consep

#endif  // CONSEP_NOARB_HPP
