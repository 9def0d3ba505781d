#ifndef CONSEP_MC_HPP
#define CONSEP_MC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "consep/barrier.hpp"
#include "consep/error.hpp"
#include "consep/hedge.hpp"
#include "consep/measures.hpp"
#include "consep/random.hpp"
#include "consep/stopping.hpp"

namespace consep {

struct PathConfig {
    long n_paths = 100000;
    double dt_sim = 1e-3;
    std::uint64_t seed = 20240917;
    bool antithetic = false;
    int threads = 1;
    double t_horizon = 0.0;  ///< simulation cutoff; 0 means the grid's t_max

    void validate(const GridSpec& g) const {
        if (n_paths < 1) throw ConfigError("mc.n_paths must be positive");
        if (!(dt_sim > 0.0) || dt_sim > g.dt() * (1 + 1e-12)) throw ConfigError("mc.dt_sim must lie in (0, grid dt]");
        if (threads < 1) throw ConfigError("mc.threads must be positive");
        if (t_horizon < 0.0) throw ConfigError("mc.t_horizon must be nonnegative");
    }
    double horizon(const GridSpec& g) const { return t_horizon > 0.0 ? t_horizon : g.t_max; }
};

/// One simulated path. The hedge fields are filled only when a hedge
/// package is passed to simulate().
struct PathSample {
    double tau_lower = 0.0;
    double b_lower = 0.0;
    double tau = 0.0;
    double b_tau = 0.0;
    bool killed = false;
    bool stopped = true;
    double gains_pre = 0.0;   ///< int alpha dB plus the compensated clock jump, on [0, tau_lower]
    double gains_post = 0.0;  ///< int delta dB on [tau_lower, tau]
};

struct SimResult {
    PathConfig cfg;
    std::vector<PathSample> paths;
    long unstopped = 0;
    long order_violations = 0;           ///< paths with tau < tau_lower
    std::vector<double> last_continue;  ///< per grid cell: latest time a path moved on from it after tau_lower

    double mean_tau() const {
        double s = 0.0;
        for (const auto& p : paths) s += p.tau;
        return s / paths.size();
    }
    double se_tau() const { return std_error([](const PathSample& p) { return p.tau; }); }

    template <class Fn>
    double mean(Fn fn) const {
        double s = 0.0;
        for (const auto& p : paths) s += fn(p);
        return s / paths.size();
    }
    template <class Fn>
    double std_error(Fn fn) const {
        const double m = mean(fn);
        double s = 0.0;
        for (const auto& p : paths) s += (fn(p) - m) * (fn(p) - m);
        const double n = static_cast<double>(paths.size());
        return n > 1 ? std::sqrt(s / (n - 1) / n) : 0.0;
    }
};

/// Continuation set {x : R(x) > t} of a barrier at every simulation level
/// t_k = k h, as sorted open intervals, with R read through
/// Barrier::envelope (flat beyond the grid).
class ContinuationTable {
public:
    ContinuationTable(const Barrier& b, double h, int levels) : h_(h), comps_(levels) {
        const GridSpec& g = b.grid();
        const auto r = b.times();
        for (int k = 0; k < levels; ++k) {
            const double t = k * h;
            auto& out = comps_[k];
            auto push = [&](double l, double rr, bool joins) {
                if (joins && !out.empty() && out.back().second == l)
                    out.back().second = rr;
                else
                    out.emplace_back(l, rr);
            };
            for (int i = 0; i + 1 < g.nx; ++i)
                if (r[i] > t || r[i + 1] > t) push(g.x(i), g.x(i + 1), r[i] > t);
            if (!out.empty()) {
                if (r[0] > t && out.front().first == g.x_min) out.front().first = -kInf;
                if (r[g.nx - 1] > t && out.back().second == g.x_max) out.back().second = kInf;
            }
        }
    }

    int levels() const { return static_cast<int>(comps_.size()); }
    double h() const { return h_; }

    /// Open component of level k containing x, if any.
    std::optional<std::pair<double, double>> component(int k, double x) const {
        const auto& c = comps_[k];
        auto it = std::upper_bound(c.begin(), c.end(), x, [](double v, const auto& p) { return v < p.second; });
        if (it == c.end() || !(x > it->first)) return std::nullopt;
        return *it;
    }

private:
    double h_;
    std::vector<std::vector<std::pair<double, double>>> comps_;
};

namespace detail {

struct Hit {
    double t, x;
    bool hit;
};

/// Per-path random sources: normals, exponential clock, bridge uniforms.
struct PathRng {
    PathStream normal, clock, bridge;
    double sign;
    PathRng(const PathConfig& cfg, long path)
        : normal(cfg.seed, cfg.antithetic ? path / 2 : path, 0),
          clock(cfg.seed, cfg.antithetic ? path / 2 : path, 1),
          bridge(cfg.seed, cfg.antithetic ? path / 2 : path, 2),
          sign(cfg.antithetic && (path & 1) ? -1.0 : 1.0) {}
    double dW(double dt) { return sign * std::sqrt(dt) * normal.normal(); }
};

inline double bridge_cross_prob(double x0, double x1, double level, double dt) {
    if (std::isinf(level)) return 0.0;
    return std::exp(-2.0 * (x0 - level) * (x1 - level) / dt);
}

/// Runs Brownian motion from (t, x) until it enters the barrier or reaches
/// t_end. Steps end on the levels k h (the first one may be partial). A step
/// stops the path when the start point has left the continuation set at the
/// step's end level (the barrier arrived under it: stopped in place at
/// R(x)), when the end point leaves the start point's component, or when the
/// Brownian bridge crosses a component end. `on_move(t0, x0, t1, x1)` sees
/// every displacement, the final one included.
template <class OnMove>
Hit run_to_barrier(const ContinuationTable& tab, const Barrier& b, double t, double x, double t_end, PathRng& rng,
                   OnMove&& on_move) {
    const double h = tab.h();
    if (t >= b.envelope(x)) return {t, x, true};
    while (t < t_end) {
        int k = static_cast<int>(std::floor(t / h + 1e-9)) + 1;
        if (k >= tab.levels()) return {t, x, false};
        const double t1 = std::min(k * h, t_end);
        const double dt = t1 - t;
        if (dt <= 0.0) break;
        const auto comp = tab.component(k, x);
        if (!comp) {
            const double ts = std::clamp(b.envelope(x), t, t1);
            return {ts, x, true};
        }
        const auto [lo, hi] = *comp;
        const double x1 = x + rng.dW(dt);
        if (x1 <= lo || x1 >= hi) {
            const double xs = x1 <= lo ? lo : hi;
            on_move(t, x, t1, xs);
            return {t1, xs, true};
        }
        const double plo = bridge_cross_prob(x, x1, lo, dt), phi = bridge_cross_prob(x, x1, hi, dt);
        const double u = rng.bridge.uniform();
        if (u < plo + phi - plo * phi) {
            const double xs = u < plo ? lo : hi;
            on_move(t, x, t1, xs);
            return {t1, xs, true};
        }
        on_move(t, x, t1, x1);
        t = t1;
        x = x1;
    }
    return {t, x, false};
}

/// Calls fn(path, worker) for every path. Workers own contiguous blocks of
/// path indices; anything written per path is independent of the split.
template <class Fn>
void parallel_paths(long n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (long p = 0; p < n; ++p) fn(p, 0);
        return;
    }
    std::vector<std::thread> pool;
    const long chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const long lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, w, &fn] {
            for (long p = lo; p < hi; ++p) fn(p, w);
        });
    }
    for (auto& th : pool) th.join();
}

inline int level_count(double horizon, double h) { return static_cast<int>(std::ceil(horizon / h - 1e-9)) + 2; }

}  // namespace detail

/// Information clock on its own: for each path, tau_lower and B there.
/// Paths whose clock has not rung by `t_end` report stopped = false and the
/// position at t_end, so B_{t ^ tau_lower} is available for any t.
inline std::vector<PathSample> simulate_information(const StoppingSpec& spec, const GridSpec& g, const PathConfig& cfg,
                                                    std::optional<double> t_end = std::nullopt) {
    cfg.validate(g);
    const double horizon = t_end.value_or(cfg.horizon(g));
    const double h = cfg.dt_sim;
    std::vector<PathSample> out(cfg.n_paths);
    std::optional<ContinuationTable> tab;
    Barrier bar(g);
    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, IntervalExitStop>)
                bar = Barrier::interval(g, g.x(g.node_of(st.a)), g.x(g.node_of(st.b)));
            else if constexpr (std::is_same_v<T, BarrierStop>)
                bar = st.barrier;
        },
        spec);
    tab.emplace(bar, h, detail::level_count(horizon, h));
    detail::parallel_paths(cfg.n_paths, cfg.threads, [&](long p, int) {
        detail::PathRng rng(cfg, p);
        PathSample& s = out[p];
        s.b_lower = g.s0;
        std::visit(
            [&](const auto& st) {
                using T = std::decay_t<decltype(st)>;
                auto none = [](double, double, double, double) {};
                if constexpr (std::is_same_v<T, ZeroStop>) {
                    s.tau_lower = 0.0;
                } else if constexpr (std::is_same_v<T, FixedTimeStop>) {
                    const auto r = detail::run_to_barrier(*tab, bar, 0.0, g.s0, std::min(st.t0, horizon), rng, none);
                    s.tau_lower = r.t;
                    s.b_lower = r.x;
                    s.stopped = st.t0 <= horizon;
                } else if constexpr (std::is_same_v<T, IntervalExitStop>) {
                    const double e = st.rho > 0.0 ? rng.clock.exponential(st.rho) : kInf;
                    const auto r = detail::run_to_barrier(*tab, bar, 0.0, g.s0, std::min(e, horizon), rng, none);
                    s.tau_lower = r.t;
                    s.b_lower = r.x;
                    s.killed = !r.hit && e <= horizon;
                    s.stopped = r.hit || s.killed;
                } else {
                    const auto r = detail::run_to_barrier(*tab, bar, 0.0, g.s0, horizon, rng, none);
                    s.tau_lower = r.t;
                    s.b_lower = r.x;
                    s.stopped = r.hit;
                }
            },
            spec);
        s.tau = s.tau_lower;
        s.b_tau = s.b_lower;
    });
    return out;
}

/// Simulates tau_lower and then tau = inf{t >= tau_lower : t >= R(B_t)}.
/// Randomness per path depends only on (seed, path index), so results do
/// not depend on the thread count. With a hedge package, the dynamic
/// trading gains are accumulated along the way: before tau_lower the
/// martingale g(t, B_t) plus its compensated jump h - g at a clock kill,
/// after it the delta of h.
inline SimResult simulate(const StoppingSpec& spec, const Barrier& barrier, const PathConfig& cfg,
                          const HedgePackage* hedge = nullptr) {
    const GridSpec& g = barrier.grid();
    cfg.validate(g);
    const double horizon = cfg.horizon(g);
    const double h = cfg.dt_sim;
    const int levels = detail::level_count(horizon, h);
    const ContinuationTable target(barrier, h, levels);

    Barrier info(g);
    double rho = 0.0;
    std::optional<double> fixed;
    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, IntervalExitStop>) {
                info = Barrier::interval(g, g.x(g.node_of(st.a)), g.x(g.node_of(st.b)));
                rho = st.rho;
            } else if constexpr (std::is_same_v<T, BarrierStop>) {
                info = st.barrier;
            } else if constexpr (std::is_same_v<T, FixedTimeStop>) {
                fixed = st.t0;
            } else {
                fixed = 0.0;
            }
        },
        spec);
    const ContinuationTable pre(info, h, levels);
    const bool with_pre_hedge = hedge && !hedge->ratios.partial;

    SimResult res{cfg, std::vector<PathSample>(cfg.n_paths)};
    std::vector<std::vector<double>> last(cfg.threads, std::vector<double>(g.nx - 1, -kInf));

    detail::parallel_paths(cfg.n_paths, cfg.threads, [&](long p, int worker) {
        detail::PathRng rng(cfg, p);
        PathSample& s = res.paths[p];
        auto pre_move = [&](double t0, double x0, double t1, double x1) {
            if (!with_pre_hedge) return;
            const auto& r = hedge->ratios;
            s.gains_pre += r.alpha.interp(t0, x0) * (x1 - x0);
            if (rho > 0.0) s.gains_pre -= rho * (hedge->h.interp(t0, x0) - r.g.interp(t0, x0)) * (t1 - t0);
        };
        detail::Hit first;
        if (fixed) {
            first = *fixed > 0.0 ? detail::run_to_barrier(pre, info, 0.0, g.s0, std::min(*fixed, horizon), rng, pre_move)
                                 : detail::Hit{0.0, g.s0, true};
            first.hit = *fixed <= horizon;
        } else {
            const double e = rho > 0.0 ? rng.clock.exponential(rho) : kInf;
            first = detail::run_to_barrier(pre, info, 0.0, g.s0, std::min(e, horizon), rng, pre_move);
            if (!first.hit && e <= horizon) {
                first.hit = true;
                s.killed = true;
                if (with_pre_hedge)
                    s.gains_pre += hedge->h.interp(first.t, first.x) - hedge->ratios.g.interp(first.t, first.x);
            }
        }
        s.tau_lower = first.t;
        s.b_lower = first.x;
        if (!first.hit) {
            s.stopped = false;
            s.tau = first.t;
            s.b_tau = first.x;
            return;
        }
        auto post_move = [&](double t0, double x0, double, double x1) {
            if (hedge) s.gains_post += hedge->ratios.delta.interp(t0, x0) * (x1 - x0);
            if (x0 > g.x_min && x0 < g.x_max) {
                double& l = last[worker][g.cell_of(x0)];
                l = std::max(l, t0);
            }
        };
        const auto second = detail::run_to_barrier(target, barrier, first.t, first.x, horizon, rng, post_move);
        s.tau = second.t;
        s.b_tau = second.x;
        s.stopped = second.hit;
    });

    for (const auto& s : res.paths) {
        if (!s.stopped) ++res.unstopped;
        if (s.tau < s.tau_lower) ++res.order_violations;
    }
    res.last_continue.assign(g.nx - 1, -kInf);
    for (const auto& l : last)
        for (int i = 0; i < g.nx - 1; ++i) res.last_continue[i] = std::max(res.last_continue[i], l[i]);
    if (res.unstopped > cfg.n_paths / 1000) {
        std::ostringstream msg;
        msg << res.unstopped << " of " << cfg.n_paths << " paths unstopped at the simulation horizon " << horizon;
        throw HorizonError(msg.str());
    }
    return res;
}

/// Azema-Yor rule: stop at the first t with B_t <= beta(max_{s<=t} B_s), or
/// when the running maximum reaches the top of the support. The running
/// maximum over a step is sampled exactly from the Brownian bridge law; a
/// dip below the floor inside the step is caught with the bridge crossing
/// probability against the floor at the step's new maximum.
inline SimResult simulate_ay(const GridMeasure& mu, const PathConfig& cfg) {
    const GridSpec& g = mu.grid();
    cfg.validate(g);
    const double horizon = cfg.horizon(g);
    const double h = cfg.dt_sim;
    const auto bc = barycenter(mu);
    const double top = mu.ess_sup();
    SimResult res{cfg, std::vector<PathSample>(cfg.n_paths)};
    detail::parallel_paths(cfg.n_paths, cfg.threads, [&](long p, int) {
        detail::PathRng rng(cfg, p);
        PathSample& s = res.paths[p];
        s.b_lower = g.s0;
        double t = 0.0, x = g.s0, m = g.s0;
        auto done = [&](double tt, double xx) {
            s.tau = tt;
            s.b_tau = xx;
        };
        if (m >= top || x <= bc.beta(m)) return done(0.0, x);
        while (true) {
            if (t >= horizon) {
                s.stopped = false;
                return done(t, x);
            }
            const double dt = std::min(h, horizon - t);
            const double x1 = x + rng.dW(dt);
            const double u = rng.bridge.uniform();
            const double d = x1 - x;
            const double step_max = 0.5 * (x + x1 + std::sqrt(d * d - 2.0 * dt * std::log(u)));
            t += dt;
            if (step_max >= top) return done(t, top);
            m = std::max(m, step_max);
            const double floor = bc.beta(m);
            if (x1 <= floor) return done(t, floor);
            // the bridge may dip below the floor inside the step
            if (x > floor && rng.bridge.uniform() < detail::bridge_cross_prob(x, x1, floor, dt)) return done(t, floor);
            x = x1;
        }
    });
    for (const auto& s : res.paths)
        if (!s.stopped) ++res.unstopped;
    if (res.unstopped > cfg.n_paths / 1000) {
        std::ostringstream msg;
        msg << res.unstopped << " of " << cfg.n_paths << " Azema-Yor paths unstopped at " << horizon;
        throw HorizonError(msg.str());
    }
    return res;
}

// ---------------------------------------------------------------------------
// Checks on simulated paths

struct EmbeddingDistance {
    double ks = 0.0;            ///< plain Kolmogorov-Smirnov distance
    double ks_cell = 0.0;       ///< KS distance allowing a one-cell horizontal shift
    double potential_gap = 0.0; ///< max over nodes of |empirical potential - u_mu|
    double potential_se = 0.0;  ///< standard error of the empirical potential at the worst node
    double ks_threshold = 0.0;
    double potential_threshold = 0.0;
    bool passes() const { return ks_cell <= ks_threshold && potential_gap <= potential_threshold; }
};

/// Distance of the law of B_tau from mu. A continuous path cannot land on an
/// atom placed at a node once the barrier is interpolated across the
/// neighbouring cell, so the pass test uses the KS distance up to a one-cell
/// horizontal shift; the plain value is reported alongside.
/// Thresholds: KS 3 / sqrt(n) + 2 dx; potential 3 SE + 10 dx^2 + dx * (atom
/// mass) for the same smearing.
inline EmbeddingDistance verify_embedding(const SimResult& res, const GridMeasure& mu) {
    const GridSpec& g = mu.grid();
    std::vector<double> b;
    b.reserve(res.paths.size());
    for (const auto& p : res.paths) b.push_back(p.b_tau);
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(b.size());
    const double dx = g.dx();
    EmbeddingDistance d;
    for (std::size_t k = 0; k < b.size();) {
        std::size_t j = k;
        while (j < b.size() && b[j] == b[k]) ++j;
        const double below = k / n, upto = j / n, x = b[k];
        d.ks = std::max({d.ks, std::abs(upto - mu.cdf(x)), std::abs(mu.cdf_left(x) - below)});
        d.ks_cell = std::max({d.ks_cell, upto - mu.cdf(x + dx), mu.cdf_left(x - dx) - below});
        k = j;
    }
    const auto um = potential(mu);
    double worst = -1.0;
    int wi = 0;
    for (int i = 0; i < g.nx; ++i) {
        double s = 0.0;
        for (double v : b) s += std::abs(v - g.x(i));
        const double gap = std::abs(-s / n - um.values[i]);
        if (gap > worst) {
            worst = gap;
            wi = i;
        }
    }
    double m = 0.0, m2 = 0.0;
    for (double v : b) {
        const double a = std::abs(v - g.x(wi));
        m += a;
        m2 += a * a;
    }
    m /= n;
    d.potential_gap = worst;
    d.potential_se = std::sqrt(std::max(m2 / n - m * m, 0.0) / n);
    double atom_mass = 0.0;
    for (const auto& a : mu.atoms()) atom_mass += a.mass;
    d.ks_threshold = 3.0 / std::sqrt(n) + 2.0 * dx;
    d.potential_threshold = 3.0 * d.potential_se + 10.0 * dx * dx + dx * atom_mass;
    return d;
}

struct PrimalEstimate {
    double mean = 0.0;
    double se = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  ///< 99% normal interval
};

inline PrimalEstimate primal_estimate(const SimResult& res, const Payoff& payoff) {
    PrimalEstimate e;
    auto fn = [&](const PathSample& p) { return payoff.F(p.tau); };
    e.mean = res.mean(fn);
    e.se = res.std_error(fn);
    e.ci_lo = e.mean - 2.576 * e.se;
    e.ci_hi = e.mean + 2.576 * e.se;
    return e;
}

struct SubhedgeReport {
    long violations = 0;
    double rate = 0.0;
    double worst = 0.0;  ///< largest lambda + h - F seen
    double tolerance = 0.0;
    bool passes() const { return rate <= 1e-3; }
};

/// Counts paths with F(tau) < lambda(B_tau) + h(tau, B_tau) - eps_num.
/// `lambda_shift` adds a constant to lambda, for sensitivity controls.
inline SubhedgeReport pathwise_subhedge_check(const SimResult& res, const HedgePackage& pkg,
                                              double lambda_shift = 0.0) {
    SubhedgeReport r;
    r.tolerance = pkg.eps_num;
    r.worst = -kInf;
    for (const auto& p : res.paths) {
        const double excess =
            pkg.lambda_at(p.b_tau) + lambda_shift + pkg.h_at(p.tau, p.b_tau) - pkg.payoff.F(p.tau);
        r.worst = std::max(r.worst, excess);
        if (excess > pkg.eps_num) ++r.violations;
    }
    r.rate = static_cast<double>(r.violations) / res.paths.size();
    return r;
}

struct SupportReport {
    int bad_cells = 0;
    double worst_x = 0.0;      ///< centre of the worst cell
    double worst_depth = 0.0;  ///< how far past the barrier a path still moved there
    bool passes() const { return bad_cells == 0; }
};

/// Stopped and moving points must be separated by the barrier: no path may
/// move on from a cell more than one grid step after both of the cell's
/// nodes have entered the stopping region.
inline SupportReport barrier_support_check(const SimResult& res, const Barrier& barrier) {
    const GridSpec& g = barrier.grid();
    if (static_cast<int>(res.last_continue.size()) != g.nx - 1)
        throw ConfigError("barrier_support_check: simulation ran on another grid");
    SupportReport r;
    for (int i = 0; i + 1 < g.nx; ++i) {
        const double depth = res.last_continue[i] - std::max(barrier.R(i), barrier.R(i + 1));
        if (depth > g.dt()) {
            ++r.bad_cells;
            if (depth > r.worst_depth) {
                r.worst_depth = depth;
                r.worst_x = g.x(i) + 0.5 * g.dx();
            }
        }
    }
    return r;
}

struct MartingaleReport {
    double mean = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool passes = false;
};

/// E[h(tau, B_tau) - h(tau_lower, B_tau_lower)] = 0 up to 3 standard
/// errors plus `band` for discretization.
inline MartingaleReport h_martingale_check(const SimResult& res, const HedgePackage& pkg, double band = 0.0) {
    auto fn = [&](const PathSample& p) { return pkg.h_at(p.tau, p.b_tau) - pkg.h_at(p.tau_lower, p.b_lower); };
    MartingaleReport r{res.mean(fn), res.std_error(fn)};
    r.bound = 3.0 * r.se + band;
    r.passes = std::abs(r.mean) <= r.bound;
    return r;
}

/// E[h(tau_lower, B_tau_lower) - h(0, s0)] >= -3 standard errors.
inline MartingaleReport h_submartingale_check(const SimResult& res, const HedgePackage& pkg) {
    const double h0 = pkg.h_at(0.0, pkg.h.grid().s0);
    auto fn = [&](const PathSample& p) { return pkg.h_at(p.tau_lower, p.b_lower) - h0; };
    MartingaleReport r{res.mean(fn), res.std_error(fn)};
    r.bound = 3.0 * r.se;
    r.passes = r.mean >= -r.bound;
    return r;
}

struct SelfFinancingReport {
    double mean_error = 0.0;  ///< E[wealth - F(tau)]
    double se = 0.0;
    double rms_error = 0.0;
    double bound = 0.0;
    bool passes = false;
};

/// Terminal wealth M0 + pre-information gains + post-information gains +
/// lambda(B_tau) against F(tau), on paths simulated with the hedge package.
inline SelfFinancingReport self_financing_check(const SimResult& res, const HedgePackage& pkg, double band) {
    auto err = [&](const PathSample& p) {
        return pkg.price.M0 + p.gains_pre + p.gains_post + pkg.lambda_at(p.b_tau) - pkg.payoff.F(p.tau);
    };
    SelfFinancingReport r;
    r.mean_error = res.mean(err);
    r.se = res.std_error(err);
    r.rms_error = std::sqrt(res.mean([&](const PathSample& p) { return err(p) * err(p); }));
    r.bound = 3.0 * r.se + band;
    r.passes = std::abs(r.mean_error) <= r.bound;
    return r;
}

}  // namespace consep

#endif  // CONSEP_MC_HPP
