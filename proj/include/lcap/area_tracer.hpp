#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "lcap/error.hpp"
#include "lcap/geometry.hpp"
#include "lcap/sir_field.hpp"

namespace lcap {

/// Step control for the boundary tracer. Zero dt / closure_tol mean
/// "derive from the seed": dt = r0 / 100, closure_tol = dt.
struct TracerConfig {
    double dt = 0.0;
    std::size_t max_steps = 1'000'000;
    double closure_tol = 0.0;
    double newton_tol = 1e-10;
    int newton_max_iters = 50;
    bool corrector_enabled = true;
    double auto_dt_fraction = 0.01;
    /// Ray along which the seed is searched; defaults to the nearest interferer.
    std::optional<Point> seed_direction;

    void validate() const {
        require(dt >= 0.0 && std::isfinite(dt), "dt must be non-negative");
        require(closure_tol >= 0.0, "closure tolerance must be non-negative");
        require(max_steps >= 100, "max_steps must be at least 100");
        require(newton_tol > 0.0, "newton tolerance must be positive");
        require(newton_max_iters >= 1, "newton_max_iters must be positive");
        require(auto_dt_fraction > 0.0, "auto dt fraction must be positive");
        if (dt > 0.0 && closure_tol > 0.0) require(closure_tol >= 0.5 * dt, "closure tolerance must be at least dt/2");
    }
};

/// Closed polyline approximating the reception boundary of one transmitter.
struct BoundaryTrace {
    std::vector<Point> vertices;
    Point center{};                 ///< position of the traced transmitter
    double area = 0.0;              ///< shoelace area of the closed polygon
    double dot_area = 0.0;          ///< tangent-stepping quadrature, cross-check only
    bool closed = false;
    std::size_t steps = 0;
    double dt = 0.0;
    double closure_tol = 0.0;
    double max_level_residual = 0.0; ///< max |S - K| / K over vertices
};

namespace detail {

inline Point unit(Point v) { return v / norm(v); }

inline Point seed_ray(const FieldContext& ctx, std::size_t i, const TracerConfig& cfg, double& reach) {
    const auto [j, dist] = ctx.nearest_interferer(i);
    reach = dist;
    if (cfg.seed_direction) {
        require(norm(*cfg.seed_direction) > 0.0, "seed direction must be non-zero");
        return unit(*cfg.seed_direction);
    }
    return unit(ctx.points()[j] - ctx.points()[i]);
}

} // namespace detail

/// Point on the ray from z_i towards its nearest interferer where S_i = K,
/// by Newton iteration on ln S started from the single-interferer solution
/// r0 = D / (1 + K^(1/alpha)).
inline Point newton_seed(const FieldContext& ctx, std::size_t i, const TracerConfig& cfg = {}) {
    cfg.validate();
    ctx.check_index(i);
    require(ctx.size() >= 2, "seeding needs at least two transmitters");
    const double K = ctx.params().K;
    double reach = 0.0;
    const Point u = detail::seed_ray(ctx, i, cfg, reach);
    const Point zi = ctx.points()[i];

    double r = reach / (1.0 + std::pow(K, 1.0 / ctx.params().alpha));
    for (int it = 0; it <= cfg.newton_max_iters; ++it) {
        const FieldSample s = ctx.evaluate(i, zi + r * u);
        if (s.singular || s.at_transmitter || !(s.sir > 0.0)) break;
        if (std::abs(s.sir - K) <= cfg.newton_tol * K) return zi + r * u;
        const double slope = dot(s.gradient, u) / s.sir; // d ln S / dr
        if (!(slope < 0.0)) break;
        r -= (std::log(s.sir) - std::log(K)) / slope;
        if (!(r > 0.0) || (!cfg.seed_direction && r >= reach)) break;
    }
    throw Error(ErrorKind::seed_failure, "Newton seed did not converge");
}

/// Bracketed fallback for newton_seed: bisection on ln S - ln K along the ray.
inline Point bisect_seed(const FieldContext& ctx, std::size_t i, const TracerConfig& cfg = {}) {
    ctx.check_index(i);
    require(ctx.size() >= 2, "seeding needs at least two transmitters");
    const double K = ctx.params().K;
    double reach = 0.0;
    const Point u = detail::seed_ray(ctx, i, cfg, reach);
    const Point zi = ctx.points()[i];
    double lo = 0.0, hi = reach;
    for (int grow = 0; ctx.sir(i, zi + hi * u) >= K; ++grow) {
        if (grow > 60) throw Error(ErrorKind::seed_failure, "seed ray never leaves the reception area");
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = ctx.sir(i, zi + mid * u);
        if (std::abs(s - K) <= cfg.newton_tol * K) return zi + mid * u;
        (s >= K ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * hi) return zi + mid * u;
    }
    return zi + 0.5 * (lo + hi) * u;
}

/// (1/2)|sum det(z_k - z_i, z_{k+1} - z_k)| over the closed polygon.
inline double area_from_trace(const BoundaryTrace& trace, Point zi) {
    if (!trace.closed) throw Error(ErrorKind::open_trace, "area requested for an open trace");
    const auto& v = trace.vertices;
    double twice = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const Point a = v[k] - zi;
        const Point b = v[(k + 1) % v.size()] - v[k];
        twice += det(a, b);
    }
    return 0.5 * std::abs(twice);
}

/// Follows the level set S_i = K by stepping along the clockwise-rotated
/// unit gradient, z(k+1) = z(k) + J grad S / |grad S| dt, optionally pulling
/// each step back onto the level set with a Newton correction along the
/// gradient. Stops once the walk returns within closure_tol of the seed.
inline BoundaryTrace trace_boundary(const FieldContext& ctx, std::size_t i, const TracerConfig& cfg = {}) {
    cfg.validate();
    ctx.check_index(i);
    const double K = ctx.params().K;
    const double lnK = std::log(K);
    const Point zi = ctx.points()[i];

    Point z0;
    try {
        z0 = newton_seed(ctx, i, cfg);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::seed_failure) throw;
        z0 = bisect_seed(ctx, i, cfg);
    }

    BoundaryTrace out;
    out.center = zi;
    out.dt = cfg.dt > 0.0 ? cfg.dt : cfg.auto_dt_fraction * distance(z0, zi);
    out.closure_tol = cfg.closure_tol > 0.0 ? cfg.closure_tol : out.dt;
    require(out.dt > 0.0, "step length resolved to zero");
    require(out.closure_tol >= 0.5 * out.dt, "closure tolerance must be at least dt/2");

    auto correct = [&](Point z, FieldSample& s) {
        s = ctx.evaluate(i, z);
        for (int it = 0; it < cfg.newton_max_iters; ++it) {
            if (s.singular || s.at_transmitter) break;
            if (std::abs(s.sir - K) <= cfg.newton_tol * K) break;
            const Point g = s.gradient / s.sir; // grad ln S
            const double g2 = norm2(g);
            if (!(g2 > 0.0)) break;
            z -= ((std::log(s.sir) - lnK) / g2) * g;
            s = ctx.evaluate(i, z);
        }
        return z;
    };

    out.vertices.push_back(z0);
    Point z = z0;
    FieldSample s = ctx.evaluate(i, z);
    double dot_sum = 0.0;
    double turned = 0.0;
    double residual = std::abs(s.sir - K) / K;
    const double max_turn = 3.0 * std::numbers::pi;

    for (std::size_t k = 0; k < cfg.max_steps; ++k) {
        if (s.singular || s.at_transmitter)
            throw Error(ErrorKind::degenerate_gradient, "trace ran onto a transmitter");
        const double gn = norm(s.gradient);
        if (!(gn >= 1e-300)) throw Error(ErrorKind::degenerate_gradient, "SIR gradient vanished on the boundary");
        const Point normal = s.gradient / gn;
        dot_sum += dot(z - zi, normal) * out.dt;

        Point next = z + out.dt * rotate_cw(normal);
        if (cfg.corrector_enabled) next = correct(next, s);
        else s = ctx.evaluate(i, next);

        turned += std::atan2(det(z - zi, next - zi), dot(z - zi, next - zi));
        z = next;
        residual = std::max(residual, std::abs(s.sir - K) / K);
        out.steps = k + 1;

        const double gap = distance(z, z0);
        if (out.steps >= 10 && gap <= out.closure_tol) {
            out.vertices.push_back(z);
            // the closing segment z(n) -> z(0) is shorter than dt
            const double gnn = norm(s.gradient);
            if (gnn > 0.0) dot_sum += dot(z - zi, s.gradient / gnn) * gap;
            out.closed = true;
            break;
        }
        if (std::abs(turned) > max_turn) break;
        out.vertices.push_back(z);
    }
    if (!out.closed) throw Error(ErrorKind::open_trace, "boundary trace did not close");

    out.max_level_residual = residual;
    out.area = area_from_trace(out, zi);
    out.dot_area = -0.5 * dot_sum;
    return out;
}

/// Reception area by counting raster cells (centers) with S_i >= K in a
/// square window of side `window` centered at z_i. Independent of the tracer.
inline double rasterization_area(const FieldContext& ctx, std::size_t i, double cell, double window) {
    ctx.check_index(i);
    require(cell > 0.0 && std::isfinite(cell), "raster cell must be positive");
    require(ctx.size() >= 2, "reception area is unbounded without interferers");
    const auto [nearest, reach] = ctx.nearest_interferer(i);
    require(window >= 2.0 * reach, "raster window must be at least twice the nearest-interferer distance");

    const double K = ctx.params().K;
    const double limit = 1.0 / K; // S >= K  <=>  Q <= 1/K
    const Point zi = ctx.points()[i];
    const double cut = ctx.cutoff();
    const double cut2 = cut * cut;

    // interferers by distance from z_i; the nearest few usually settle a cell
    struct Cand { double d2; Point p; };
    std::vector<Cand> cands;
    const double reach_limit = cut + window;
    for (std::size_t j = 0; j < ctx.size(); ++j) {
        if (j == i) continue;
        const double d2 = norm2(ctx.points()[j] - zi);
        if (std::sqrt(d2) <= reach_limit) cands.push_back({d2, ctx.points()[j]});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.d2 < b.d2; });

    const long m = static_cast<long>(std::ceil(window / cell));
    const double origin = -0.5 * static_cast<double>(m) * cell;
    std::size_t inside = 0;
    bool touches_edge = false;
    for (long a = 0; a < m; ++a) {
        for (long b = 0; b < m; ++b) {
            const Point z{zi.x + origin + (static_cast<double>(b) + 0.5) * cell,
                          zi.y + origin + (static_cast<double>(a) + 0.5) * cell};
            const double ri2 = norm2(z - zi);
            double q = 0.0;
            bool ok = true;
            for (const Cand& c : cands) {
                const double rj2 = norm2(z - c.p);
                if (rj2 > cut2) continue;
                if (rj2 == 0.0) { ok = false; break; }
                q += ctx.power(ri2 / rj2);
                if (q > limit) { ok = false; break; }
            }
            if (!ok) continue;
            ++inside;
            if (a == 0 || b == 0 || a == m - 1 || b == m - 1) touches_edge = true;
        }
    }
    if (touches_edge) throw Error(ErrorKind::window_overflow, "reception area reaches the raster window edge");
    return static_cast<double>(inside) * cell * cell;
}

/// Traced versus rasterized area for one transmitter.
struct ZoneCrossCheck {
    double traced = 0.0;
    double rasterized = 0.0;
    double relative_difference = 0.0;
    /// Disagreement above 2% usually means the zone has several components
    /// and only the seeded one was traced.
    bool multi_component_suspect = false;
};

inline ZoneCrossCheck cross_check(const FieldContext& ctx, std::size_t i, const BoundaryTrace& trace, double cell,
                                  double window) {
    ZoneCrossCheck out;
    out.traced = trace.area;
    out.rasterized = rasterization_area(ctx, i, cell, window);
    out.relative_difference = std::abs(out.traced - out.rasterized) / out.rasterized;
    out.multi_component_suspect = out.relative_difference > 0.02;
    return out;
}

} // namespace lcap
