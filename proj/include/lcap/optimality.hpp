#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "lcap/area_tracer.hpp"
#include "lcap/error.hpp"
#include "lcap/geometry.hpp"
#include "lcap/parallel.hpp"
#include "lcap/sir_field.hpp"

namespace lcap {

/// Derivative of the measured zone area with respect to a linear deformation
/// of the transmitter set, and its deviation T = sigma0 I - D from a pure
/// dilation.
struct DeformationReport {
    Mat2 D{};
    Mat2 T{};
    double sigma0 = 0.0;
    double asymmetry = 0.0;      ///< |D_xy - D_yx|
    double trace_residual = 0.0; ///< |tr D - 2 sigma0|
    double truncation_radius = 0.0;
    double fd_step = 0.0;
    std::size_t measured = 0;
    std::size_t perturbed = 0; ///< transmitters inside the truncation radius
};

enum class GradientMethod { finite_difference, boundary_integral };

inline std::string_view to_string(GradientMethod m) {
    return m == GradientMethod::finite_difference ? "finite_difference" : "boundary_integral";
}

struct DeformationOptions {
    std::optional<double> truncation_radius; ///< default 6 mean spacings
    std::optional<double> fd_step;           ///< default spacing / 1e4
    std::optional<std::size_t> measured;     ///< default: transmitter nearest the origin
    GradientMethod method = GradientMethod::finite_difference;
    unsigned workers = 1;
};

namespace detail {

/// Tracer settings frozen from a reference trace, so perturbed traces start on
/// the same ray and walk with the same step.
inline TracerConfig frozen_config(const FieldContext& ctx, std::size_t i, const TracerConfig& cfg,
                                  const BoundaryTrace& base) {
    TracerConfig out = cfg;
    out.dt = base.dt;
    out.closure_tol = base.closure_tol;
    if (!out.seed_direction) {
        const auto [j, dist] = ctx.nearest_interferer(i);
        out.seed_direction = ctx.points()[j] - ctx.points()[i];
    }
    return out;
}

inline double traced_area_moved(const FieldContext& ctx, std::size_t i, std::size_t moved, Point offset,
                                const TracerConfig& cfg) {
    TransmitterSet set = ctx.transmitters();
    set.points[moved] += offset;
    const FieldContext perturbed(std::move(set), ctx.params(), ctx.cutoff());
    return trace_boundary(perturbed, i, cfg).area;
}

inline Point fd_gradient(const FieldContext& ctx, std::size_t i, std::size_t moved, double h, const TracerConfig& frozen) {
    const double xp = traced_area_moved(ctx, i, moved, {h, 0.0}, frozen);
    const double xm = traced_area_moved(ctx, i, moved, {-h, 0.0}, frozen);
    const double yp = traced_area_moved(ctx, i, moved, {0.0, h}, frozen);
    const double ym = traced_area_moved(ctx, i, moved, {0.0, -h}, frozen);
    return {(xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)};
}

} // namespace detail

/// Central-difference estimate of d sigma_i / d z_j: transmitter j is moved
/// by +-h along each axis and the zone of transmitter i re-traced.
inline Point grad_sigma_wrt_transmitter(const FieldContext& ctx, std::size_t i, std::size_t j, const TracerConfig& cfg,
                                        double h) {
    ctx.check_index(i);
    ctx.check_index(j);
    require(std::isfinite(h) && h > 0.0, "finite-difference step must be positive");
    const BoundaryTrace base = trace_boundary(ctx, i, cfg);
    return detail::fd_gradient(ctx, i, j, h, detail::frozen_config(ctx, i, cfg, base));
}

/// d sigma_i / d z_j for every j in `moved`, as boundary integrals over a
/// closed trace of zone i: the boundary moves with normal speed
/// (dS/dz_j) / |grad S|, and the area changes by its integral.
inline std::vector<Point> boundary_gradients(const FieldContext& ctx, std::size_t i, const BoundaryTrace& trace,
                                             const std::vector<std::size_t>& moved) {
    ctx.check_index(i);
    if (!trace.closed) throw Error(ErrorKind::open_trace, "boundary gradients need a closed trace");
    const double alpha = ctx.params().alpha;
    const Point zi = ctx.points()[i];
    const auto& v = trace.vertices;
    std::vector<Point> out(moved.size(), Point{});
    for (std::size_t k = 0; k < v.size(); ++k) {
        const Point a = v[k], b = v[(k + 1) % v.size()];
        const double len = distance(a, b);
        if (len == 0.0) continue;
        const Point m = 0.5 * (a + b);
        const FieldSample s = ctx.evaluate(i, m);
        const double gn = norm(s.gradient);
        if (s.singular || s.at_transmitter || !(gn > 0.0))
            throw Error(ErrorKind::degenerate_gradient, "SIR gradient vanished on the boundary");
        const double scale = s.sir * alpha * len / gn;
        const double ri2 = norm2(m - zi);
        for (std::size_t n = 0; n < moved.size(); ++n) {
            const std::size_t j = moved[n];
            if (j == i) {
                out[n] += (scale / ri2) * (m - zi);
                continue;
            }
            const Point u = m - ctx.points()[j];
            const double rj2 = norm2(u);
            if (rj2 > ctx.cutoff() * ctx.cutoff()) continue;
            const double w = ctx.power(ri2 / rj2) * s.sir;
            out[n] -= (scale * w / rj2) * u;
        }
    }
    return out;
}

/// D = sum over transmitters within the truncation radius of
/// (z_j - z_i) (x) d sigma_i / d z_j, for the measured transmitter i.
inline DeformationReport deformation_matrices(const FieldContext& ctx, const TracerConfig& cfg,
                                              const DeformationOptions& opts = {}) {
    require(ctx.size() >= 2, "deformation needs at least two transmitters");
    const double spacing = ctx.mean_spacing();
    DeformationReport r;
    r.truncation_radius = opts.truncation_radius.value_or(6.0 * spacing);
    r.fd_step = opts.fd_step.value_or(spacing * 1e-4);
    require(std::isfinite(r.truncation_radius) && r.truncation_radius > 0.0, "truncation radius must be positive");
    require(std::isfinite(r.fd_step) && r.fd_step > 0.0, "finite-difference step must be positive");
    r.measured = opts.measured.value_or(ctx.nearest_to({0.0, 0.0}));
    ctx.check_index(r.measured);

    const std::size_t i = r.measured;
    const Point zi = ctx.points()[i];
    std::vector<std::size_t> moved;
    for (std::size_t j = 0; j < ctx.size(); ++j)
        if (j != i && distance(ctx.points()[j], zi) <= r.truncation_radius) moved.push_back(j);
    r.perturbed = moved.size();

    const BoundaryTrace base = trace_boundary(ctx, i, cfg);
    r.sigma0 = base.area;

    std::vector<Point> grads;
    if (opts.method == GradientMethod::boundary_integral) {
        grads = boundary_gradients(ctx, i, base, moved);
    } else {
        grads.resize(moved.size());
        const TracerConfig frozen = detail::frozen_config(ctx, i, cfg, base);
        parallel_for(moved.size(), opts.workers,
                     [&](std::size_t n) { grads[n] = detail::fd_gradient(ctx, i, moved[n], r.fd_step, frozen); });
    }

    for (std::size_t n = 0; n < moved.size(); ++n) r.D = r.D + outer(ctx.points()[moved[n]] - zi, grads[n]);
    r.T = r.sigma0 * Mat2::identity() - r.D;
    r.asymmetry = std::abs(r.D.xy - r.D.yx);
    r.trace_residual = std::abs(r.D.trace() - 2.0 * r.sigma0);
    return r;
}

inline DeformationReport deformation_matrices(const FieldContext& ctx, const TracerConfig& cfg,
                                              double truncation_radius, double h, unsigned workers = 1) {
    DeformationOptions opts;
    opts.truncation_radius = truncation_radius;
    opts.fd_step = h;
    opts.workers = workers;
    return deformation_matrices(ctx, cfg, opts);
}

} // namespace lcap
