#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "lcap/error.hpp"
#include "lcap/geometry.hpp"
#include "lcap/point_processes.hpp"
#include "lcap/spatial_index.hpp"

namespace lcap {

/// SIR threshold K and path-loss exponent alpha.
struct SirParams {
    double K = 10.0;
    double alpha = 4.0;

    void validate() const {
        require(std::isfinite(K) && K > 0.0, "SIR threshold K must be positive");
        require(std::isfinite(alpha) && alpha > 2.0, "attenuation coefficient alpha must exceed 2");
    }
};

enum class Accumulation { automatic, plain, compensated };

/// SIR and its spatial gradient at one point for one transmitter.
struct FieldSample {
    double sir = 0.0;
    Point gradient{};
    bool at_transmitter = false; ///< z == z_i, SIR is +inf
    bool singular = false;       ///< z sits on an interferer, SIR is 0
};

namespace detail {

/// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0, carry = 0.0;
    void add(double v) {
        const double t = sum + v;
        carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

/// Mean distance from each point to its nearest other point.
inline double mean_nearest_spacing(const std::vector<Point>& pts, const MapExtent& extent) {
    if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double typical = extent.side / std::sqrt(static_cast<double>(pts.size()));
    StaticIndex index(pts, extent.lo(), extent.side, typical);
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (double r = typical;; r *= 2.0) {
            index.for_each_near(pts[i], r, [&](std::size_t j) {
                if (j != i) best = std::min(best, norm2(pts[j] - pts[i]));
            });
            // box search of half-width r is exact for distances <= r
            if (best <= r * r || r > 2.0 * extent.side) break;
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(pts.size());
}

} // namespace detail

/// Immutable evaluation context for the SIR field of a transmitter set.
/// Interferers farther than `cutoff` from the evaluation point are ignored.
class FieldContext {
public:
    static constexpr double no_cutoff = std::numeric_limits<double>::infinity();
    static constexpr double default_cutoff_spacings = 40.0;

    /// cutoff: radius in meters, `no_cutoff`, or empty for 40 mean
    /// nearest-neighbour spacings.
    FieldContext(TransmitterSet set, SirParams params, std::optional<double> cutoff = std::nullopt,
                 Accumulation acc = Accumulation::automatic)
        : set_(std::move(set)), params_(params) {
        params_.validate();
        for (const Point& p : set_.points) require(is_finite(p), "transmitter coordinates must be finite");
        spacing_ = detail::mean_nearest_spacing(set_.points, set_.extent);
        if (cutoff) {
            require(*cutoff > 0.0, "interference cutoff must be positive");
            cutoff_ = *cutoff;
        } else {
            cutoff_ = std::isfinite(spacing_) ? default_cutoff_spacings * spacing_ : no_cutoff;
        }
        compensated_ = acc == Accumulation::compensated ||
                       (acc == Accumulation::automatic && set_.points.size() <= 64);

        const double diag = std::sqrt(2.0) * set_.extent.side;
        indexed_ = std::isfinite(cutoff_) && cutoff_ < diag && set_.points.size() > 256;
        if (indexed_) index_ = StaticIndex(set_.points, set_.extent.lo(), set_.extent.side, 0.25 * cutoff_);

        half_alpha_ = 0.5 * params_.alpha;
        const double rounded = std::round(half_alpha_);
        int_power_ = (rounded == half_alpha_ && rounded >= 1.0 && rounded <= 128.0) ? static_cast<int>(rounded) : 0;
    }

    const TransmitterSet& transmitters() const { return set_; }
    const std::vector<Point>& points() const { return set_.points; }
    std::size_t size() const { return set_.points.size(); }
    const SirParams& params() const { return params_; }
    double cutoff() const { return cutoff_; }
    double mean_spacing() const { return spacing_; }

    /// Bound on the power neglected by the cutoff, for an unbounded plane at
    /// the set's density. Zero without cutoff.
    double tail_bound() const {
        if (!std::isfinite(cutoff_)) return 0.0;
        return interference_tail_bound(density(set_), cutoff_, params_.alpha);
    }

    /// SIR and gradient of transmitter i at z.
    ///
    /// Written in ratio form, S = 1 / sum_j (r_i^2 / r_j^2)^(alpha/2), which
    /// stays representable for large alpha where raw powers under/overflow.
    FieldSample evaluate(std::size_t i, Point z) const {
        check_index(i);
        FieldSample out;
        const Point zi = set_.points[i];
        const Point ui = z - zi;
        const double ri2 = norm2(ui);
        if (ri2 == 0.0) {
            out.sir = std::numeric_limits<double>::infinity();
            out.at_transmitter = true;
            return out;
        }
        const double cut2 = cutoff_ * cutoff_;

        if (compensated_) return evaluate_compensated(i, z, ri2, ui, cut2);

        double q_sum = 0.0, gx = 0.0, gy = 0.0;
        bool singular = false;
        auto visit = [&](std::size_t j) {
            if (j == i) return;
            const Point uj = z - set_.points[j];
            const double rj2 = norm2(uj);
            if (rj2 > cut2) return;
            if (rj2 == 0.0) { singular = true; return; }
            const double q = power(ri2 / rj2);
            q_sum += q;
            const double w = q / rj2;
            gx += w * uj.x;
            gy += w * uj.y;
        };
        for_candidates(z, visit);
        return finish(out, q_sum, {gx, gy}, ui, ri2, singular);
    }

    double sir(std::size_t i, Point z) const { return evaluate(i, z).sir; }

    /// Index and distance of the transmitter closest to z_i (cutoff ignored).
    std::pair<std::size_t, double> nearest_interferer(std::size_t i) const {
        check_index(i);
        require(size() >= 2, "need at least two transmitters");
        std::size_t best = i;
        double best2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < size(); ++j) {
            if (j == i) continue;
            const double r2 = norm2(set_.points[j] - set_.points[i]);
            if (r2 < best2) { best2 = r2; best = j; }
        }
        return {best, std::sqrt(best2)};
    }

    /// Transmitter closest to an arbitrary point.
    std::size_t nearest_to(Point z) const {
        require(!set_.points.empty(), "empty transmitter set");
        std::size_t best = 0;
        double best2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < size(); ++j) {
            const double r2 = norm2(set_.points[j] - z);
            if (r2 < best2) { best2 = r2; best = j; }
        }
        return best;
    }

    void check_index(std::size_t i) const { require(i < set_.points.size(), "transmitter index out of range"); }

    /// t^(alpha/2), with a multiply-only path for even integer alpha.
    double power(double t) const {
        if (int_power_ == 2) return t * t;
        if (int_power_ > 0) {
            double result = 1.0, base = t;
            for (int e = int_power_; e > 0; e >>= 1) {
                if (e & 1) result *= base;
                base *= base;
            }
            return result;
        }
        return std::pow(t, half_alpha_);
    }

private:
    template <class Fn>
    void for_candidates(Point z, Fn&& fn) const {
        if (indexed_) index_.for_each_near(z, cutoff_, fn);
        else for (std::size_t j = 0; j < set_.points.size(); ++j) fn(j);
    }

    FieldSample finish(FieldSample out, double q_sum, Point weighted, Point ui, double ri2, bool singular) const {
        if (singular || !std::isfinite(q_sum)) {
            out.sir = 0.0;
            out.singular = true;
            return out;
        }
        if (q_sum == 0.0) { // no interferer in range
            out.sir = std::numeric_limits<double>::infinity();
            return out;
        }
        out.sir = 1.0 / q_sum;
        // grad ln S = alpha * (sum_j w_j (z - z_j)/r_j^2 - (z - z_i)/r_i^2), w_j = q_j / Q
        const double a = params_.alpha * out.sir;
        out.gradient = {a * (weighted.x / q_sum - ui.x / ri2), a * (weighted.y / q_sum - ui.y / ri2)};
        return out;
    }

    FieldSample evaluate_compensated(std::size_t i, Point z, double ri2, Point ui, double cut2) const {
        struct Term { double q, rj2; Point uj; };
        std::vector<Term> terms;
        terms.reserve(set_.points.size());
        bool singular = false;
        for (std::size_t j = 0; j < set_.points.size(); ++j) {
            if (j == i) continue;
            const Point uj = z - set_.points[j];
            const double rj2 = norm2(uj);
            if (rj2 > cut2) continue;
            if (rj2 == 0.0) { singular = true; continue; }
            terms.push_back({power(ri2 / rj2), rj2, uj});
        }
        std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.q > b.q; });
        detail::CompensatedSum q, gx, gy;
        for (const Term& t : terms) {
            q.add(t.q);
            gx.add(t.q / t.rj2 * t.uj.x);
            gy.add(t.q / t.rj2 * t.uj.y);
        }
        return finish(FieldSample{}, q.value(), {gx.value(), gy.value()}, ui, ri2, singular);
    }

    TransmitterSet set_;
    SirParams params_;
    double cutoff_ = no_cutoff;
    double spacing_ = 0.0;
    bool compensated_ = false;
    bool indexed_ = false;
    StaticIndex index_;
    double half_alpha_ = 2.0;
    int int_power_ = 2;
};

/// SIR of transmitter i at z: +inf at z_i, 0 on an interferer.
inline double sir_at(const FieldContext& ctx, std::size_t i, Point z) {
    require(is_finite(z), "evaluation point must be finite");
    return ctx.sir(i, z);
}

/// Analytic gradient of the SIR of transmitter i (1/m).
inline Point sir_gradient(const FieldContext& ctx, std::size_t i, Point z) {
    require(is_finite(z), "evaluation point must be finite");
    const FieldSample s = ctx.evaluate(i, z);
    if (s.at_transmitter || s.singular)
        throw Error(ErrorKind::singular_point, "SIR gradient undefined on a transmitter");
    return s.gradient;
}

/// Share of the total received power coming from transmitter i, in [0, 1].
inline double g_value(const FieldContext& ctx, std::size_t i, Point z) {
    require(is_finite(z), "evaluation point must be finite");
    const FieldSample s = ctx.evaluate(i, z);
    if (s.at_transmitter) return 1.0;
    if (s.singular) return 0.0;
    if (std::isinf(s.sir)) return 1.0;
    return s.sir / (1.0 + s.sir);
}

/// Number of transmitters decodable at z with SIR >= K.
inline std::size_t count_successful(const FieldContext& ctx, Point z) {
    require(is_finite(z), "evaluation point must be finite");
    if (ctx.size() == 0) return 0;
    const double K = ctx.params().K;
    if (K > 1.0) {
        // only the strongest (closest) transmitter can dominate the rest
        return ctx.sir(ctx.nearest_to(z), z) >= K ? 1 : 0;
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i < ctx.size(); ++i)
        if (ctx.sir(i, z) >= K) ++n;
    return n;
}

} // namespace lcap
