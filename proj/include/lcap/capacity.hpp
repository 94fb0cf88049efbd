#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcap/area_tracer.hpp"
#include "lcap/error.hpp"
#include "lcap/parallel.hpp"
#include "lcap/point_processes.hpp"
#include "lcap/random.hpp"
#include "lcap/sir_field.hpp"

namespace lcap {

enum class ProtocolKind { triangular, square, hexagonal, aloha, coloring, csma };

inline constexpr std::array<ProtocolKind, 6> all_protocols{ProtocolKind::triangular, ProtocolKind::square,
                                                            ProtocolKind::hexagonal,  ProtocolKind::aloha,
                                                            ProtocolKind::coloring,   ProtocolKind::csma};

inline std::string_view to_string(ProtocolKind k) {
    switch (k) {
    case ProtocolKind::triangular: return "triangular";
    case ProtocolKind::square: return "square";
    case ProtocolKind::hexagonal: return "hexagonal";
    case ProtocolKind::aloha: return "aloha";
    case ProtocolKind::coloring: return "coloring";
    case ProtocolKind::csma: return "csma";
    }
    return "?";
}

inline ProtocolKind parse_protocol(std::string_view name) {
    for (ProtocolKind k : all_protocols)
        if (to_string(k) == name) return k;
    throw Error(ErrorKind::invalid_argument, "unknown protocol: " + std::string(name));
}

inline bool is_grid(ProtocolKind k) {
    return k == ProtocolKind::triangular || k == ProtocolKind::square || k == ProtocolKind::hexagonal;
}

inline GridKind grid_kind_of(ProtocolKind k) {
    switch (k) {
    case ProtocolKind::square: return GridKind::square;
    case ProtocolKind::hexagonal: return GridKind::hexagonal;
    case ProtocolKind::triangular: return GridKind::triangular;
    default: break;
    }
    throw Error(ErrorKind::invalid_argument, "protocol is not a grid pattern");
}

/// Medium-access model with only the parameters its kind uses.
struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::triangular;
    std::optional<double> d;            ///< grids, coloring (m)
    std::optional<double> theta;        ///< csma threshold
    std::optional<double> lambda;       ///< aloha transmitter density (1/m^2)
    std::optional<double> node_density; ///< coloring, csma node population (1/m^2)
    /// csma: when set, theta is the threshold at this exponent and is
    /// rescaled for other exponents so the single-transmitter sensing radius
    /// theta^(-1/alpha) stays fixed.
    std::optional<double> theta_reference_alpha;

    static ProtocolSpec grid(ProtocolKind k, double d = 25.0) {
        (void)grid_kind_of(k);
        return {k, d, {}, {}, {}, {}};
    }
    static ProtocolSpec aloha(double lambda = 1.0 / 625.0) { return {ProtocolKind::aloha, {}, {}, lambda, {}, {}}; }
    static ProtocolSpec coloring(double d = 25.0, double node_density = 1.0) {
        return {ProtocolKind::coloring, d, {}, {}, node_density, {}};
    }
    static ProtocolSpec csma(double theta = 1e-5, double node_density = 1.0, std::optional<double> reference_alpha = 4.0) {
        return {ProtocolKind::csma, {}, theta, {}, node_density, reference_alpha};
    }
    static ProtocolSpec defaults(ProtocolKind k) {
        switch (k) {
        case ProtocolKind::aloha: return aloha();
        case ProtocolKind::coloring: return coloring();
        case ProtocolKind::csma: return csma();
        default: return grid(k);
        }
    }

    void validate() const {
        const bool wants_d = is_grid(kind) || kind == ProtocolKind::coloring;
        const bool wants_theta = kind == ProtocolKind::csma;
        const bool wants_lambda = kind == ProtocolKind::aloha;
        const bool wants_nodes = kind == ProtocolKind::coloring || kind == ProtocolKind::csma;
        auto check = [&](const std::optional<double>& v, bool wanted, const char* name) {
            require(v.has_value() == wanted, std::string(to_string(kind)) + (wanted ? " requires " : " does not use ") + name);
            if (v) require(std::isfinite(*v) && *v > 0.0, std::string(name) + " must be positive");
        };
        check(d, wants_d, "d");
        check(theta, wants_theta, "theta");
        check(lambda, wants_lambda, "lambda");
        check(node_density, wants_nodes, "node_density");
        if (theta_reference_alpha) {
            require(wants_theta, "theta_reference_alpha applies to csma only");
            require(*theta_reference_alpha > 2.0, "theta reference alpha must exceed 2");
        }
    }

    /// Carrier-sense threshold in force at exponent alpha.
    double theta_at(double alpha) const {
        require(theta.has_value(), "protocol has no carrier-sense threshold");
        if (!theta_reference_alpha) return *theta;
        return std::pow(*theta, alpha / *theta_reference_alpha);
    }

    /// Characteristic spacing used for desk-scale maps.
    double length_scale() const {
        if (d) return *d;
        if (lambda) return 1.0 / std::sqrt(*lambda);
        return 25.0;
    }
};

/// Map used when none is given: 40 characteristic spacings on a side.
inline MapExtent default_extent(const ProtocolSpec& spec) { return MapExtent(40.0 * spec.length_scale()); }

/// c = lambda * sigma with Monte Carlo statistics.
struct CapacityEstimate {
    double lambda_mean = 0.0;
    double sigma_mean = 0.0;
    double capacity = 0.0;
    double std_error = 0.0;   ///< standard error of the per-sample product
    double product_mean = 0.0; ///< mean of lambda_s * sigma_s
    std::size_t samples = 1;
    std::size_t failures = 0;
    std::uint64_t seed = 0;
};

/// Mean reception area of a Poisson (slotted ALOHA) transmitter:
/// (1/lambda) * sin(2 pi / alpha) / (2 pi / alpha) * K^(-2/alpha).
inline double aloha_sigma(double lambda, const SirParams& params) {
    require(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
    params.validate();
    const double x = 2.0 * std::numbers::pi / params.alpha;
    return std::sin(x) / x * std::pow(params.K, -2.0 / params.alpha) / lambda;
}

/// ALOHA capacity; lambda cancels, so this is the area at unit density.
inline double aloha_capacity(const SirParams& params) { return aloha_sigma(1.0, params); }

inline CapacityEstimate aloha_estimate(double lambda, const SirParams& params) {
    CapacityEstimate e;
    e.lambda_mean = lambda;
    e.sigma_mean = aloha_sigma(lambda, params);
    e.capacity = aloha_capacity(params);
    e.product_mean = e.capacity;
    return e;
}

/// Grid capacity from one trace of the transmitter at the origin. All zones
/// of a lattice are congruent, and lambda is the lattice density.
inline CapacityEstimate grid_capacity(GridKind kind, const SirParams& params, double d, MapExtent extent,
                                      const TracerConfig& cfg = {}, std::optional<double> cutoff = std::nullopt) {
    params.validate();
    FieldContext ctx(generate_grid(kind, d, extent), params, cutoff);
    const std::size_t origin = ctx.nearest_to({0.0, 0.0});
    const BoundaryTrace trace = trace_boundary(ctx, origin, cfg);
    CapacityEstimate e;
    e.lambda_mean = lattice_density(kind, d);
    e.sigma_mean = trace.area;
    e.capacity = e.lambda_mean * e.sigma_mean;
    e.product_mean = e.capacity;
    return e;
}

/// How a sampled slot is turned into one (lambda, sigma) observation.
enum class Estimator {
    /// Typical transmitter: sigma of a transmitter drawn uniformly among those
    /// within side/8 of the center, lambda counted in the central square of
    /// half the side. Both stay clear of the map edge, where exclusion
    /// protocols pack denser, and neither favours large cells.
    typical,
    /// Sigma of the transmitter nearest the map center, lambda over the whole
    /// map. The nearest transmitter owns the Voronoi cell covering the
    /// center, so this samples zones in proportion to cell area.
    nearest_center,
};

inline std::string_view to_string(Estimator e) {
    return e == Estimator::typical ? "typical" : "nearest_center";
}

inline Estimator parse_estimator(std::string_view name) {
    if (name == "typical") return Estimator::typical;
    if (name == "nearest_center") return Estimator::nearest_center;
    throw Error(ErrorKind::invalid_argument, "unknown estimator: " + std::string(name));
}

struct MonteCarloOptions {
    unsigned workers = 1;
    Estimator estimator = Estimator::typical;
    double max_failure_fraction = 0.01;
    std::optional<double> cutoff;
};

/// One drawn slot: the transmitters, which one to measure, and the density
/// that enters the lambda average.
struct SlotSample {
    TransmitterSet set;
    std::size_t measured = 0;
    double lambda = 0.0;
};

/// Draws the transmitters of one slot under `spec`.
///
/// With the typical estimator an ALOHA slot gets an extra transmitter at the
/// map center, which is then measured: for a Poisson process that is exactly
/// the law seen from a typical transmitter. Lambda comes from the Poisson
/// points alone.
inline SlotSample draw_slot(const ProtocolSpec& spec, double alpha, MapExtent extent, RandomSource& rng,
                            Estimator estimator = Estimator::typical) {
    spec.validate();
    SlotSample out{TransmitterSet{{}, extent}, 0, 0.0};
    switch (spec.kind) {
    case ProtocolKind::aloha: {
        for (int attempt = 0; out.set.size() < 2; ++attempt) {
            require(attempt < 1000, "Poisson draws keep coming out nearly empty");
            out.set = sample_poisson(*spec.lambda, extent, rng);
        }
        if (estimator == Estimator::typical) {
            out.lambda = density(out.set);
            out.set.points.push_back({0.0, 0.0});
            out.measured = out.set.points.size() - 1;
            return out;
        }
        break;
    }
    case ProtocolKind::coloring: {
        for (int attempt = 0; out.set.size() < 2; ++attempt) {
            require(attempt < 1000, "node draws keep yielding fewer than two transmitters");
            out.set = sample_coloring(sample_uniform_nodes(*spec.node_density, extent, rng), *spec.d, rng);
        }
        break;
    }
    case ProtocolKind::csma: {
        for (int attempt = 0; out.set.size() < 2; ++attempt) {
            require(attempt < 1000, "node draws keep yielding fewer than two transmitters");
            out.set = sample_csma(sample_uniform_nodes(*spec.node_density, extent, rng), spec.theta_at(alpha), alpha, rng);
        }
        break;
    }
    default: {
        out.set = generate_grid(grid_kind_of(spec.kind), *spec.d, extent);
        break;
    }
    }

    std::size_t nearest = 0;
    double best2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out.set.size(); ++j) {
        const double r2 = norm2(out.set.points[j]);
        if (r2 < best2) { best2 = r2; nearest = j; }
    }
    out.measured = nearest;
    if (estimator == Estimator::nearest_center) {
        out.lambda = density(out.set);
        return out;
    }

    const double pick2 = std::pow(extent.side / 8.0, 2);
    const double window = 0.25 * extent.side;
    std::vector<std::size_t> central;
    std::size_t in_window = 0;
    for (std::size_t j = 0; j < out.set.size(); ++j) {
        const Point p = out.set.points[j];
        if (norm2(p) <= pick2) central.push_back(j);
        if (std::abs(p.x) < window && std::abs(p.y) < window) ++in_window;
    }
    if (!central.empty())
        out.measured = central[std::uniform_int_distribution<std::size_t>(0, central.size() - 1)(rng)];
    out.lambda = static_cast<double>(in_window) / (4.0 * window * window);
    return out;
}

namespace detail {

struct SampleOutcome {
    double lambda = 0.0;
    double sigma = 0.0;
    bool ok = false;
};

inline std::optional<double> traced_area(const FieldContext& ctx, std::size_t i, const TracerConfig& cfg) {
    try {
        return trace_boundary(ctx, i, cfg).area;
    } catch (const Error& e) {
        if (e.is_usage()) throw;
    }
    TracerConfig finer = cfg;
    if (finer.dt > 0.0) finer.dt *= 0.5;
    else finer.auto_dt_fraction *= 0.5;
    try {
        return trace_boundary(ctx, i, finer).area;
    } catch (const Error& e) {
        if (e.is_usage()) throw;
    }
    return std::nullopt;
}

inline CapacityEstimate reduce(std::span<const SampleOutcome> outcomes, std::uint64_t seed, double max_failure_fraction) {
    CapacityEstimate e;
    e.seed = seed;
    std::size_t n = 0;
    double sl = 0.0, ss = 0.0, sp = 0.0, sp2 = 0.0;
    for (const SampleOutcome& o : outcomes) {
        if (!o.ok) { ++e.failures; continue; }
        ++n;
        const double p = o.lambda * o.sigma;
        sl += o.lambda;
        ss += o.sigma;
        sp += p;
        sp2 += p * p;
    }
    if (static_cast<double>(e.failures) > max_failure_fraction * static_cast<double>(outcomes.size()) || n == 0)
        throw Error(ErrorKind::too_many_failures,
                    std::to_string(e.failures) + " of " + std::to_string(outcomes.size()) + " samples failed to trace");
    const double dn = static_cast<double>(n);
    e.samples = n;
    e.lambda_mean = sl / dn;
    e.sigma_mean = ss / dn;
    e.capacity = e.lambda_mean * e.sigma_mean;
    e.product_mean = sp / dn;
    const double var = n > 1 ? std::max(0.0, (sp2 - sp * sp / dn) / (dn - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / dn);
    return e;
}

} // namespace detail

/// Monte Carlo capacity for several (K, alpha) points sharing the same slot
/// draws. Draws may only depend on alpha for csma, so all params must then
/// share one alpha. Sample k uses derive_rng(seed, k).
inline std::vector<CapacityEstimate> monte_carlo_capacity_multi(const ProtocolSpec& spec,
                                                                std::span<const SirParams> params, MapExtent extent,
                                                                std::size_t samples, std::uint64_t seed,
                                                                const TracerConfig& cfg = {},
                                                                const MonteCarloOptions& opts = {}) {
    spec.validate();
    cfg.validate();
    require(samples >= 1, "need at least one sample");
    require(!params.empty(), "need at least one parameter point");
    for (const SirParams& p : params) p.validate();
    if (spec.kind == ProtocolKind::csma)
        for (const SirParams& p : params)
            require(p.alpha == params.front().alpha, "csma draws depend on alpha; group parameter points by alpha");

    std::vector<CapacityEstimate> out;
    if (is_grid(spec.kind)) {
        for (const SirParams& p : params) {
            auto e = grid_capacity(grid_kind_of(spec.kind), p, *spec.d, extent, cfg, opts.cutoff);
            e.seed = seed;
            out.push_back(e);
        }
        return out;
    }

    const std::size_t np = params.size();
    std::vector<detail::SampleOutcome> outcomes(samples * np);
    parallel_for(samples, opts.workers, [&](std::size_t k) {
        RandomSource rng = derive_rng(seed, k);
        const SlotSample slot = draw_slot(spec, params.front().alpha, extent, rng, opts.estimator);
        for (std::size_t q = 0; q < np; ++q) {
            const FieldContext ctx(slot.set, params[q], opts.cutoff);
            const auto area = detail::traced_area(ctx, slot.measured, cfg);
            outcomes[q * samples + k] = {slot.lambda, area.value_or(0.0), area.has_value()};
        }
    });
    for (std::size_t q = 0; q < np; ++q)
        out.push_back(detail::reduce(std::span(outcomes).subspan(q * samples, samples), seed, opts.max_failure_fraction));
    return out;
}

inline CapacityEstimate monte_carlo_capacity(const ProtocolSpec& spec, const SirParams& params, MapExtent extent,
                                             std::size_t samples, std::uint64_t seed, const TracerConfig& cfg = {},
                                             const MonteCarloOptions& opts = {}) {
    return monte_carlo_capacity_multi(spec, std::span(&params, 1), extent, samples, seed, cfg, opts)[0];
}

struct SweepRequest {
    std::vector<ProtocolSpec> protocols;
    std::vector<double> K_values;
    std::vector<double> alpha_values;
    std::optional<double> side; ///< map side; per-protocol default when empty
    std::size_t samples = 500;
    std::uint64_t seed = 0;
    TracerConfig tracer;
    MonteCarloOptions mc;
};

struct SweepRow {
    ProtocolKind protocol;
    double K;
    double alpha;
    CapacityEstimate estimate;
};

struct RatioRow {
    double K;
    double alpha;
    ProtocolKind protocol;
    double ratio_to_triangular;
};

struct SweepTable {
    std::vector<SweepRow> rows;     ///< sorted by K, alpha, then protocol
    std::vector<RatioRow> ratios;   ///< same order
};

/// Capacity over the Cartesian product of protocols, K values and alpha
/// values, plus every capacity divided by the triangular-grid capacity at the
/// same (K, alpha). ALOHA uses its closed form; grids one exact trace; the
/// exclusion protocols Monte Carlo with draws shared across K.
inline SweepTable sweep(const SweepRequest& req) {
    require(!req.protocols.empty(), "sweep needs at least one protocol");
    require(!req.K_values.empty() && !req.alpha_values.empty(), "sweep axes must be non-empty");
    for (const ProtocolSpec& p : req.protocols) p.validate();

    auto extent_for = [&](const ProtocolSpec& p) { return req.side ? MapExtent(*req.side) : default_extent(p); };
    std::map<std::pair<double, double>, std::map<ProtocolKind, CapacityEstimate>> cells;

    auto run = [&](const ProtocolSpec& spec) {
        if (spec.kind == ProtocolKind::aloha) {
            for (double K : req.K_values)
                for (double a : req.alpha_values) {
                    auto e = aloha_estimate(*spec.lambda, {K, a});
                    e.seed = req.seed;
                    cells[{K, a}][spec.kind] = e;
                }
            return;
        }
        if (is_grid(spec.kind)) {
            for (double K : req.K_values)
                for (double a : req.alpha_values) {
                    auto e = grid_capacity(grid_kind_of(spec.kind), {K, a}, *spec.d, extent_for(spec), req.tracer,
                                           req.mc.cutoff);
                    e.seed = req.seed;
                    cells[{K, a}][spec.kind] = e;
                }
            return;
        }
        std::vector<std::vector<SirParams>> groups;
        if (spec.kind == ProtocolKind::csma) {
            for (double a : req.alpha_values) {
                groups.emplace_back();
                for (double K : req.K_values) groups.back().push_back({K, a});
            }
        } else {
            groups.emplace_back();
            for (double a : req.alpha_values)
                for (double K : req.K_values) groups.back().push_back({K, a});
        }
        for (const auto& g : groups) {
            const auto est = monte_carlo_capacity_multi(spec, g, extent_for(spec), req.samples, req.seed, req.tracer, req.mc);
            for (std::size_t q = 0; q < g.size(); ++q) cells[{g[q].K, g[q].alpha}][spec.kind] = est[q];
        }
    };

    bool has_triangular = false;
    for (const ProtocolSpec& p : req.protocols) {
        run(p);
        has_triangular = has_triangular || p.kind == ProtocolKind::triangular;
    }
    std::map<std::pair<double, double>, double> reference;
    if (has_triangular) {
        for (auto& [key, m] : cells) reference[key] = m.at(ProtocolKind::triangular).capacity;
    } else {
        double d = 25.0;
        for (const ProtocolSpec& p : req.protocols)
            if (p.d) { d = *p.d; break; }
        const auto tri = ProtocolSpec::grid(ProtocolKind::triangular, d);
        for (auto& [key, m] : cells)
            reference[key] = grid_capacity(GridKind::triangular, {key.first, key.second}, d, extent_for(tri), req.tracer,
                                           req.mc.cutoff).capacity;
    }

    SweepTable table;
    for (const auto& [key, m] : cells) {
        for (ProtocolKind k : all_protocols) {
            const auto it = m.find(k);
            if (it == m.end()) continue;
            table.rows.push_back({k, key.first, key.second, it->second});
            table.ratios.push_back({key.first, key.second, k, it->second.capacity / reference.at(key)});
        }
    }
    return table;
}

/// Parses `start:stop:step` (inclusive, floats allowed) or a comma list.
inline std::vector<double> parse_axis(std::string_view text) {
    auto to_double = [](std::string_view s) {
        try {
            std::size_t used = 0;
            const std::string str(s);
            const double v = std::stod(str, &used);
            require(used == str.size(), "trailing characters in number: " + str);
            return v;
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::invalid_argument, "not a number: " + std::string(s));
        }
    };
    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        std::vector<double> parts;
        std::size_t pos = 0;
        while (true) {
            const std::size_t next = text.find(':', pos);
            parts.push_back(to_double(text.substr(pos, next - pos)));
            if (next == std::string_view::npos) break;
            pos = next + 1;
        }
        require(parts.size() == 3, "axis range must be start:stop:step");
        const double start = parts[0], stop = parts[1], step = parts[2];
        require(step > 0.0 && stop >= start, "axis range needs step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
        for (long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(',', pos);
        out.push_back(to_double(text.substr(pos, next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

} // namespace lcap
