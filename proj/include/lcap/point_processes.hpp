#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lcap/error.hpp"
#include "lcap/geometry.hpp"
#include "lcap/random.hpp"

namespace lcap {

/// Square map of the given side, centered at the origin.
struct MapExtent {
    double side = 0.0;

    explicit MapExtent(double s = 1.0) : side(s) {
        require(std::isfinite(s) && s > 0.0, "map side must be positive");
    }

    double half() const { return 0.5 * side; }
    double area() const { return side * side; }
    Point lo() const { return {-half(), -half()}; }
    bool contains(Point p) const { return std::abs(p.x) <= half() && std::abs(p.y) <= half(); }
};

/// Simultaneous transmitters of one slot.
struct TransmitterSet {
    std::vector<Point> points;
    MapExtent extent;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Whole node population from which an exclusion protocol picks transmitters.
struct NodeSet {
    std::vector<Point> points;
    MapExtent extent;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

enum class GridKind { square, hexagonal, triangular };

inline constexpr std::array<GridKind, 3> all_grid_kinds{GridKind::triangular, GridKind::square,
                                                         GridKind::hexagonal};

inline std::string_view to_string(GridKind k) {
    switch (k) {
    case GridKind::square: return "square";
    case GridKind::hexagonal: return "hexagonal";
    case GridKind::triangular: return "triangular";
    }
    return "?";
}

/// Density of the infinite lattice whose nearest-neighbour distance is d.
inline double lattice_density(GridKind kind, double d) {
    switch (kind) {
    case GridKind::square: return 1.0 / (d * d);
    case GridKind::triangular: return 2.0 / (std::numbers::sqrt3 * d * d);
    case GridKind::hexagonal: return 4.0 / (3.0 * std::numbers::sqrt3 * d * d);
    }
    return 0.0;
}

namespace detail {

struct Lattice {
    Point a1, a2;
    std::vector<Point> basis;
};

inline Lattice lattice_of(GridKind kind, double d) {
    const double h = std::numbers::sqrt3 * d;
    switch (kind) {
    case GridKind::square: return {{d, 0.0}, {0.0, d}, {{0.0, 0.0}}};
    case GridKind::triangular: return {{d, 0.0}, {0.5 * d, 0.5 * h}, {{0.0, 0.0}}};
    // honeycomb: two-point basis, every site has three neighbours at d
    case GridKind::hexagonal: return {{h, 0.0}, {0.5 * h, 1.5 * d}, {{0.0, 0.0}, {0.0, d}}};
    }
    return {};
}

} // namespace detail

/// All lattice points of the given kind inside the extent. One site sits at
/// the origin and the nearest-neighbour distance is exactly d.
inline TransmitterSet generate_grid(GridKind kind, double d, MapExtent extent) {
    require(std::isfinite(d) && d > 0.0, "grid spacing d must be positive");
    require(extent.side >= 4.0 * d, "map side must be at least 4 d");

    const auto lat = detail::lattice_of(kind, d);
    const double half = extent.half() + 1e-9 * d;
    TransmitterSet out{{}, extent};
    const long jmax = static_cast<long>(std::ceil(half / lat.a2.y)) + 2;
    for (long j = -jmax; j <= jmax; ++j) {
        for (const Point& b : lat.basis) {
            const double y = static_cast<double>(j) * lat.a2.y + b.y;
            if (std::abs(y) > half) continue;
            const double shift = static_cast<double>(j) * lat.a2.x + b.x;
            const long i0 = static_cast<long>(std::ceil((-half - shift) / lat.a1.x));
            const long i1 = static_cast<long>(std::floor((half - shift) / lat.a1.x));
            for (long i = i0; i <= i1; ++i) out.points.push_back({static_cast<double>(i) * lat.a1.x + shift, y});
        }
    }
    if (out.points.size() < 9) throw Error(ErrorKind::degenerate_extent, "extent holds fewer than 9 grid points");
    return out;
}

/// Number of points per square meter of map.
inline double density(const TransmitterSet& s) {
    require(s.extent.side > 0.0, "extent side must be positive");
    return static_cast<double>(s.points.size()) / s.extent.area();
}

/// Fraction of the map covered by disks of radius d/2 around transmitters.
inline double packing_density(const TransmitterSet& s, double d) {
    return std::numbers::pi * density(s) * 0.25 * d * d;
}

namespace detail {

inline std::vector<Point> uniform_points(double mean_count, MapExtent extent, RandomSource& rng) {
    std::poisson_distribution<long long> count(mean_count);
    const long long n = count(rng);
    std::uniform_real_distribution<double> u(-extent.half(), extent.half());
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) {
        const double x = u(rng);
        const double y = u(rng);
        pts.push_back({x, y});
    }
    return pts;
}

inline std::vector<Point> shuffled(const std::vector<Point>& pts, RandomSource& rng) {
    std::vector<Point> out(pts);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

/// Flat bucket grid sized so a cell's diagonal equals the exclusion radius;
/// cells then rarely hold more than one admitted transmitter. Extra
/// occupants are chained through next_.
class OccupancyGrid {
public:
    OccupancyGrid(const MapExtent& extent, double exclusion)
        : lo_(extent.lo()), cell_(exclusion / std::sqrt(2.0)) {
        n_ = std::max<long>(1, static_cast<long>(std::ceil(extent.side / cell_)));
        if (n_ > 8192) { // very small exclusion radius on a big map
            n_ = 8192;
            cell_ = extent.side / static_cast<double>(n_);
        }
        slots_.assign(static_cast<std::size_t>(n_ * n_), empty_slot);
    }

    long n() const { return n_; }
    double cell() const { return cell_; }
    long coord(double v, double lo) const {
        return std::clamp(static_cast<long>(std::floor((v - lo) / cell_)), 0L, n_ - 1);
    }
    long cx(double x) const { return coord(x, lo_.x); }
    long cy(double y) const { return coord(y, lo_.y); }

    /// Most recent transmitter id stored in a cell, or empty_slot.
    std::size_t at(long x, long y) const { return slots_[static_cast<std::size_t>(y * n_ + x)]; }
    std::size_t next(std::size_t id) const { return next_[id]; }

    void insert(Point p, std::size_t id) {
        std::size_t& slot = slots_[static_cast<std::size_t>(cy(p.y) * n_ + cx(p.x))];
        if (next_.size() <= id) next_.resize(id + 1, empty_slot);
        next_[id] = slot;
        slot = id;
    }

    static constexpr std::size_t empty_slot = static_cast<std::size_t>(-1);

private:
    Point lo_;
    double cell_;
    long n_ = 1;
    std::vector<std::size_t> slots_;
    std::vector<std::size_t> next_;
};

/// r2^(-e) for e = alpha / 2, multiplies only when e is a small integer.
inline double inverse_power(double r2, double e) {
    if (e == 2.0) return 1.0 / (r2 * r2);
    if (e == 3.0) return 1.0 / (r2 * r2 * r2);
    return std::pow(r2, -e);
}

} // namespace detail

/// Homogeneous Poisson process of intensity lambda over the map.
inline TransmitterSet sample_poisson(double lambda, MapExtent extent, RandomSource& rng) {
    require(std::isfinite(lambda) && lambda > 0.0, "Poisson intensity must be positive");
    return {detail::uniform_points(lambda * extent.area(), extent, rng), extent};
}

/// Backlogged node population, uniformly scattered.
inline NodeSet sample_uniform_nodes(double node_density, MapExtent extent, RandomSource& rng) {
    require(std::isfinite(node_density) && node_density > 0.0, "node density must be positive");
    return {detail::uniform_points(node_density * extent.area(), extent, rng), extent};
}

/// Node-coloring slot: random sequential admission with exclusion distance d.
/// Visiting nodes in a uniformly random order and admitting a node iff no
/// already-admitted node is closer than d is the same process as repeatedly
/// picking a random survivor and deleting its d-neighbourhood.
inline TransmitterSet sample_coloring(const NodeSet& nodes, double d, RandomSource& rng) {
    require(std::isfinite(d) && d > 0.0, "exclusion distance must be positive");
    TransmitterSet out{{}, nodes.extent};
    if (nodes.empty()) return out;

    const auto order = detail::shuffled(nodes.points, rng);
    detail::OccupancyGrid grid(nodes.extent, d);
    const long n = grid.n();
    const long reach = static_cast<long>(std::ceil(d / grid.cell()));
    const double d2 = d * d;
    for (const Point& p : order) {
        const long px = grid.cx(p.x), py = grid.cy(p.y);
        bool blocked = false;
        for (long y = std::max(0L, py - reach); y <= std::min(n - 1, py + reach) && !blocked; ++y)
            for (long x = std::max(0L, px - reach); x <= std::min(n - 1, px + reach); ++x) {
                for (std::size_t id = grid.at(x, y); id != detail::OccupancyGrid::empty_slot; id = grid.next(id))
                    if (norm2(out.points[id] - p) < d2) { blocked = true; break; }
                if (blocked) break;
            }
        if (blocked) continue;
        grid.insert(p, out.points.size());
        out.points.push_back(p);
    }
    return out;
}

struct CsmaOptions {
    /// Admitted transmitters farther than the radius at which a single one
    /// contributes relative_cutoff * theta are ignored. Zero disables truncation.
    double relative_cutoff = 1e-3;
};

/// Radius beyond which one transmitter contributes less than theta * relative_cutoff.
inline double csma_interference_radius(double theta, double alpha, double relative_cutoff) {
    if (relative_cutoff <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(theta * relative_cutoff, -1.0 / alpha);
}

/// Bound on the power from transmitters of density lambda beyond radius r.
inline double interference_tail_bound(double lambda, double r, double alpha) {
    return 2.0 * std::numbers::pi * lambda * std::pow(r, 2.0 - alpha) / (alpha - 2.0);
}

/// CSMA slot: nodes in random order join unless the summed power sensed from
/// transmitters admitted so far reaches theta. Admitted nodes never re-check.
inline TransmitterSet sample_csma(const NodeSet& nodes, double theta, double alpha, RandomSource& rng,
                                  CsmaOptions opts = {}) {
    require(std::isfinite(theta) && theta > 0.0, "carrier-sense threshold must be positive");
    require(std::isfinite(alpha) && alpha > 2.0, "attenuation coefficient must exceed 2");
    TransmitterSet out{{}, nodes.extent};
    if (nodes.empty()) return out;

    const auto order = detail::shuffled(nodes.points, rng);
    const double radius = csma_interference_radius(theta, alpha, opts.relative_cutoff);
    const double radius2 = radius * radius;
    // any two admitted nodes are farther apart than the single-source radius
    detail::OccupancyGrid grid(nodes.extent, std::pow(theta, -1.0 / alpha));
    const long n = grid.n();
    const double cell = grid.cell();

    // cell offsets by increasing lower bound on distance, so the sum usually
    // crosses theta after a handful of cells
    struct Offset { long dx, dy; double min_dist; };
    std::vector<Offset> offsets;
    const long reach = std::isfinite(radius) ? std::min(n, static_cast<long>(std::ceil(radius / cell)) + 1) : n;
    for (long dy = -reach; dy <= reach; ++dy)
        for (long dx = -reach; dx <= reach; ++dx) {
            const double gx = static_cast<double>(std::max(std::abs(dx) - 1, 0L));
            const double gy = static_cast<double>(std::max(std::abs(dy) - 1, 0L));
            const double md = cell * std::hypot(gx, gy);
            if (md <= radius) offsets.push_back({dx, dy, md});
        }
    std::stable_sort(offsets.begin(), offsets.end(),
                     [](const Offset& a, const Offset& b) { return a.min_dist < b.min_dist; });

    // powers are taken relative to the single-source radius rho = theta^(-1/alpha),
    // so the admission test becomes sensed < 1 and large alpha cannot underflow
    const double rho2 = std::pow(theta, -2.0 / alpha);
    const double inv_rho2 = 1.0 / rho2;
    const double half_alpha = 0.5 * alpha;
    for (const Point& p : order) {
        const long px = grid.cx(p.x), py = grid.cy(p.y);
        double sensed = 0.0;
        for (const Offset& o : offsets) {
            const long x = px + o.dx, y = py + o.dy;
            if (x < 0 || y < 0 || x >= n || y >= n) continue;
            for (std::size_t id = grid.at(x, y); id != detail::OccupancyGrid::empty_slot; id = grid.next(id)) {
                const double r2 = norm2(out.points[id] - p);
                if (r2 <= radius2) sensed += detail::inverse_power(r2 * inv_rho2, half_alpha);
            }
            if (sensed >= 1.0) break;
        }
        if (sensed >= 1.0) continue;
        grid.insert(p, out.points.size());
        out.points.push_back(p);
    }
    return out;
}

// CSV: header `x,y`, 9 significant digits.

inline void write_points_csv(std::ostream& os, const std::vector<Point>& pts) {
    os << "x,y\n";
    char buf[64];
    for (const Point& p : pts) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", p.x, p.y);
        os << buf;
    }
}

inline std::vector<Point> read_points_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,y", 0) != 0)
        throw Error(ErrorKind::invalid_argument, "expected CSV header x,y");
    std::vector<Point> pts;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        Point p;
        char comma = 0;
        if (!(row >> p.x >> comma >> p.y) || comma != ',' || !is_finite(p))
            throw Error(ErrorKind::invalid_argument, "malformed CSV row: " + line);
        pts.push_back(p);
    }
    return pts;
}

} // namespace lcap
