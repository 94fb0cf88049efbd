#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lcap/geometry.hpp"

namespace lcap {

/// Uniform square bucketing of a region. Points outside the region are
/// clamped into the border cells, so queries stay correct (just slower).
class CellGrid {
public:
    CellGrid() = default;
    CellGrid(Point lo, double span, double cell) : lo_(lo), cell_(cell) {
        n_ = std::max<long>(1, static_cast<long>(std::ceil(span / cell)));
        // cap memory for tiny cells on huge maps
        while (n_ > 4096) {
            cell_ *= 2.0;
            n_ = std::max<long>(1, static_cast<long>(std::ceil(span / cell_)));
        }
    }

    long cells_per_side() const { return n_; }
    double cell_size() const { return cell_; }
    std::size_t cell_count() const { return static_cast<std::size_t>(n_ * n_); }

    long coord(double v, double lo) const {
        const long c = static_cast<long>(std::floor((v - lo) / cell_));
        return std::clamp(c, 0L, n_ - 1);
    }
    long cx(double x) const { return coord(x, lo_.x); }
    long cy(double y) const { return coord(y, lo_.y); }
    std::size_t cell_of(Point p) const { return static_cast<std::size_t>(cy(p.y) * n_ + cx(p.x)); }

    /// Calls fn(cell_index) for every cell intersecting the axis-aligned box
    /// of half-width r around z.
    template <class Fn>
    void for_cells_near(Point z, double r, Fn&& fn) const {
        const long x0 = cx(z.x - r), x1 = cx(z.x + r);
        const long y0 = cy(z.y - r), y1 = cy(z.y + r);
        for (long y = y0; y <= y1; ++y)
            for (long x = x0; x <= x1; ++x) fn(static_cast<std::size_t>(y * n_ + x));
    }

private:
    Point lo_{};
    double cell_ = 1.0;
    long n_ = 1;
};

/// Immutable compressed bucket index over a fixed point list.
class StaticIndex {
public:
    StaticIndex() = default;
    StaticIndex(std::span<const Point> pts, Point lo, double span, double cell)
        : grid_(lo, span, cell) {
        start_.assign(grid_.cell_count() + 1, 0);
        for (const Point& p : pts) ++start_[grid_.cell_of(p) + 1];
        for (std::size_t c = 0; c < grid_.cell_count(); ++c) start_[c + 1] += start_[c];
        items_.resize(pts.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[grid_.cell_of(pts[i])]++] = i;
    }

    const CellGrid& grid() const { return grid_; }

    template <class Fn>
    void for_each_near(Point z, double r, Fn&& fn) const {
        grid_.for_cells_near(z, r, [&](std::size_t c) {
            for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) fn(items_[k]);
        });
    }

private:
    CellGrid grid_;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> items_;
};

} // namespace lcap
