#pragma once

#include <cmath>

namespace lcap {

/// Location (or displacement) on the plane, in meters.
struct Point {
    double x = 0.0;
    double y = 0.0;

    constexpr Point& operator+=(Point o) { x += o.x; y += o.y; return *this; }
    constexpr Point& operator-=(Point o) { x -= o.x; y -= o.y; return *this; }
    constexpr Point& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point operator-(Point a) { return {-a.x, -a.y}; }
    friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    friend constexpr Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr Point operator/(Point a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Point, Point) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

/// det(a, b) = a.x*b.y - a.y*b.x, the signed parallelogram area.
constexpr double det(Point a, Point b) { return a.x * b.y - a.y * b.x; }

constexpr double norm2(Point a) { return dot(a, a); }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Clockwise quarter turn, [[0, 1], [-1, 0]]. Applied to the inward normal
/// of a reception boundary it yields the counter-clockwise tangent.
constexpr Point rotate_cw(Point v) { return {v.y, -v.x}; }

inline Point rotate(Point v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct Mat2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    constexpr double trace() const { return xx + yy; }
    double frobenius() const { return std::sqrt(xx * xx + xy * xy + yx * yx + yy * yy); }

    friend constexpr Mat2 operator+(Mat2 a, Mat2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy}; }
    friend constexpr Mat2 operator-(Mat2 a, Mat2 b) { return {a.xx - b.xx, a.xy - b.xy, a.yx - b.yx, a.yy - b.yy}; }
    friend constexpr Mat2 operator*(double s, Mat2 a) { return {s * a.xx, s * a.xy, s * a.yx, s * a.yy}; }
};

/// Outer product a ⊗ b: (a ⊗ b)_rc = a_r * b_c.
constexpr Mat2 outer(Point a, Point b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }

} // namespace lcap
