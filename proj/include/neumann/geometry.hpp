#pragma once

// Small fixed-size linear algebra for planar fields: points, vectors and
// symmetric 2x2 matrices with a closed-form eigen decomposition.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace neumann {

inline constexpr double pi = std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

using Point = Vec2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }

inline Vec2 normalized(const Vec2& a)
{
    const double n = norm(a);
    return n > 0.0 ? a / n : Vec2{};
}

inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    constexpr double trace() const { return xx + yy; }
    constexpr double det() const { return xx * yy - xy * xy; }
    constexpr Vec2 operator*(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    friend constexpr Sym2 operator+(const Sym2& a, const Sym2& b) { return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy}; }
    friend constexpr Sym2 operator*(double s, const Sym2& a) { return {s * a.xx, s * a.xy, s * a.yy}; }
};

/// Symmetric outer product a b^T + b a^T scaled by 1/2.
constexpr Sym2 sym_outer(const Vec2& a, const Vec2& b)
{
    return {a.x * b.x, 0.5 * (a.x * b.y + a.y * b.x), a.y * b.y};
}

/// Eigenpairs of a symmetric matrix, ordered so that |values[0]| >= |values[1]|.
struct SymEigen {
    std::array<double, 2> values{};
    std::array<Vec2, 2> vectors{};
};

inline SymEigen eigen(const Sym2& m)
{
    const double mean = 0.5 * (m.xx + m.yy);
    const double half_diff = 0.5 * (m.xx - m.yy);
    const double radius = std::hypot(half_diff, m.xy);
    double l1 = mean + radius;
    double l2 = mean - radius;
    // Angle of the eigenvector belonging to l1.
    const double angle = 0.5 * std::atan2(2.0 * m.xy, m.xx - m.yy);
    Vec2 v1 = unit_vector(angle);
    Vec2 v2 = perp(v1);
    if (std::abs(l2) > std::abs(l1)) {
        std::swap(l1, l2);
        std::swap(v1, v2);
    }
    return {{l1, l2}, {v1, v2}};
}

/// Solves m x = b; returns false when m is numerically singular.
inline bool solve(const Sym2& m, const Vec2& b, Vec2& out)
{
    const double d = m.det();
    const double scale = std::max({std::abs(m.xx), std::abs(m.yy), std::abs(m.xy), 1e-300});
    if (std::abs(d) <= 1e-14 * scale * scale) return false;
    out = {(m.yy * b.x - m.xy * b.y) / d, (m.xx * b.y - m.xy * b.x) / d};
    return true;
}

/// Distance from p to the segment [a, b].
inline double segment_distance(const Point& p, const Point& a, const Point& b)
{
    const Vec2 ab = b - a;
    const double len2 = norm2(ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + t * ab);
}

/// True when the closed segments [p, q] and [a, b] intersect (collinear overlaps included).
inline bool segments_intersect(const Point& p, const Point& q, const Point& a, const Point& b)
{
    auto orient = [](const Point& o, const Point& s, const Point& t) {
        const double c = cross(s - o, t - o);
        return (c > 0.0) - (c < 0.0);
    };
    auto on_segment = [](const Point& o, const Point& s, const Point& t) {
        return std::min(o.x, s.x) <= t.x && t.x <= std::max(o.x, s.x) &&
               std::min(o.y, s.y) <= t.y && t.y <= std::max(o.y, s.y);
    };
    const int o1 = orient(p, q, a);
    const int o2 = orient(p, q, b);
    const int o3 = orient(a, b, p);
    const int o4 = orient(a, b, q);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p, q, a)) return true;
    if (o2 == 0 && on_segment(p, q, b)) return true;
    if (o3 == 0 && on_segment(a, b, p)) return true;
    if (o4 == 0 && on_segment(a, b, q)) return true;
    return false;
}

} // namespace neumann
