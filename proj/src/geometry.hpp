#pragma once

#include <array>
#include <cmath>

namespace afvm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::sqrt(dot(v, v)); }

inline Vec2 midpoint(const Vec2& a, const Vec2& b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

// Signed area of triangle (a,b,c); positive for counterclockwise orientation.
inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * cross(b - a, c - a);
}

// Symmetric 2x2 matrix in row-major order {a00, a01, a10, a11}.
using Mat2 = std::array<double, 4>;

inline Vec2 mat_vec(const Mat2& m, const Vec2& v) {
    return {m[0] * v.x + m[1] * v.y, m[2] * v.x + m[3] * v.y};
}

}  // namespace afvm
