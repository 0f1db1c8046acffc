#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"

namespace afvm {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rule on the reference triangle (0,0),(1,0),(0,1); points in barycentric
// coordinates, weights sum to the reference measure 1/2.
struct TriQuadrature {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
};

// Rule on [0,1]; weights sum to 1.
struct SegQuadrature {
    int degree = 0;
    std::vector<double> points;
    std::vector<double> weights;
};

// Exact for polynomials up to `degree`, degree in [1,10].
TriQuadrature triangle_quadrature(int degree);
SegQuadrature segment_quadrature(int degree);

inline Vec2 map_barycentric(const std::array<double, 3>& bary, const Vec2& a, const Vec2& b,
                            const Vec2& c) {
    return {bary[0] * a.x + bary[1] * b.x + bary[2] * c.x,
            bary[0] * a.y + bary[1] * b.y + bary[2] * c.y};
}

// Integrates fn(point) over the physical triangle (a,b,c).
template <class Fn>
double integrate_triangle(const TriQuadrature& rule, const Vec2& a, const Vec2& b, const Vec2& c,
                          Fn&& fn) {
    double scale = 2.0 * signed_area(a, b, c);
    double sum = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q)
        sum += rule.weights[q] * fn(map_barycentric(rule.points[q], a, b, c));
    return scale * sum;
}

// Integrates fn(point) over the physical segment [a,b].
template <class Fn>
double integrate_segment(const SegQuadrature& rule, const Vec2& a, const Vec2& b, Fn&& fn) {
    double len = norm(b - a);
    double sum = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q) {
        double t = rule.points[q];
        sum += rule.weights[q] * fn(Vec2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
    return len * sum;
}

}  // namespace afvm
