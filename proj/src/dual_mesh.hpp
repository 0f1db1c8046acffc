#pragma once

#include <vector>

#include "mesh.hpp"

namespace afvm {

// One piece of a control-volume boundary: the straight segment between an
// edge midpoint and the centroid of the owning triangle, traversed
// counterclockwise around the box so that `normal` points out of the box.
struct DualSegment {
    Vec2 a, b;
    Vec2 mid;
    Vec2 normal;
    double length = 0.0;
    int tri = -1;
};

// Box mesh: one control volume per vertex, assembled from two segments per
// incident triangle. Boxes of boundary vertices are closed by parts of the
// domain boundary which carry no flux segments.
struct DualMesh {
    std::vector<std::vector<DualSegment>> boxes;       // per vertex
    std::vector<double> box_area;                      // |V_i|
    std::vector<std::array<double, 3>> sub_volume;     // |V_i ∩ T| per (triangle, local corner)
    std::vector<uint8_t> interior;                     // box of an interior vertex
};

DualMesh build_dual_mesh(const Mesh& mesh);

// Corners of the quadrilateral V_i ∩ T for local corner k of triangle t,
// in counterclockwise order starting at the vertex itself.
std::array<Vec2, 4> corner_quad(const Mesh& mesh, int t, int k);

}  // namespace afvm
