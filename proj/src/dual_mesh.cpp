#include "dual_mesh.hpp"

namespace afvm {

namespace {

// Outward normal of the directed side p->q of a counterclockwise polygon.
Vec2 outward_normal(const Vec2& p, const Vec2& q, double len) {
    Vec2 d = q - p;
    return {d.y / len, -d.x / len};
}

}  // namespace

std::array<Vec2, 4> corner_quad(const Mesh& mesh, int t, int k) {
    const auto& tri = mesh.triangles[t];
    Vec2 a = mesh.pos(tri.v[k]);
    Vec2 m1 = midpoint(a, mesh.pos(tri.v[(k + 1) % 3]));  // midpoint of edge k
    Vec2 c = mesh.centroid(t);
    Vec2 m2 = midpoint(mesh.pos(tri.v[(k + 2) % 3]), a);  // midpoint of edge (k+2)%3
    return {a, m1, c, m2};
}

DualMesh build_dual_mesh(const Mesh& mesh) {
    DualMesh dual;
    const int nv = mesh.num_vertices();
    dual.boxes.resize(nv);
    dual.box_area.assign(nv, 0.0);
    dual.sub_volume.assign(mesh.num_triangles(), {0.0, 0.0, 0.0});
    dual.interior.resize(nv);
    for (int v = 0; v < nv; ++v) dual.interior[v] = !mesh.vertex_on_boundary[v];

    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        Vec2 c = mesh.centroid(t);
        Vec2 mid_edge[3];
        for (int k = 0; k < 3; ++k)
            mid_edge[k] = midpoint(mesh.pos(tri.v[k]), mesh.pos(tri.v[(k + 1) % 3]));

        for (int k = 0; k < 3; ++k) {
            // Walking counterclockwise around the box of v[k] inside T:
            // v[k] -> mid_edge[k] -> c -> mid_edge[(k+2)%3] -> v[k].
            int vk = tri.v[k];
            Vec2 a = mesh.pos(vk);
            Vec2 m1 = mid_edge[k];
            Vec2 m2 = mid_edge[(k + 2) % 3];

            double l1 = norm(c - m1);
            double l2 = norm(m2 - c);
            dual.boxes[vk].push_back({m1, c, midpoint(m1, c), outward_normal(m1, c, l1), l1, t});
            dual.boxes[vk].push_back({c, m2, midpoint(c, m2), outward_normal(c, m2, l2), l2, t});

            // Area of the quadrilateral (a, m1, c, m2), evaluated in
            // coordinates local to the vertex so tiny far-from-origin quads
            // lose no digits: algebraically this is cross(u,w)/6 = |T|/3.
            Vec2 u = mesh.pos(tri.v[(k + 1) % 3]) - a;
            Vec2 w = mesh.pos(tri.v[(k + 2) % 3]) - a;
            Vec2 cl = (u + w) / 3.0;
            double area = 0.5 * (cross(u * 0.5, cl) + cross(cl, w * 0.5));
            dual.sub_volume[t][k] = area;
            dual.box_area[vk] += area;
        }
    }
    return dual;
}

}  // namespace afvm
