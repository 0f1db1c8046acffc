#include <doctest.h>

#include <cmath>
#include <map>

#include "dual_mesh.hpp"
#include "test_support.hpp"

using namespace afvm;
using afvm_test::randomly_refined;
using afvm_test::single_triangle;

TEST_SUITE("dual_mesh") {

TEST_CASE("reference triangle splits into three equal corner volumes") {
    Mesh mesh = single_triangle({0, 0}, {1, 0}, {0, 1});
    DualMesh dual = build_dual_mesh(mesh);
    for (int k = 0; k < 3; ++k)
        CHECK(dual.sub_volume[0][k] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    for (int v = 0; v < 3; ++v) CHECK(dual.boxes[v].size() == 2);
}

TEST_CASE("boxes partition the domain") {
    for (DomainKind domain :
         {DomainKind::unit_square_shifted, DomainKind::l_shape, DomainKind::unit_square}) {
        Mesh mesh = randomly_refined(build_initial_mesh(domain, 1), 4);
        DualMesh dual = build_dual_mesh(mesh);
        double total = 0.0;
        for (double a : dual.box_area) total += a;
        CHECK(total == doctest::Approx(domain_area(domain)).epsilon(1e-12));
    }
}

TEST_CASE("every corner volume is one third of its element") {
    Mesh mesh = randomly_refined(build_initial_mesh(DomainKind::l_shape, 1), 4);
    DualMesh dual = build_dual_mesh(mesh);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        double third = mesh.area(t) / 3.0;
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(dual.sub_volume[t][k] - third) <= 1e-13 * third);
    }
}

TEST_CASE("interior vertex of valence 6 owns 12 flux segments") {
    Mesh mesh = build_initial_mesh(DomainKind::unit_square, 1);
    DualMesh dual = build_dual_mesh(mesh);
    bool found = false;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.vertex_on_boundary[v]) continue;
        CHECK(mesh.vertex_tris[v].size() == 6);
        CHECK(dual.boxes[v].size() == 12);
        found = true;
    }
    CHECK(found);
}

TEST_CASE("interior flux segments pair up with opposite normals") {
    Mesh mesh = randomly_refined(build_initial_mesh(DomainKind::unit_square_shifted, 1), 3);
    DualMesh dual = build_dual_mesh(mesh);

    struct Key {
        int tri;
        double x, y;  // segment midpoint identifies it within the triangle
        bool operator<(const Key& o) const {
            return std::tie(tri, x, y) < std::tie(o.tri, o.x, o.y);
        }
    };
    std::map<Key, std::vector<Vec2>> normals;
    for (const auto& box : dual.boxes)
        for (const DualSegment& s : box)
            normals[{s.tri, s.mid.x, s.mid.y}].push_back(s.normal);

    for (const auto& [key, ns] : normals) {
        REQUIRE(ns.size() == 2);
        CHECK(std::abs(ns[0].x + ns[1].x) <= 1e-14);
        CHECK(std::abs(ns[0].y + ns[1].y) <= 1e-14);
    }
}

TEST_CASE("segment normals point out of their box") {
    Mesh mesh = build_initial_mesh(DomainKind::l_shape, 1);
    DualMesh dual = build_dual_mesh(mesh);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        for (const DualSegment& s : dual.boxes[v]) {
            CHECK(dot(s.normal, s.mid - mesh.pos(v)) > 0.0);
            CHECK(norm(s.normal) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(s.length == doctest::Approx(norm(s.b - s.a)).epsilon(1e-14));
        }
}

}  // TEST_SUITE
