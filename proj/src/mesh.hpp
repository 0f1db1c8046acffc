#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace afvm {

struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vertex {
    Vec2 pos;
    // Vertex ids of the edge whose bisection created this vertex,
    // {-1,-1} for vertices of the initial mesh. Ids stay stable across
    // refinement, so the chain is valid against any ancestor mesh.
    std::array<int, 2> parent_edge{-1, -1};
};

struct Triangle {
    std::array<int, 3> v{};
    // Local index of the reference edge; edge k joins v[k] and v[(k+1)%3].
    int ref_edge = 0;
};

// Undirected edge with its owning triangles. tri[1] == -1 on the boundary;
// for interior edges tri[0] < tri[1] and the stored orientation normal
// points from tri[0] into tri[1].
struct Edge {
    int a = -1, b = -1;
    std::array<int, 2> tri{-1, -1};
    std::array<int, 2> local{-1, -1};
    bool boundary() const { return tri[1] < 0; }
};

enum class DomainKind { unit_square_shifted, l_shape, unit_square };

class Mesh {
  public:
    std::vector<Vertex> vertices;
    std::vector<Triangle> triangles;
    int generation = 0;

    // Derived connectivity, filled by finalize().
    std::vector<Edge> edges;
    std::vector<std::array<int, 3>> tri_edges;  // per triangle, edge index per local edge
    std::vector<uint8_t> vertex_on_boundary;
    std::vector<std::vector<int>> vertex_tris;  // triangles incident to each vertex

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_interior_vertices() const;

    const Vec2& pos(int v) const { return vertices[v].pos; }
    Vec2 corner(int t, int k) const { return vertices[triangles[t].v[k]].pos; }

    double area(int t) const;
    Vec2 centroid(int t) const;
    double diameter(int t) const;
    double min_angle(int t) const;
    double total_area() const;

    // Builds edge connectivity and validates conformity; throws MeshError on
    // hanging nodes, degenerate or misoriented triangles.
    void finalize();
};

// Element size h_T = |T|^{1/2} per element plus the max over the mesh.
struct MeshSize {
    std::vector<double> h;
    double h_max = 0.0;
};

MeshSize mesh_size(const Mesh& mesh);

// sigma = max_T diam(T)/|T|^{1/2}
double shape_regularity(const Mesh& mesh);

Mesh build_initial_mesh(DomainKind domain, int subdivisions);

double domain_area(DomainKind domain);

struct Refinement {
    Mesh mesh;
    std::vector<int> parent;  // fine triangle -> index of its ancestor in the input mesh
};

// Newest-vertex bisection: every marked element is bisected at least once,
// closure keeps the result conforming and minimal under the child-tagging
// convention (children's reference edges oppose the new midpoint vertex).
Refinement refine(const Mesh& mesh, std::span<const int> marked);

// Bisects every edge; each element is replaced by four children
// (three bisections per input triangle).
Refinement uniform_refine(const Mesh& mesh);

// Text format "afvm-mesh v1"; see read_mesh for the accepted layout.
void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh_file(const Mesh& mesh, const std::string& path);
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

}  // namespace afvm
