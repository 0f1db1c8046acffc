#include "mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace afvm {

namespace {

uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

}  // namespace

int Mesh::num_interior_vertices() const {
    int n = 0;
    for (uint8_t b : vertex_on_boundary) n += (b == 0);
    return n;
}

double Mesh::area(int t) const {
    const auto& tri = triangles[t];
    return signed_area(pos(tri.v[0]), pos(tri.v[1]), pos(tri.v[2]));
}

Vec2 Mesh::centroid(int t) const {
    const auto& tri = triangles[t];
    Vec2 c = pos(tri.v[0]) + pos(tri.v[1]) + pos(tri.v[2]);
    return c / 3.0;
}

double Mesh::diameter(int t) const {
    const auto& tri = triangles[t];
    double d = 0.0;
    for (int k = 0; k < 3; ++k)
        d = std::max(d, norm(pos(tri.v[k]) - pos(tri.v[(k + 1) % 3])));
    return d;
}

double Mesh::min_angle(int t) const {
    const auto& tri = triangles[t];
    double amin = M_PI;
    for (int k = 0; k < 3; ++k) {
        Vec2 u = pos(tri.v[(k + 1) % 3]) - pos(tri.v[k]);
        Vec2 w = pos(tri.v[(k + 2) % 3]) - pos(tri.v[k]);
        double ang = std::atan2(std::abs(cross(u, w)), dot(u, w));
        amin = std::min(amin, ang);
    }
    return amin;
}

double Mesh::total_area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t) s += area(t);
    return s;
}

void Mesh::finalize() {
    const int nt = num_triangles();
    const int nv = num_vertices();

    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles[t];
        for (int k = 0; k < 3; ++k) {
            if (tri.v[k] < 0 || tri.v[k] >= nv)
                throw MeshError("triangle " + std::to_string(t) + " has out-of-range vertex id");
            if (tri.v[k] == tri.v[(k + 1) % 3])
                throw MeshError("triangle " + std::to_string(t) + " has repeated vertices");
        }
        if (tri.ref_edge < 0 || tri.ref_edge > 2)
            throw MeshError("triangle " + std::to_string(t) + " has invalid reference edge");
        if (area(t) <= 0.0)
            throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
    }

    struct Entry {
        uint64_t key;
        int tri;
        int local;
    };
    std::vector<Entry> entries;
    entries.reserve(3 * static_cast<size_t>(nt));
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k)
            entries.push_back({edge_key(triangles[t].v[k], triangles[t].v[(k + 1) % 3]), t, k});
    std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
        if (l.key != r.key) return l.key < r.key;
        return l.tri < r.tri;
    });

    edges.clear();
    tri_edges.assign(nt, {-1, -1, -1});
    for (size_t i = 0; i < entries.size();) {
        size_t j = i;
        while (j < entries.size() && entries[j].key == entries[i].key) ++j;
        if (j - i > 2) throw MeshError("edge shared by more than two triangles");
        Edge e;
        e.a = static_cast<int>(entries[i].key >> 32);
        e.b = static_cast<int>(entries[i].key & 0xffffffffu);
        for (size_t k = i; k < j; ++k) {
            e.tri[k - i] = entries[k].tri;
            e.local[k - i] = entries[k].local;
        }
        int id = static_cast<int>(edges.size());
        for (size_t k = i; k < j; ++k) tri_edges[entries[k].tri][entries[k].local] = id;
        edges.push_back(e);
        i = j;
    }

    // A bisected edge whose parent is still present means a hanging node.
    for (int v = 0; v < nv; ++v) {
        const auto& pe = vertices[v].parent_edge;
        if (pe[0] < 0) continue;
        uint64_t key = edge_key(pe[0], pe[1]);
        auto it = std::lower_bound(edges.begin(), edges.end(), key,
                                   [](const Edge& e, uint64_t k) { return edge_key(e.a, e.b) < k; });
        if (it != edges.end() && edge_key(it->a, it->b) == key)
            throw MeshError("hanging node at vertex " + std::to_string(v));
    }

    vertex_on_boundary.assign(nv, 0);
    for (const Edge& e : edges) {
        if (e.boundary()) {
            vertex_on_boundary[e.a] = 1;
            vertex_on_boundary[e.b] = 1;
        }
    }

    vertex_tris.assign(nv, {});
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) vertex_tris[triangles[t].v[k]].push_back(t);
}

MeshSize mesh_size(const Mesh& mesh) {
    MeshSize ms;
    ms.h.resize(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        ms.h[t] = std::sqrt(mesh.area(t));
        ms.h_max = std::max(ms.h_max, ms.h[t]);
    }
    return ms;
}

double shape_regularity(const Mesh& mesh) {
    double sigma = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        sigma = std::max(sigma, mesh.diameter(t) / std::sqrt(mesh.area(t)));
    return sigma;
}

double domain_area(DomainKind domain) {
    switch (domain) {
        case DomainKind::unit_square_shifted: return 4.0;
        case DomainKind::l_shape: return 3.0;
        case DomainKind::unit_square: return 1.0;
    }
    return 0.0;
}

namespace {

// Longest edge, ties broken by the smallest opposite-vertex id.
void assign_reference_edges(Mesh& mesh) {
    for (auto& tri : mesh.triangles) {
        int best = 0;
        double best_len = -1.0;
        int best_opp = -1;
        for (int k = 0; k < 3; ++k) {
            Vec2 d = mesh.pos(tri.v[(k + 1) % 3]) - mesh.pos(tri.v[k]);
            double len = dot(d, d);
            int opp = tri.v[(k + 2) % 3];
            if (len > best_len || (len == best_len && opp < best_opp)) {
                best = k;
                best_len = len;
                best_opp = opp;
            }
        }
        tri.ref_edge = best;
    }
}

// Grid builder shared by the three domains. Vertices live on a lattice with
// spacing 0.5/k relative to unit cells so that cell corners and centers get
// distinct integer keys.
struct LatticeMesh {
    Mesh mesh;
    std::map<std::pair<int, int>, int> ids;
    double origin_x, origin_y, cell;

    int vertex(int ix2, int iy2) {
        auto it = ids.find({ix2, iy2});
        if (it != ids.end()) return it->second;
        int id = mesh.num_vertices();
        mesh.vertices.push_back({{origin_x + 0.5 * cell * ix2, origin_y + 0.5 * cell * iy2}, {-1, -1}});
        ids.emplace(std::make_pair(ix2, iy2), id);
        return id;
    }

    // Four triangles around the cell center (criss-cross pattern).
    void crisscross_cell(int cx, int cy) {
        int c00 = vertex(2 * cx, 2 * cy);
        int c10 = vertex(2 * cx + 2, 2 * cy);
        int c11 = vertex(2 * cx + 2, 2 * cy + 2);
        int c01 = vertex(2 * cx, 2 * cy + 2);
        int m = vertex(2 * cx + 1, 2 * cy + 1);
        mesh.triangles.push_back({{c00, c10, m}, 0});
        mesh.triangles.push_back({{c10, c11, m}, 0});
        mesh.triangles.push_back({{c11, c01, m}, 0});
        mesh.triangles.push_back({{c01, c00, m}, 0});
    }

    // Two triangles split along the lower-left/upper-right diagonal.
    void diagonal_cell(int cx, int cy) {
        int c00 = vertex(2 * cx, 2 * cy);
        int c10 = vertex(2 * cx + 2, 2 * cy);
        int c11 = vertex(2 * cx + 2, 2 * cy + 2);
        int c01 = vertex(2 * cx, 2 * cy + 2);
        mesh.triangles.push_back({{c00, c10, c11}, 0});
        mesh.triangles.push_back({{c00, c11, c01}, 0});
    }
};

}  // namespace

Mesh build_initial_mesh(DomainKind domain, int subdivisions) {
    if (subdivisions < 1) throw MeshError("subdivision count must be >= 1");
    const int k = subdivisions;
    LatticeMesh lat;
    switch (domain) {
        case DomainKind::unit_square_shifted:
            lat.origin_x = -1.0;
            lat.origin_y = -1.0;
            lat.cell = 1.0 / k;
            for (int cy = 0; cy < 2 * k; ++cy)
                for (int cx = 0; cx < 2 * k; ++cx) lat.crisscross_cell(cx, cy);
            break;
        case DomainKind::l_shape:
            lat.origin_x = -1.0;
            lat.origin_y = -1.0;
            lat.cell = 1.0 / k;
            // unit squares [-1,0]x[-1,0], [-1,0]x[0,1], [0,1]x[0,1]
            for (int cy = 0; cy < 2 * k; ++cy)
                for (int cx = 0; cx < 2 * k; ++cx) {
                    bool in_cut = cx >= k && cy < k;
                    if (!in_cut) lat.crisscross_cell(cx, cy);
                }
            break;
        case DomainKind::unit_square:
            lat.origin_x = 0.0;
            lat.origin_y = 0.0;
            lat.cell = 0.25 / k;
            for (int cy = 0; cy < 4 * k; ++cy)
                for (int cx = 0; cx < 4 * k; ++cx) lat.diagonal_cell(cx, cy);
            break;
    }
    Mesh mesh = std::move(lat.mesh);
    assign_reference_edges(mesh);
    mesh.finalize();
    return mesh;
}

namespace {

struct WorkTri {
    std::array<int, 3> v;
    int ref;
    std::array<int, 3> coarse_edge;  // coarse edge index per local edge, -1 for new edges
};

void emit_split(const WorkTri& w, const std::vector<uint8_t>& edge_marked,
                const std::vector<int>& edge_mid, int parent, Mesh& out,
                std::vector<int>& parent_map) {
    int er = w.coarse_edge[w.ref];
    if (er < 0 || !edge_marked[er]) {
        out.triangles.push_back({w.v, w.ref});
        parent_map.push_back(parent);
        return;
    }
    const int p = w.v[w.ref];
    const int q = w.v[(w.ref + 1) % 3];
    const int o = w.v[(w.ref + 2) % 3];
    const int m = edge_mid[er];
    const int e_next = w.coarse_edge[(w.ref + 1) % 3];  // edge (q,o)
    const int e_prev = w.coarse_edge[(w.ref + 2) % 3];  // edge (o,p)
    // Children's reference edges oppose the new vertex m.
    emit_split({{p, m, o}, 2, {-1, -1, e_prev}}, edge_marked, edge_mid, parent, out, parent_map);
    emit_split({{m, q, o}, 1, {-1, e_next, -1}}, edge_marked, edge_mid, parent, out, parent_map);
}

Refinement refine_edges(const Mesh& mesh, std::vector<uint8_t> edge_marked, bool closure) {
    if (closure) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (int t = 0; t < mesh.num_triangles(); ++t) {
                const auto& te = mesh.tri_edges[t];
                int re = te[mesh.triangles[t].ref_edge];
                if (edge_marked[re]) continue;
                if (edge_marked[te[0]] || edge_marked[te[1]] || edge_marked[te[2]]) {
                    edge_marked[re] = 1;
                    changed = true;
                }
            }
        }
    }

    Refinement result;
    Mesh& out = result.mesh;
    out.vertices = mesh.vertices;
    out.generation = mesh.generation + 1;

    std::vector<int> edge_mid(mesh.edges.size(), -1);
    for (size_t e = 0; e < mesh.edges.size(); ++e) {
        if (!edge_marked[e]) continue;
        const Edge& edge = mesh.edges[e];
        edge_mid[e] = out.num_vertices();
        out.vertices.push_back({midpoint(mesh.pos(edge.a), mesh.pos(edge.b)),
                                {std::min(edge.a, edge.b), std::max(edge.a, edge.b)}});
    }

    out.triangles.reserve(mesh.triangles.size());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        emit_split({tri.v, tri.ref_edge, mesh.tri_edges[t]}, edge_marked, edge_mid, t, out,
                   result.parent);
    }
    out.finalize();
    return result;
}

}  // namespace

Refinement refine(const Mesh& mesh, std::span<const int> marked) {
    std::vector<uint8_t> edge_marked(mesh.edges.size(), 0);
    for (int t : marked) {
        if (t < 0 || t >= mesh.num_triangles())
            throw MeshError("marked element " + std::to_string(t) + " out of range");
        edge_marked[mesh.tri_edges[t][mesh.triangles[t].ref_edge]] = 1;
    }
    return refine_edges(mesh, std::move(edge_marked), true);
}

Refinement uniform_refine(const Mesh& mesh) {
    std::vector<uint8_t> edge_marked(mesh.edges.size(), 1);
    return refine_edges(mesh, std::move(edge_marked), false);
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
    out << "afvm-mesh v1\n";
    out << "vertices " << mesh.num_vertices() << "\n";
    char buf[80];
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", v, mesh.pos(v).x, mesh.pos(v).y);
        out << buf;
    }
    out << "triangles " << mesh.num_triangles() << "\n";
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        out << t << ' ' << tri.v[0] << ' ' << tri.v[1] << ' ' << tri.v[2] << ' ' << tri.ref_edge
            << "\n";
    }
    int nb = 0;
    for (const Edge& e : mesh.edges) nb += e.boundary();
    out << "boundary " << nb << "\n";
    for (const Edge& e : mesh.edges)
        if (e.boundary()) out << e.a << ' ' << e.b << " 1\n";
}

void write_mesh_file(const Mesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw MeshError("cannot open mesh file for writing: " + path);
    write_mesh(mesh, f);
    if (!f) throw MeshError("write failure on mesh file: " + path);
}

namespace {

std::string next_token(std::istream& in, const char* what) {
    std::string tok;
    if (!(in >> tok)) throw MeshError(std::string("mesh file truncated, expected ") + what);
    return tok;
}

long read_count(std::istream& in, const char* section) {
    std::string kw = next_token(in, section);
    if (kw != section) throw MeshError(std::string("expected section '") + section + "', got '" + kw + "'");
    long n;
    if (!(in >> n) || n < 0) throw MeshError(std::string("bad count in section ") + section);
    return n;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
    std::string magic = next_token(in, "header");
    std::string version = next_token(in, "version");
    if (magic != "afvm-mesh" || version != "v1")
        throw MeshError("not an afvm-mesh v1 file");

    Mesh mesh;
    long nv = read_count(in, "vertices");
    mesh.vertices.resize(nv);
    std::vector<uint8_t> seen(nv, 0);
    for (long i = 0; i < nv; ++i) {
        long id;
        double x, y;
        if (!(in >> id >> x >> y)) throw MeshError("bad vertex line");
        if (id < 0 || id >= nv || seen[id]) throw MeshError("vertex ids must be dense 0..N-1");
        if (!std::isfinite(x) || !std::isfinite(y)) throw MeshError("non-finite vertex coordinate");
        seen[id] = 1;
        mesh.vertices[id] = {{x, y}, {-1, -1}};
    }

    long nt = read_count(in, "triangles");
    mesh.triangles.resize(nt);
    seen.assign(nt, 0);
    for (long i = 0; i < nt; ++i) {
        long id, v0, v1, v2, ref;
        if (!(in >> id >> v0 >> v1 >> v2 >> ref)) throw MeshError("bad triangle line");
        if (id < 0 || id >= nt || seen[id]) throw MeshError("triangle ids must be dense 0..M-1");
        seen[id] = 1;
        mesh.triangles[id] = {{static_cast<int>(v0), static_cast<int>(v1), static_cast<int>(v2)},
                              static_cast<int>(ref)};
    }

    long nb = read_count(in, "boundary");
    std::vector<std::pair<uint64_t, int>> listed;
    for (long i = 0; i < nb; ++i) {
        long a, b, marker;
        if (!(in >> a >> b >> marker)) throw MeshError("bad boundary line");
        if (marker != 1) throw MeshError("unsupported boundary marker (only 1 = Dirichlet)");
        listed.emplace_back(edge_key(static_cast<int>(a), static_cast<int>(b)), static_cast<int>(marker));
    }

    mesh.finalize();

    std::sort(listed.begin(), listed.end());
    std::vector<uint64_t> derived;
    for (const Edge& e : mesh.edges)
        if (e.boundary()) derived.push_back(edge_key(e.a, e.b));
    std::sort(derived.begin(), derived.end());
    if (listed.size() != derived.size())
        throw MeshError("boundary section does not match mesh boundary");
    for (size_t i = 0; i < derived.size(); ++i)
        if (listed[i].first != derived[i])
            throw MeshError("boundary section does not match mesh boundary");
    return mesh;
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MeshError("cannot open mesh file: " + path);
    return read_mesh(f);
}

}  // namespace afvm
