#include "estimator.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

namespace afvm {

namespace {

Vec2 div_A_at(const Problem& problem, Vec2 x, double fd_step) {
    if (problem.div_A) return problem.div_A(x);
    double s = fd_step;
    Mat2 axp = problem.A({x.x + s, x.y}), axm = problem.A({x.x - s, x.y});
    Mat2 ayp = problem.A({x.x, x.y + s}), aym = problem.A({x.x, x.y - s});
    return {(axp[0] - axm[0]) / (2 * s) + (ayp[1] - aym[1]) / (2 * s),
            (axp[2] - axm[2]) / (2 * s) + (ayp[3] - aym[3]) / (2 * s)};
}

// R on element t: u_h is affine there, so div(A grad u_h) = (div A) . grad u_h.
double residual_at(const Problem& problem, Vec2 x, double u_val, Vec2 grad, double fd_step) {
    Vec2 diva = div_A_at(problem, x, fd_step);
    return problem.f(x) -
           (-dot(diva, grad) + problem.div_b(x) * u_val + dot(problem.b(x), grad)) -
           problem.c(x) * u_val;
}

// Unit normal of interior edge e pointing from the lower-id owner into the
// higher-id one.
Vec2 edge_normal(const Mesh& mesh, const Edge& e) {
    Vec2 d = mesh.pos(e.b) - mesh.pos(e.a);
    double len = norm(d);
    Vec2 n{d.y / len, -d.x / len};
    Vec2 towards = mesh.centroid(e.tri[1]) - mesh.centroid(e.tri[0]);
    if (dot(n, towards) < 0.0) n = n * -1.0;
    return n;
}

}  // namespace

std::vector<double> element_residual(const Mesh& mesh, int t, const SolutionField& u_h,
                                     const Problem& problem, const TriQuadrature& rule) {
    double area = mesh.area(t);
    double fd_step = std::sqrt(area) * 1e-4;
    Vec2 grad = u_h.gradient(t);
    std::vector<double> values(rule.points.size());
    for (size_t q = 0; q < rule.points.size(); ++q) {
        Vec2 x = map_barycentric(rule.points[q], mesh.corner(t, 0), mesh.corner(t, 1),
                                 mesh.corner(t, 2));
        values[q] = residual_at(problem, x, u_h.value(t, x), grad, fd_step);
    }
    return values;
}

std::vector<double> facet_jump(const Mesh& mesh, int edge_id, const SolutionField& u_h,
                               const Problem& problem, const SegQuadrature& rule) {
    const Edge& e = mesh.edges[edge_id];
    if (e.boundary()) throw std::invalid_argument("facet_jump: boundary facet rejected");
    Vec2 n = edge_normal(mesh, e);
    Vec2 dg = u_h.gradient(e.tri[0]) - u_h.gradient(e.tri[1]);
    Vec2 pa = mesh.pos(e.a), pb = mesh.pos(e.b);
    std::vector<double> values(rule.points.size());
    for (size_t q = 0; q < rule.points.size(); ++q) {
        double s = rule.points[q];
        Vec2 x{pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y)};
        values[q] = dot(mat_vec(problem.A(x), dg), n);
    }
    return values;
}

IndicatorField compute_indicators(const Mesh& mesh, const SolutionField& u_h,
                                  const Problem& problem) {
    const int nt = mesh.num_triangles();
    TriQuadrature tri_rule = problem.tri_rule();
    SegQuadrature seg_rule = problem.seg_rule();

    IndicatorField field;
    field.eta_sq.assign(nt, 0.0);
    field.osc_sq.assign(nt, 0.0);

    for (int t = 0; t < nt; ++t) {
        double area = mesh.area(t);
        double h2 = area;  // h_T^2 = |T|
        auto values = element_residual(mesh, t, u_h, problem, tri_rule);
        double int_r = 0.0, int_r2 = 0.0;
        for (size_t q = 0; q < values.size(); ++q) {
            double w = tri_rule.weights[q] * 2.0 * area;
            int_r += w * values[q];
            int_r2 += w * values[q] * values[q];
        }
        double mean_removed = std::max(0.0, int_r2 - int_r * int_r / area);
        field.eta_sq[t] += h2 * int_r2;
        field.osc_sq[t] += h2 * mean_removed;
    }

    // Each interior facet contributes to both adjacent elements, weighted by
    // the respective h_T.
    for (const Edge& e : mesh.edges) {
        if (e.boundary()) continue;
        int edge_id = static_cast<int>(&e - mesh.edges.data());
        auto values = facet_jump(mesh, edge_id, u_h, problem, seg_rule);
        double len = norm(mesh.pos(e.b) - mesh.pos(e.a));
        double int_j = 0.0, int_j2 = 0.0;
        for (size_t q = 0; q < values.size(); ++q) {
            double w = seg_rule.weights[q] * len;
            int_j += w * values[q];
            int_j2 += w * values[q] * values[q];
        }
        double mean_removed = std::max(0.0, int_j2 - int_j * int_j / len);
        for (int side = 0; side < 2; ++side) {
            int t = e.tri[side];
            double h = std::sqrt(mesh.area(t));
            field.eta_sq[t] += h * int_j2;
            field.osc_sq[t] += h * mean_removed;
        }
    }

    for (int t = 0; t < nt; ++t) {
        field.eta_total_sq += field.eta_sq[t];
        field.osc_total_sq += field.osc_sq[t];
    }
    return field;
}

double check_discrete_orthogonality(const Mesh& mesh, const DualMesh& dual,
                                    const SolutionField& u_h, const Problem& problem) {
    TriQuadrature tri_rule = problem.tri_rule();
    SegQuadrature seg_rule = problem.seg_rule();
    std::vector<double> defect(mesh.num_vertices(), 0.0);

    // Volume part: same sub-triangle decomposition as the assembly.
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        double area = mesh.area(t);
        double fd_step = std::sqrt(area) * 1e-4;
        Vec2 grad = u_h.gradient(t);
        for (int k = 0; k < 3; ++k) {
            int vi = tri.v[k];
            if (!dual.interior[vi]) continue;
            auto quad = corner_quad(mesh, t, k);
            const std::array<std::array<Vec2, 3>, 2> subs = {
                {{quad[0], quad[1], quad[2]}, {quad[0], quad[2], quad[3]}}};
            for (const auto& sub : subs)
                defect[vi] += integrate_triangle(tri_rule, sub[0], sub[1], sub[2], [&](Vec2 x) {
                    return residual_at(problem, x, u_h.value(t, x), grad, fd_step);
                });
        }
    }

    // Facet part: each half of an interior facet lies in the box of its
    // nearer endpoint.
    for (size_t e_id = 0; e_id < mesh.edges.size(); ++e_id) {
        const Edge& e = mesh.edges[e_id];
        if (e.boundary()) continue;
        Vec2 n = edge_normal(mesh, e);
        Vec2 dg = u_h.gradient(e.tri[0]) - u_h.gradient(e.tri[1]);
        Vec2 pa = mesh.pos(e.a), pb = mesh.pos(e.b);
        Vec2 mid = midpoint(pa, pb);
        auto jump = [&](Vec2 x) { return dot(mat_vec(problem.A(x), dg), n); };
        if (dual.interior[e.a]) defect[e.a] -= integrate_segment(seg_rule, pa, mid, jump);
        if (dual.interior[e.b]) defect[e.b] -= integrate_segment(seg_rule, mid, pb, jump);
    }

    double max_defect = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (dual.interior[v]) max_defect = std::max(max_defect, std::abs(defect[v]));
    return max_defect;
}

double check_defect_identity(const Mesh& coarse, const SolutionField& u_coarse, const Mesh& fine,
                             const DualMesh& fine_dual, const SolutionField& u_fine,
                             std::span<const int> ancestor, const Problem& problem) {
    if (static_cast<int>(ancestor.size()) != fine.num_triangles())
        throw std::invalid_argument("check_defect_identity: ancestor map size mismatch");
    for (int a : ancestor)
        if (a < 0 || a >= coarse.num_triangles())
            throw std::invalid_argument("check_defect_identity: non-nested meshes");

    TriQuadrature tri_rule = problem.tri_rule();
    SegQuadrature seg_rule = problem.seg_rule();
    std::vector<double> lhs(fine.num_vertices(), 0.0);

    // Volume part over fine sub-volumes, residual data from the coarse
    // ancestor element.
    for (int t = 0; t < fine.num_triangles(); ++t) {
        const auto& tri = fine.triangles[t];
        int tc = ancestor[t];
        double fd_step = std::sqrt(coarse.area(tc)) * 1e-4;
        Vec2 grad = u_coarse.gradient(tc);
        for (int k = 0; k < 3; ++k) {
            int vi = tri.v[k];
            if (!fine_dual.interior[vi]) continue;
            auto quad = corner_quad(fine, t, k);
            const std::array<std::array<Vec2, 3>, 2> subs = {
                {{quad[0], quad[1], quad[2]}, {quad[0], quad[2], quad[3]}}};
            for (const auto& sub : subs)
                lhs[vi] += integrate_triangle(tri_rule, sub[0], sub[1], sub[2], [&](Vec2 x) {
                    return residual_at(problem, x, u_coarse.value(tc, x), grad, fd_step);
                });
        }
    }

    // Registry of bisected edges: sorted parent pair -> midpoint vertex.
    std::unordered_map<uint64_t, int> midpoint_of;
    midpoint_of.reserve(fine.vertices.size());
    auto key = [](int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
    };
    for (int v = 0; v < fine.num_vertices(); ++v) {
        const auto& pe = fine.vertices[v].parent_edge;
        if (pe[0] >= 0) midpoint_of[key(pe[0], pe[1])] = v;
    }

    // Facet part: descend each coarse interior facet to its fine sub-facets;
    // each half of a sub-facet lies in the box of its endpoint.
    for (const Edge& e : coarse.edges) {
        if (e.boundary()) continue;
        Vec2 n = edge_normal(coarse, e);
        Vec2 dg = u_coarse.gradient(e.tri[0]) - u_coarse.gradient(e.tri[1]);
        auto jump = [&](Vec2 x) { return dot(mat_vec(problem.A(x), dg), n); };

        auto descend = [&](auto&& self, int a, int b) -> void {
            auto it = midpoint_of.find(key(a, b));
            if (it != midpoint_of.end()) {
                self(self, a, it->second);
                self(self, it->second, b);
                return;
            }
            Vec2 pa = fine.pos(a), pb = fine.pos(b);
            Vec2 mid = midpoint(pa, pb);
            if (fine_dual.interior[a]) lhs[a] -= integrate_segment(seg_rule, pa, mid, jump);
            if (fine_dual.interior[b]) lhs[b] -= integrate_segment(seg_rule, mid, pb, jump);
        };
        descend(descend, e.a, e.b);
    }

    // Right-hand side: fine box balance of u_fine - prolong(u_coarse).
    SolutionField lifted = prolong(u_coarse, fine);
    LinearSystem fine_system = assemble_fvm(fine, fine_dual, problem);
    Eigen::VectorXd diff(fine.num_vertices());
    for (int v = 0; v < fine.num_vertices(); ++v) diff[v] = u_fine.nodal[v] - lifted.nodal[v];
    Eigen::VectorXd rhs = fine_system.full_matrix * diff;

    double max_mismatch = 0.0;
    for (size_t row = 0; row < fine_system.vertex_of_row.size(); ++row) {
        int v = fine_system.vertex_of_row[row];
        max_mismatch =
            std::max(max_mismatch, std::abs(lhs[v] - rhs[static_cast<Eigen::Index>(row)]));
    }
    return max_mismatch;
}

void write_indicator_csv(const IndicatorField& field, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open indicator csv for writing: " + path);
    f << "element_id,eta_sq,osc_sq\n";
    char buf[96];
    for (size_t t = 0; t < field.eta_sq.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g\n", t, field.eta_sq[t], field.osc_sq[t]);
        f << buf;
    }
}

}  // namespace afvm
