#include "fvm_solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace afvm {

namespace {

// Gradients of the three hat functions on triangle t (constant vectors).
std::array<Vec2, 3> hat_gradients(const Mesh& mesh, int t, double area) {
    const auto& tri = mesh.triangles[t];
    std::array<Vec2, 3> g;
    for (int k = 0; k < 3; ++k) {
        Vec2 d = mesh.pos(tri.v[(k + 2) % 3]) - mesh.pos(tri.v[(k + 1) % 3]);
        g[k] = Vec2{-d.y, d.x} / (2.0 * area);
    }
    return g;
}

// Barycentric coordinates of x in triangle t.
std::array<double, 3> barycentric(const Mesh& mesh, int t, Vec2 x, double area) {
    const auto& tri = mesh.triangles[t];
    std::array<double, 3> lambda;
    for (int k = 0; k < 3; ++k)
        lambda[k] =
            signed_area(x, mesh.pos(tri.v[(k + 1) % 3]), mesh.pos(tri.v[(k + 2) % 3])) / area;
    return lambda;
}

struct SystemBuilder {
    const Mesh& mesh;
    std::vector<Eigen::Triplet<double>> interior_triplets;
    std::vector<Eigen::Triplet<double>> full_triplets;
    LinearSystem system;

    explicit SystemBuilder(const Mesh& m, const Problem& problem) : mesh(m) {
        system.row_of_vertex.assign(m.num_vertices(), -1);
        for (int v = 0; v < m.num_vertices(); ++v) {
            if (!m.vertex_on_boundary[v]) {
                system.row_of_vertex[v] = static_cast<int>(system.vertex_of_row.size());
                system.vertex_of_row.push_back(v);
            }
        }
        system.dirichlet = dirichlet_values(m, problem);
        const int n = static_cast<int>(system.vertex_of_row.size());
        system.load = Eigen::VectorXd::Zero(n);
    }

    void add(int vi, int vj, double value) {
        if (value == 0.0) return;
        int row = system.row_of_vertex[vi];
        if (row < 0) return;
        full_triplets.emplace_back(row, vj, value);
        int col = system.row_of_vertex[vj];
        if (col >= 0) interior_triplets.emplace_back(row, col, value);
    }

    // local 3x3 element contribution, one triplet per entry
    void add_local(const std::array<int, 3>& vertices, const std::array<double, 9>& local) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) add(vertices[i], vertices[j], local[3 * i + j]);
    }

    void add_load(int vi, double value) {
        int row = system.row_of_vertex[vi];
        if (row >= 0) system.load[row] += value;
    }

    LinearSystem finish() {
        const int n = static_cast<int>(system.vertex_of_row.size());
        system.matrix.resize(n, n);
        system.matrix.setFromTriplets(interior_triplets.begin(), interior_triplets.end());
        system.full_matrix.resize(n, mesh.num_vertices());
        system.full_matrix.setFromTriplets(full_triplets.begin(), full_triplets.end());
        Eigen::VectorXd g = Eigen::VectorXd::Zero(mesh.num_vertices());
        for (int v = 0; v < mesh.num_vertices(); ++v) g[v] = system.dirichlet[v];
        system.rhs = system.load - system.full_matrix * g;
        return std::move(system);
    }
};

}  // namespace

std::vector<double> dirichlet_values(const Mesh& mesh, const Problem& problem) {
    std::vector<double> g(mesh.num_vertices(), 0.0);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (mesh.vertex_on_boundary[v]) g[v] = problem.g(mesh.pos(v));
    return g;
}

LinearSystem assemble_fvm(const Mesh& mesh, const DualMesh& dual, const Problem& problem) {
    SystemBuilder builder(mesh, problem);
    builder.interior_triplets.reserve(9 * static_cast<size_t>(mesh.num_triangles()));
    builder.full_triplets.reserve(9 * static_cast<size_t>(mesh.num_triangles()));
    TriQuadrature tri_rule = problem.tri_rule();
    SegQuadrature seg_rule = problem.seg_rule();

    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        double area = mesh.area(t);
        if (!(area > 0.0)) throw SolverError("degenerate triangle " + std::to_string(t));
        auto grads = hat_gradients(mesh, t, area);
        Vec2 c = mesh.centroid(t);
        std::array<double, 9> local{};

        for (int k = 0; k < 3; ++k) {
            int vi = tri.v[k];
            if (builder.system.row_of_vertex[vi] < 0) continue;

            // Flux over the two dual segments bounding V_i inside T,
            // counterclockwise so the outward normal is (dy,-dx)/len.
            Vec2 m1 = midpoint(mesh.pos(tri.v[k]), mesh.pos(tri.v[(k + 1) % 3]));
            Vec2 m2 = midpoint(mesh.pos(tri.v[(k + 2) % 3]), mesh.pos(tri.v[k]));
            const std::array<std::array<Vec2, 2>, 2> segments = {{{m1, c}, {c, m2}}};
            for (const auto& seg : segments) {
                Vec2 d = seg[1] - seg[0];
                double len = norm(d);
                Vec2 n{d.y / len, -d.x / len};
                for (size_t q = 0; q < seg_rule.points.size(); ++q) {
                    double s = seg_rule.points[q];
                    Vec2 x{seg[0].x + s * d.x, seg[0].y + s * d.y};
                    double w = seg_rule.weights[q] * len;
                    Mat2 a = problem.A(x);
                    Vec2 bx = problem.b(x);
                    auto lambda = barycentric(mesh, t, x, area);
                    for (int j = 0; j < 3; ++j)
                        local[3 * k + j] +=
                            w * (-dot(mat_vec(a, grads[j]), n) + dot(bx, n) * lambda[j]);
                }
            }

            // Volume terms over V_i cap T, split into the two triangles
            // (a_i, m1, c) and (a_i, c, m2).
            Vec2 ai = mesh.pos(vi);
            const std::array<std::array<Vec2, 3>, 2> subs = {{{ai, m1, c}, {ai, c, m2}}};
            for (const auto& sub : subs) {
                double scale = 2.0 * signed_area(sub[0], sub[1], sub[2]);
                for (size_t q = 0; q < tri_rule.points.size(); ++q) {
                    Vec2 x = map_barycentric(tri_rule.points[q], sub[0], sub[1], sub[2]);
                    double w = tri_rule.weights[q] * scale;
                    builder.add_load(vi, w * problem.f(x));
                    double cx = problem.c(x);
                    if (cx != 0.0) {
                        auto lambda = barycentric(mesh, t, x, area);
                        for (int j = 0; j < 3; ++j) local[3 * k + j] += w * cx * lambda[j];
                    }
                }
            }
        }
        builder.add_local(tri.v, local);
    }
    return builder.finish();
}

LinearSystem assemble_fem(const Mesh& mesh, const Problem& problem) {
    SystemBuilder builder(mesh, problem);
    TriQuadrature tri_rule = problem.tri_rule();

    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        double area = mesh.area(t);
        if (!(area > 0.0)) throw SolverError("degenerate triangle " + std::to_string(t));
        auto grads = hat_gradients(mesh, t, area);
        std::array<double, 9> local{};

        for (size_t q = 0; q < tri_rule.points.size(); ++q) {
            const auto& lambda = tri_rule.points[q];
            Vec2 x = map_barycentric(lambda, mesh.corner(t, 0), mesh.corner(t, 1),
                                     mesh.corner(t, 2));
            double w = tri_rule.weights[q] * 2.0 * area;
            Mat2 a = problem.A(x);
            Vec2 bx = problem.b(x);
            double cx = problem.c(x);
            double fx = problem.f(x);
            for (int j = 0; j < 3; ++j) {
                builder.add_load(tri.v[j], w * fx * lambda[j]);
                for (int k = 0; k < 3; ++k)
                    local[3 * j + k] += w * (dot(mat_vec(a, grads[k]), grads[j]) -
                                             dot(bx, grads[j]) * lambda[k] +
                                             cx * lambda[k] * lambda[j]);
            }
        }
        builder.add_local(tri.v, local);
    }
    return builder.finish();
}

SolutionField solve(const LinearSystem& system, const Mesh& mesh, SolveInfo* info) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(system.matrix);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed (n=" +
                          std::to_string(system.matrix.rows()) +
                          ", nnz=" + std::to_string(system.matrix.nonZeros()) + ")");
    Eigen::VectorXd x = lu.solve(system.rhs);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU solve failed (n=" + std::to_string(system.matrix.rows()) + ")");

    double rhs_norm = system.rhs.norm();
    double residual = (system.matrix * x - system.rhs).norm();
    if (rhs_norm > 0.0) residual /= rhs_norm;
    if (!(residual <= 1e-10))
        throw SolverError("linear solver residual " + std::to_string(residual) +
                          " above tolerance (n=" + std::to_string(system.matrix.rows()) +
                          ", nnz=" + std::to_string(system.matrix.nonZeros()) + ")");
    if (info) info->residual = residual;

    SolutionField u;
    u.mesh = &mesh;
    u.nodal = system.dirichlet;
    for (size_t row = 0; row < system.vertex_of_row.size(); ++row)
        u.nodal[system.vertex_of_row[row]] = x[static_cast<Eigen::Index>(row)];
    return u;
}

double SolutionField::value(int t, Vec2 x) const {
    const auto& tri = mesh->triangles[t];
    double area = mesh->area(t);
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
        v += nodal[tri.v[k]] *
             signed_area(x, mesh->pos(tri.v[(k + 1) % 3]), mesh->pos(tri.v[(k + 2) % 3])) / area;
    return v;
}

Vec2 SolutionField::gradient(int t) const {
    const auto& tri = mesh->triangles[t];
    double area = mesh->area(t);
    auto grads = hat_gradients(*mesh, t, area);
    Vec2 g{0.0, 0.0};
    for (int k = 0; k < 3; ++k) g += grads[k] * nodal[tri.v[k]];
    return g;
}

std::vector<double> interpolate_dual(const SolutionField& v, const DualMesh& dual) {
    std::vector<double> box_values(v.nodal);
    (void)dual;
    return box_values;
}

ErrorNorms error_norms(const SolutionField& u_h, const Problem& problem) {
    if (!problem.exact) throw SolverError("error_norms requires an exact solution");
    const Mesh& mesh = *u_h.mesh;
    TriQuadrature rule = problem.tri_rule();
    double l2 = 0.0, semi = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        Vec2 gh = u_h.gradient(t);
        double area = mesh.area(t);
        for (size_t q = 0; q < rule.points.size(); ++q) {
            Vec2 x = map_barycentric(rule.points[q], mesh.corner(t, 0), mesh.corner(t, 1),
                                     mesh.corner(t, 2));
            double w = rule.weights[q] * 2.0 * area;
            double e = problem.exact->u(x) - u_h.value(t, x);
            Vec2 ge = problem.exact->grad(x) - gh;
            l2 += w * e * e;
            semi += w * dot(ge, ge);
        }
    }
    return {std::sqrt(l2), std::sqrt(semi), std::sqrt(l2 + semi)};
}

SolutionField prolong(const SolutionField& coarse, const Mesh& fine_mesh) {
    const int nc = static_cast<int>(coarse.nodal.size());
    if (fine_mesh.num_vertices() < nc) throw SolverError("prolong: meshes not nested");
    SolutionField fine;
    fine.mesh = &fine_mesh;
    fine.nodal.resize(fine_mesh.num_vertices());
    for (int v = 0; v < fine_mesh.num_vertices(); ++v) {
        if (v < nc) {
            fine.nodal[v] = coarse.nodal[v];
            continue;
        }
        const auto& pe = fine_mesh.vertices[v].parent_edge;
        if (pe[0] < 0 || pe[0] >= v || pe[1] >= v) throw SolverError("prolong: meshes not nested");
        Vec2 mid = midpoint(fine_mesh.pos(pe[0]), fine_mesh.pos(pe[1]));
        if (norm(mid - fine_mesh.pos(v)) > 1e-12) throw SolverError("prolong: meshes not nested");
        fine.nodal[v] = 0.5 * (fine.nodal[pe[0]] + fine.nodal[pe[1]]);
    }
    return fine;
}

double discrete_h1_norm(const SolutionField& v) {
    const Mesh& mesh = *v.mesh;
    double sum = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        double area = mesh.area(t);
        Vec2 g = v.gradient(t);
        const auto& tri = mesh.triangles[t];
        double a = v.nodal[tri.v[0]], b = v.nodal[tri.v[1]], c = v.nodal[tri.v[2]];
        // exact integral of a P1 function squared
        double mass = area / 6.0 * (a * a + b * b + c * c + a * b + a * c + b * c);
        sum += area * dot(g, g) + mass;
    }
    return std::sqrt(sum);
}

}  // namespace afvm
