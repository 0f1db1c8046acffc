#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "dual_mesh.hpp"
#include "mesh.hpp"
#include "problem.hpp"

namespace afvm {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Piecewise affine, globally continuous function given by vertex values.
struct SolutionField {
    const Mesh* mesh = nullptr;
    std::vector<double> nodal;

    double value(int t, Vec2 x) const;  // evaluate inside triangle t
    Vec2 gradient(int t) const;         // constant per triangle
};

// Rows are interior vertices; Dirichlet columns are folded into the right
// hand side. full_matrix keeps the boundary columns for the balance
// diagnostics.
struct LinearSystem {
    Eigen::SparseMatrix<double> matrix;       // n_int x n_int
    Eigen::SparseMatrix<double> full_matrix;  // n_int x n_vertices
    Eigen::VectorXd load;                     // source integrals per row
    Eigen::VectorXd rhs;                      // load minus Dirichlet coupling
    std::vector<int> row_of_vertex;           // vertex -> row, -1 on the boundary
    std::vector<int> vertex_of_row;
    std::vector<double> dirichlet;            // per-vertex g, 0 at interior vertices
};

// Box-method discretization: row i of the system is the flux balance of the
// control volume V_i with flux (-A grad u + b u) . n integrated over the box
// boundary plus the reaction volume term, tested against hat-function trials.
LinearSystem assemble_fvm(const Mesh& mesh, const DualMesh& dual, const Problem& problem);

// Standard P1 Galerkin discretization of the weak form
// (A grad u - b u, grad w) + (c u, w) = (f, w) with the same Dirichlet
// handling, used as the comparison solver.
LinearSystem assemble_fem(const Mesh& mesh, const Problem& problem);

struct SolveInfo {
    double residual = 0.0;  // ||Ax-b|| / ||b||
};

SolutionField solve(const LinearSystem& system, const Mesh& mesh, SolveInfo* info = nullptr);

// Per-box constants (I* v)(V_i) = v(a_i).
std::vector<double> interpolate_dual(const SolutionField& v, const DualMesh& dual);

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double h1 = 0.0;
};

// Quadrature evaluation against the problem's exact solution; throws
// SolverError when no exact solution is available.
ErrorNorms error_norms(const SolutionField& u_h, const Problem& problem);

// Exact P1 interpolation onto a newest-vertex-bisection descendant: new
// vertices get the average of their parent edge's values.
SolutionField prolong(const SolutionField& coarse, const Mesh& fine_mesh);

// H1 norm of a discrete field, exact elementwise integration.
double discrete_h1_norm(const SolutionField& v);

// Interpolates g at boundary vertices, zero at interior ones.
std::vector<double> dirichlet_values(const Mesh& mesh, const Problem& problem);

}  // namespace afvm
