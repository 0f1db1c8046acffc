#pragma once

#include <span>
#include <vector>

#include "dual_mesh.hpp"
#include "fvm_solver.hpp"
#include "mesh.hpp"
#include "problem.hpp"

namespace afvm {

// Per-element squared indicators eta_T^2 = h_T^2 ||R||_T^2 + h_T ||J||_{dT\G}^2
// and oscillations with the elementwise/facetwise integral mean removed.
// Interior facets contribute to both adjacent elements.
struct IndicatorField {
    std::vector<double> eta_sq;
    std::vector<double> osc_sq;
    double eta_total_sq = 0.0;
    double osc_total_sq = 0.0;

    double eta() const { return std::sqrt(eta_total_sq); }
    double osc() const { return std::sqrt(osc_total_sq); }
};

// Strong-form volume residual
// R = f - [-(div A) . grad u_h + (div b) u_h + b . grad u_h] - c u_h
// at the physical quadrature points of element t. div A comes from the
// problem when supplied, otherwise by central differences with step
// h_T * 1e-4.
std::vector<double> element_residual(const Mesh& mesh, int t, const SolutionField& u_h,
                                     const Problem& problem, const TriQuadrature& rule);

// Conormal jump (A grad u_h|_T - A grad u_h|_T') . n at the facet quadrature
// points, n oriented from the lower to the higher owning triangle id.
// Rejects boundary facets.
std::vector<double> facet_jump(const Mesh& mesh, int edge_id, const SolutionField& u_h,
                               const Problem& problem, const SegQuadrature& rule);

IndicatorField compute_indicators(const Mesh& mesh, const SolutionField& u_h,
                                  const Problem& problem);

// Max over interior boxes of |sum_T <R,chi_i> - sum_F <J,chi_i>|; vanishes up
// to quadrature for the discrete solution.
double check_discrete_orthogonality(const Mesh& mesh, const DualMesh& dual,
                                    const SolutionField& u_h, const Problem& problem);

// Defect identity between a coarse solution and a refined one: evaluates
// sum_T <R_coarse, chi*_i> - sum_F <J_coarse, chi*_i> against the fine box
// balance of u_fine - prolong(u_coarse) and returns the maximal mismatch
// over interior fine boxes. `ancestor` maps fine triangles to coarse ones.
double check_defect_identity(const Mesh& coarse, const SolutionField& u_coarse, const Mesh& fine,
                             const DualMesh& fine_dual, const SolutionField& u_fine,
                             std::span<const int> ancestor, const Problem& problem);

void write_indicator_csv(const IndicatorField& field, const std::string& path);

}  // namespace afvm
