#pragma once

#include <functional>
#include <optional>
#include <string>

#include "geometry.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"

namespace afvm {

struct ExactSolution {
    std::function<double(Vec2)> u;
    std::function<Vec2(Vec2)> grad;
};

// Coefficient bundle for  div(-A grad u + b u) + c u = f  with Dirichlet
// data g on the whole boundary. All fields are pure functions; the bundle is
// immutable and safe to evaluate concurrently.
struct Problem {
    std::string key;
    DomainKind domain = DomainKind::unit_square_shifted;

    std::function<Mat2(Vec2)> A;
    // Row-wise divergence of A, supplied analytically for the built-in
    // problems; estimators fall back to finite differences when absent.
    std::function<Vec2(Vec2)> div_A;
    std::function<Vec2(Vec2)> b;
    std::function<double(Vec2)> div_b;
    std::function<double(Vec2)> c;
    std::function<double(Vec2)> f;
    std::function<double(Vec2)> g;
    std::optional<ExactSolution> exact;

    int tri_quad_degree = 4;
    int seg_quad_degree = 4;

    TriQuadrature tri_rule() const { return triangle_quadrature(tri_quad_degree); }
    SegQuadrature seg_rule() const { return segment_quadrature(seg_quad_degree); }
};

Problem smooth_problem();
Problem lshape_problem();
Problem convection_problem();

// Lookup by key "smooth" | "lshape" | "convection"; throws std::invalid_argument.
Problem problem_by_key(const std::string& key);

struct AssumptionReport {
    double lambda_min = 0.0;          // smallest eigenvalue of A over all samples
    double lambda_max = 0.0;          // largest eigenvalue of A over all samples
    double max_min_eigenvalue = 0.0;  // largest smallest-eigenvalue over all samples
    double min_half_divb_plus_c = 0.0;
    double max_asymmetry = 0.0;       // largest |A01 - A10| seen
    long samples = 0;
    bool ellipticity_ok() const { return lambda_min > 0.0; }
    bool drift_ok() const { return min_half_divb_plus_c >= -1e-12; }
};

// Samples A and 1/2 div b + c on a barycentric lattice per element (at least
// samples_per_element points, vertices included) plus the configured
// quadrature points. Reports violations, never aborts.
AssumptionReport check_assumptions(const Problem& problem, const Mesh& mesh,
                                   int samples_per_element);

}  // namespace afvm
