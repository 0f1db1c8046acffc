#include "problem.hpp"

#include <cmath>
#include <stdexcept>

namespace afvm {

namespace {

// f = -div(A grad u) + div(b u) + c u evaluated from closed-form pieces:
// -div(A grad u) = -divA . grad u - A : Hess u.
double manufactured_f(const Vec2& divA, const Mat2& A, const Vec2& grad, const Mat2& hess,
                      const Vec2& b, double div_b, double c, double u) {
    double a_hess = A[0] * hess[0] + A[1] * hess[1] + A[2] * hess[2] + A[3] * hess[3];
    return -(dot(divA, grad) + a_hess) + dot(b, grad) + div_b * u + c * u;
}

}  // namespace

Problem smooth_problem() {
    Problem p;
    p.key = "smooth";
    p.domain = DomainKind::unit_square_shifted;

    p.A = [](Vec2 x) -> Mat2 {
        double off = 9.0 * x.x * x.y;
        return {10.0 + std::cos(x.x), off, off, 10.0 + std::sin(x.y)};
    };
    p.div_A = [](Vec2 x) -> Vec2 {
        return {-std::sin(x.x) + 9.0 * x.x, 9.0 * x.y + std::cos(x.y)};
    };
    p.b = [](Vec2 x) -> Vec2 { return {std::sin(x.x), std::cos(x.y)}; };
    p.div_b = [](Vec2 x) { return std::cos(x.x) - std::sin(x.y); };
    p.c = [](Vec2) { return 1.0; };

    auto u = [](Vec2 x) {
        double r2 = x.x * x.x + x.y * x.y;
        return (1.0 - 10.0 * r2) * std::exp(-5.0 * r2);
    };
    auto grad_u = [](Vec2 x) -> Vec2 {
        double r2 = x.x * x.x + x.y * x.y;
        double s = -10.0 * (3.0 - 10.0 * r2) * std::exp(-5.0 * r2);
        return {s * x.x, s * x.y};
    };
    auto hess_u = [](Vec2 x) -> Mat2 {
        double r2 = x.x * x.x + x.y * x.y;
        double e = std::exp(-5.0 * r2);
        double h11 = e * (-30.0 + 100.0 * r2 + 500.0 * x.x * x.x - 1000.0 * x.x * x.x * r2);
        double h22 = e * (-30.0 + 100.0 * r2 + 500.0 * x.y * x.y - 1000.0 * x.y * x.y * r2);
        double h12 = e * x.x * x.y * (500.0 - 1000.0 * r2);
        return {h11, h12, h12, h22};
    };

    p.f = [=, A = p.A, div_A = p.div_A, b = p.b, div_b = p.div_b](Vec2 x) {
        return manufactured_f(div_A(x), A(x), grad_u(x), hess_u(x), b(x), div_b(x), 1.0, u(x));
    };
    p.g = u;
    p.exact = ExactSolution{u, grad_u};
    return p;
}

namespace {

// Polar angle in [0, 2pi) measured from the positive x1-axis, so the slit of
// the L-shaped domain lies along phi = 0 and phi = 3pi/2.
double polar_angle(Vec2 x) {
    double phi = std::atan2(x.y, x.x);
    if (phi < 0.0) phi += 2.0 * M_PI;
    return phi;
}

}  // namespace

Problem lshape_problem() {
    Problem p;
    p.key = "lshape";
    p.domain = DomainKind::l_shape;

    p.A = [](Vec2 x) -> Mat2 {
        double r2 = x.x * x.x + x.y * x.y;
        double off = r2 * r2;
        return {5.0 + r2 * std::cos(x.x), off, off, 5.0 + r2 * std::sin(x.y)};
    };
    p.div_A = [](Vec2 x) -> Vec2 {
        double r2 = x.x * x.x + x.y * x.y;
        return {2.0 * x.x * std::cos(x.x) - r2 * std::sin(x.x) + 4.0 * x.y * r2,
                4.0 * x.x * r2 + 2.0 * x.y * std::sin(x.y) + r2 * std::cos(x.y)};
    };
    p.b = [](Vec2) -> Vec2 { return {1.0, 1.0}; };
    p.div_b = [](Vec2) { return 0.0; };
    p.c = [](Vec2) { return 1.0; };

    // u = Im(z^{2/3}) with the branch cut on the positive x1-axis.
    auto u = [](Vec2 x) {
        double r = std::hypot(x.x, x.y);
        if (r == 0.0) return 0.0;
        return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * polar_angle(x) / 3.0);
    };
    auto grad_u = [](Vec2 x) -> Vec2 {
        double r = std::hypot(x.x, x.y);
        if (r == 0.0) return {0.0, 0.0};
        double phi = polar_angle(x);
        double s = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0);
        return {-s * std::sin(phi / 3.0), s * std::cos(phi / 3.0)};
    };
    auto hess_u = [](Vec2 x) -> Mat2 {
        double r = std::hypot(x.x, x.y);
        double phi = polar_angle(x);
        double s = (2.0 / 9.0) * std::pow(r, -4.0 / 3.0);
        double h11 = s * std::sin(4.0 * phi / 3.0);
        double h12 = -s * std::cos(4.0 * phi / 3.0);
        return {h11, h12, h12, -h11};
    };

    p.f = [=, A = p.A, div_A = p.div_A, b = p.b](Vec2 x) {
        return manufactured_f(div_A(x), A(x), grad_u(x), hess_u(x), b(x), 0.0, 1.0, u(x));
    };
    p.g = u;
    p.exact = ExactSolution{u, grad_u};
    return p;
}

Problem convection_problem() {
    Problem p;
    p.key = "convection";
    p.domain = DomainKind::unit_square;

    p.A = [](Vec2) -> Mat2 { return {1e-3, 0.0, 0.0, 1e-3}; };
    p.div_A = [](Vec2) -> Vec2 { return {0.0, 0.0}; };
    p.b = [](Vec2 x) -> Vec2 { return {x.y, 0.5 - x.x}; };
    p.div_b = [](Vec2) { return 0.0; };
    p.c = [](Vec2) { return 0.0; };
    p.f = [](Vec2) { return 0.0; };

    // Piecewise linear pulse on the bottom edge, zero elsewhere on the
    // boundary: ramps on [0.2, 0.2005] and [0.4995, 0.5], plateau 1 between.
    p.g = [](Vec2 x) {
        if (std::abs(x.y) > 1e-14) return 0.0;
        double t = x.x;
        if (t <= 0.2 || t >= 0.5) return 0.0;
        if (t < 0.2005) return (t - 0.2) / 0.0005;
        if (t > 0.4995) return (0.5 - t) / 0.0005;
        return 1.0;
    };
    return p;
}

Problem problem_by_key(const std::string& key) {
    if (key == "smooth") return smooth_problem();
    if (key == "lshape") return lshape_problem();
    if (key == "convection") return convection_problem();
    throw std::invalid_argument("unknown problem key '" + key + "' (use smooth|lshape|convection)");
}

AssumptionReport check_assumptions(const Problem& problem, const Mesh& mesh,
                                   int samples_per_element) {
    if (samples_per_element < 1) samples_per_element = 1;
    AssumptionReport report;
    report.lambda_min = std::numeric_limits<double>::infinity();
    report.lambda_max = -std::numeric_limits<double>::infinity();
    report.max_min_eigenvalue = -std::numeric_limits<double>::infinity();
    report.min_half_divb_plus_c = std::numeric_limits<double>::infinity();

    // Barycentric lattice of depth m has (m+1)(m+2)/2 points, corners included.
    int m = 1;
    while ((m + 1) * (m + 2) / 2 < samples_per_element) ++m;

    TriQuadrature rule = problem.tri_rule();

    auto visit = [&](Vec2 x) {
        Mat2 a = problem.A(x);
        report.max_asymmetry = std::max(report.max_asymmetry, std::abs(a[1] - a[2]));
        double mean = 0.5 * (a[0] + a[3]);
        double rad = std::hypot(0.5 * (a[0] - a[3]), 0.5 * (a[1] + a[2]));
        double lo = mean - rad, hi = mean + rad;
        report.lambda_min = std::min(report.lambda_min, lo);
        report.lambda_max = std::max(report.lambda_max, hi);
        report.max_min_eigenvalue = std::max(report.max_min_eigenvalue, lo);
        double drift = 0.5 * problem.div_b(x) + problem.c(x);
        report.min_half_divb_plus_c = std::min(report.min_half_divb_plus_c, drift);
        ++report.samples;
    };

    for (int t = 0; t < mesh.num_triangles(); ++t) {
        Vec2 a = mesh.corner(t, 0), b = mesh.corner(t, 1), c = mesh.corner(t, 2);
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m - i; ++j) {
                double l1 = static_cast<double>(i) / m;
                double l2 = static_cast<double>(j) / m;
                visit(map_barycentric({1.0 - l1 - l2, l1, l2}, a, b, c));
            }
        for (const auto& bary : rule.points) visit(map_barycentric(bary, a, b, c));
    }
    return report;
}

}  // namespace afvm
