#include "quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace afvm {

namespace {

struct GaussRule {
    std::vector<double> nodes;    // on [-1,1]
    std::vector<double> weights;  // sum to mu0
};

// Golub-Welsch from the three-term recurrence of the orthogonal polynomials:
// nodes are eigenvalues of the Jacobi matrix, weights mu0 * (first eigenvector
// component)^2.
GaussRule golub_welsch(const std::vector<double>& alpha, const std::vector<double>& beta,
                       double mu0) {
    const int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        J(i, i) = alpha[i];
        if (i + 1 < n) {
            double off = std::sqrt(beta[i + 1]);
            J(i, i + 1) = off;
            J(i + 1, i) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

// Gauss-Legendre, weight 1 on [-1,1].
GaussRule gauss_legendre(int n) {
    std::vector<double> alpha(n, 0.0), beta(n, 0.0);
    for (int k = 1; k < n; ++k) beta[k] = k * k / (4.0 * k * k - 1.0);
    return golub_welsch(alpha, beta, 2.0);
}

// Gauss-Jacobi with weight (1-x) on [-1,1].
GaussRule gauss_jacobi_10(int n) {
    std::vector<double> alpha(n), beta(n, 0.0);
    for (int k = 0; k < n; ++k) alpha[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    for (int k = 1; k < n; ++k) {
        double d = 2.0 * k + 1.0;
        beta[k] = k * (k + 1.0) / (d * d);
    }
    return golub_welsch(alpha, beta, 2.0);
}

void require_degree(int degree) {
    if (degree < 1 || degree > 10)
        throw QuadratureError("unsupported quadrature degree " + std::to_string(degree));
}

}  // namespace

SegQuadrature segment_quadrature(int degree) {
    require_degree(degree);
    int n = degree / 2 + 1;  // exact for polynomials of degree 2n-1 >= degree
    GaussRule g = gauss_legendre(n);
    SegQuadrature rule;
    rule.degree = degree;
    for (int i = 0; i < n; ++i) {
        rule.points.push_back(0.5 * (1.0 + g.nodes[i]));
        rule.weights.push_back(0.5 * g.weights[i]);
    }
    return rule;
}

TriQuadrature triangle_quadrature(int degree) {
    require_degree(degree);
    // Conical product rule: Gauss-Jacobi in the collapsed direction absorbs
    // the (1-u) factor, Gauss-Legendre in the other.
    int n = degree / 2 + 1;
    GaussRule gj = gauss_jacobi_10(n);
    GaussRule gl = gauss_legendre(n);

    TriQuadrature rule;
    rule.degree = degree;
    for (int i = 0; i < n; ++i) {
        double u = 0.5 * (1.0 + gj.nodes[i]);
        double wu = 0.25 * gj.weights[i];  // [0,1] weight including (1-u)
        for (int j = 0; j < n; ++j) {
            double v = 0.5 * (1.0 + gl.nodes[j]);
            double wv = 0.5 * gl.weights[j];
            double x = u;
            double y = v * (1.0 - u);
            rule.points.push_back({1.0 - x - y, x, y});
            rule.weights.push_back(wu * wv);
        }
    }
    return rule;
}

}  // namespace afvm
