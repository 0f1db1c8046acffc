// Acceptance suite: runs the three benchmark studies end to end and checks
// every acceptance criterion at its stated tolerance, printing one PASS/FAIL
// line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <vector>

#include "adaptivity.hpp"
#include "estimator.hpp"

using namespace afvm;

namespace {

int g_failures = 0;

void criterion(int id, const char* description, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, description,
                detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// ---- geometry invariants, evaluated on every level of every run ----------

struct GeometryWatch {
    double domain;
    double min_angle_bound;
    double worst_partition = 0.0;   // relative defect of sum |T| and sum |V_i|
    double worst_subvolume = 0.0;   // relative defect of |V_i cap T| = |T|/3
    double worst_min_angle = M_PI;
    long meshes_checked = 0;

    explicit GeometryWatch(DomainKind kind) : domain(domain_area(kind)) {
        // finitely many shapes reachable within two bisections of T_0
        Mesh t0 = build_initial_mesh(kind, 1);
        min_angle_bound = M_PI;
        struct Item {
            std::array<Vec2, 3> p;
            int ref, depth;
        };
        std::vector<Item> stack;
        for (const auto& tri : t0.triangles)
            stack.push_back({{t0.pos(tri.v[0]), t0.pos(tri.v[1]), t0.pos(tri.v[2])},
                             tri.ref_edge,
                             0});
        while (!stack.empty()) {
            Item it = stack.back();
            stack.pop_back();
            for (int k = 0; k < 3; ++k) {
                Vec2 u = it.p[(k + 1) % 3] - it.p[k];
                Vec2 w = it.p[(k + 2) % 3] - it.p[k];
                min_angle_bound =
                    std::min(min_angle_bound, std::atan2(std::abs(cross(u, w)), dot(u, w)));
            }
            if (it.depth >= 2) continue;
            Vec2 p = it.p[it.ref], q = it.p[(it.ref + 1) % 3], o = it.p[(it.ref + 2) % 3];
            Vec2 m = midpoint(p, q);
            stack.push_back({{p, m, o}, 2, it.depth + 1});
            stack.push_back({{m, q, o}, 1, it.depth + 1});
        }
    }

    void inspect(const Mesh& mesh, const DualMesh& dual) {
        ++meshes_checked;
        double tri_area = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            double a = mesh.area(t);
            tri_area += a;
            worst_min_angle = std::min(worst_min_angle, mesh.min_angle(t));
            double third = a / 3.0;
            for (int k = 0; k < 3; ++k)
                worst_subvolume = std::max(
                    worst_subvolume, std::abs(dual.sub_volume[t][k] - third) / third);
        }
        double box_area = 0.0;
        for (double a : dual.box_area) box_area += a;
        worst_partition = std::max(worst_partition, std::abs(tri_area - domain) / domain);
        worst_partition = std::max(worst_partition, std::abs(box_area - domain) / domain);
        // conformity: interior edges have two owners, boundary edges one;
        // finalize() has already rejected hanging nodes
        for (const Edge& e : mesh.edges)
            if (!e.boundary() && (e.tri[0] < 0 || e.tri[1] < 0)) worst_partition = 1.0;
    }
};

struct BenchmarkRun {
    AdaptiveResult result;
    GeometryWatch geometry;
    std::vector<double> concentration;  // per level >= 10, convection only
    double wall_seconds = 0.0;
};

double concentration_factor(const Mesh& mesh, const std::vector<int>& marked) {
    // pulse transport region: half-disc of radius 0.35 around (0.5, 0)
    const double region_area = 0.5 * M_PI * 0.35 * 0.35;
    int inside = 0;
    for (int t : marked) {
        for (int k = 0; k < 3; ++k) {
            if (norm(mesh.corner(t, k) - Vec2{0.5, 0.0}) <= 0.35) {
                ++inside;
                break;
            }
        }
    }
    double fraction = marked.empty() ? 0.0 : static_cast<double>(inside) / marked.size();
    return fraction / region_area;
}

BenchmarkRun run_benchmark(const char* key, RefinementMode mode, long max_elements,
                           bool track_concentration = false) {
    Problem problem = problem_by_key(key);
    BenchmarkRun bench{AdaptiveResult{}, GeometryWatch(problem.domain), {}, 0.0};

    AdaptiveOptions options;
    options.mode = mode;
    options.max_elements = max_elements;
    int level = 0;
    options.observer = [&](const Mesh& mesh, const DualMesh& dual, const SolutionField&,
                           const IndicatorField& indicators) {
        bench.geometry.inspect(mesh, dual);
        if (track_concentration && level >= 10) {
            TwoStageMarks marks =
                mark_two_stage(indicators.eta_sq, indicators.osc_sq, options.marking);
            bench.concentration.push_back(concentration_factor(mesh, marks.m_total));
        }
        ++level;
    };

    std::fprintf(stderr, "  running %s %s to %ld elements...\n", key,
                 mode == RefinementMode::adaptive ? "adaptive" : "uniform", max_elements);
    auto t0 = std::chrono::steady_clock::now();
    bench.result = adaptive_loop(problem, options);
    bench.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "    %zu levels, final mesh %d elements, %.1f s\n",
                 bench.result.trace.size(), bench.result.final_mesh.num_triangles(),
                 bench.wall_seconds);
    return bench;
}

// least-squares decay rate over the last `rows` trace rows (uniform runs
// quadruple N per level, so a decade of N holds too few points to fit)
double tail_rate(const std::vector<TraceRow>& trace, TraceQuantity q, size_t rows) {
    double fraction = std::min(1.0, static_cast<double>(rows) / trace.size());
    return fit_rate(trace, q, fraction);
}

// rate over the rows with n_min <= N <= n_max
double banded_rate(const std::vector<TraceRow>& trace, long n_min, long n_max) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const TraceRow& row : trace) {
        if (row.n_elements < n_min || row.n_elements > n_max || row.eta <= 0.0) continue;
        double x = std::log(static_cast<double>(row.n_elements));
        double y = std::log(row.eta);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double l2_norm_of_f(const Problem& problem, const Mesh& mesh) {
    TriQuadrature rule = triangle_quadrature(8);
    double sum = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        sum += integrate_triangle(rule, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2),
                                  [&](Vec2 x) { return problem.f(x) * problem.f(x); });
    return std::sqrt(sum);
}

// small adaptive run retaining every level for the identity checks
AdaptiveResult small_adaptive_run(const Problem& problem, int iterations) {
    AdaptiveOptions options;
    options.max_iterations = iterations;
    options.keep_snapshots = true;
    options.compute_errors = false;
    return adaptive_loop(problem, options);
}

Problem polynomial_problem() {
    Problem p;
    p.key = "polynomial";
    p.domain = DomainKind::unit_square;
    p.A = [](Vec2) -> Mat2 { return {1.0, 0.0, 0.0, 1.0}; };
    p.div_A = [](Vec2) -> Vec2 { return {0.0, 0.0}; };
    p.b = [](Vec2) -> Vec2 { return {0.3, -0.2}; };
    p.div_b = [](Vec2) { return 0.0; };
    p.c = [](Vec2) { return 0.0; };
    p.f = [](Vec2) { return 2.0; };
    p.g = [](Vec2) { return 0.0; };
    return p;
}

double max_abs(const Eigen::SparseMatrix<double>& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            v = std::max(v, std::abs(it.value()));
    return v;
}

}  // namespace

int main() {
    std::printf("adaptive FVM acceptance suite\n");

    // ---- benchmark runs -----------------------------------------------------
    BenchmarkRun smooth_ada = run_benchmark("smooth", RefinementMode::adaptive, 100000);
    BenchmarkRun smooth_uni = run_benchmark("smooth", RefinementMode::uniform, 100000);
    BenchmarkRun lshape_ada = run_benchmark("lshape", RefinementMode::adaptive, 500000);
    BenchmarkRun lshape_uni = run_benchmark("lshape", RefinementMode::uniform, 100000);
    BenchmarkRun conv_ada = run_benchmark("convection", RefinementMode::adaptive, 900000, true);
    BenchmarkRun conv_uni = run_benchmark("convection", RefinementMode::uniform, 200000);

    const auto& tr_sa = smooth_ada.result.trace;
    const auto& tr_su = smooth_uni.result.trace;
    const auto& tr_la = lshape_ada.result.trace;
    const auto& tr_lu = lshape_uni.result.trace;
    const auto& tr_ca = conv_ada.result.trace;
    const auto& tr_cu = conv_uni.result.trace;

    // ---- criterion 1: smooth-problem rates ---------------------------------
    {
        double ada_eta = fit_rate_last_decade(tr_sa, TraceQuantity::eta);
        double uni_eta = tail_rate(tr_su, TraceQuantity::eta, 5);
        double ada_osc = fit_rate_last_decade(tr_sa, TraceQuantity::osc);
        double uni_osc = tail_rate(tr_su, TraceQuantity::osc, 5);
        bool pass = smooth_ada.result.final_mesh.num_triangles() >= 100000 &&
                    smooth_uni.result.final_mesh.num_triangles() >= 100000 &&
                    ada_eta >= 0.43 && ada_eta <= 0.57 && uni_eta >= 0.43 && uni_eta <= 0.57 &&
                    ada_osc >= 0.85 && ada_osc <= 1.15 && uni_osc >= 0.85 && uni_osc <= 1.15;
        criterion(1, "smooth problem: eta rates ~ 1/2, osc rates ~ 1", pass,
                  fmt("adaptive eta %.4f osc %.4f, uniform eta %.4f osc %.4f", ada_eta, ada_osc,
                      uni_eta, uni_osc));
    }

    // ---- criterion 2: L-shape rates and runtime ----------------------------
    {
        double uni_eta = tail_rate(tr_lu, TraceQuantity::eta, 5);
        double uni_h1 = tail_rate(tr_lu, TraceQuantity::h1_error, 5);
        double ada_eta = fit_rate_last_decade(tr_la, TraceQuantity::eta);
        double ada_h1 = fit_rate_last_decade(tr_la, TraceQuantity::h1_error);
        bool pass = uni_eta >= 0.28 && uni_eta <= 0.38 && uni_h1 >= 0.28 && uni_h1 <= 0.38 &&
                    ada_eta >= 0.43 && ada_eta <= 0.57 && ada_h1 >= 0.43 && ada_h1 <= 0.57 &&
                    lshape_ada.result.final_mesh.num_triangles() >= 500000 &&
                    lshape_ada.wall_seconds <= 600.0;
        criterion(2, "L-shape: uniform rates ~ 1/3, adaptive rates ~ 1/2, runtime bound", pass,
                  fmt("uniform eta %.4f h1 %.4f, adaptive eta %.4f h1 %.4f, %.0f s to %d elements",
                      uni_eta, uni_h1, ada_eta, ada_h1, lshape_ada.wall_seconds,
                      lshape_ada.result.final_mesh.num_triangles()));
    }

    // ---- criterion 3: convection rates and refinement concentration --------
    {
        double ada_eta = fit_rate_last_decade(tr_ca, TraceQuantity::eta);
        long band_lo = tr_cu[tr_cu.size() - 5].n_elements;
        long band_hi = tr_cu.back().n_elements;
        double uni_banded = banded_rate(tr_cu, band_lo, band_hi);
        double ada_banded = banded_rate(tr_ca, band_lo, band_hi);
        double min_factor = conv_ada.concentration.empty()
                                ? 0.0
                                : *std::min_element(conv_ada.concentration.begin(),
                                                    conv_ada.concentration.end());
        bool pass = ada_eta >= 0.43 && ada_eta <= 0.57 && min_factor >= 3.0 &&
                    uni_banded < ada_banded;
        criterion(3, "convection: adaptive rate ~ 1/2, shock-region concentration, beats uniform",
                  pass,
                  fmt("adaptive eta %.4f, matched-range uniform %.4f vs adaptive %.4f, "
                      "min concentration factor %.2f",
                      ada_eta, uni_banded, ada_banded, min_factor));
    }

    // ---- criterion 4: reliability/efficiency stability ----------------------
    {
        auto ratio_band = [](const std::vector<TraceRow>& trace) {
            double lo = 1e300, hi = 0.0;
            for (size_t i = trace.size() - 10; i < trace.size(); ++i) {
                double r = *trace[i].h1_error / trace[i].eta;
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
            return hi / lo;
        };
        double smooth_band = ratio_band(tr_sa);
        double lshape_band = ratio_band(tr_la);
        bool pass = smooth_band <= 3.0 && lshape_band <= 3.0;
        criterion(4, "error/estimator ratio varies by <= 3x over the final 10 iterations", pass,
                  fmt("smooth %.3fx, L-shape %.3fx", smooth_band, lshape_band));
    }

    // ---- criterion 5: marking statistics ------------------------------------
    {
        auto max_ratio = [](const std::vector<TraceRow>& trace) {
            double m = 0.0;
            for (const TraceRow& row : trace)
                if (row.level >= 5) m = std::max(m, row.mark_ratio);
            return m;
        };
        double smooth_ratio = max_ratio(tr_sa);
        double lshape_ratio = max_ratio(tr_la);
        double conv_ratio = max_ratio(tr_ca);
        double min_fraction = 1.0;
        for (const auto* trace : {&tr_sa, &tr_la})
            for (const TraceRow& row : *trace)
                if (row.n_marked_eta > 0) min_fraction = std::min(min_fraction, row.osc_fraction);
        bool pass = smooth_ratio <= 2.0 && lshape_ratio <= 2.0 && conv_ratio <= 3.5 &&
                    min_fraction >= 0.01;
        criterion(5, "marking ratios bounded and oscillation capture floor", pass,
                  fmt("max ratios: smooth %.3f, L-shape %.3f, convection %.3f; "
                      "min osc fraction %.4f",
                      smooth_ratio, lshape_ratio, conv_ratio, min_fraction));
    }

    // ---- criterion 6: discrete L2-orthogonality ------------------------------
    {
        Problem poly = polynomial_problem();
        Mesh mesh = build_initial_mesh(DomainKind::unit_square, 1);
        mesh = uniform_refine(mesh).mesh;
        DualMesh dual = build_dual_mesh(mesh);
        SolutionField u = solve(assemble_fvm(mesh, dual, poly), mesh);
        double poly_defect = check_discrete_orthogonality(mesh, dual, u, poly);

        auto level5_defect = [](const char* key) {
            Problem p = problem_by_key(key);
            AdaptiveResult run = small_adaptive_run(p, 5);
            const LevelSnapshot& fine = run.levels.back();
            DualMesh fine_dual = build_dual_mesh(fine.mesh);
            double defect = check_discrete_orthogonality(fine.mesh, fine_dual, fine.solution, p);
            return std::make_pair(defect, l2_norm_of_f(p, fine.mesh));
        };
        auto [smooth_raw, smooth_f] = level5_defect("smooth");
        auto [lshape_raw, lshape_f] = level5_defect("lshape");
        double smooth_rel = smooth_raw / smooth_f;
        double lshape_rel = lshape_raw / lshape_f;
        double conv_defect = level5_defect("convection").first;
        bool pass = poly_defect <= 1e-10 && conv_defect <= 1e-10 && smooth_rel <= 1e-6 &&
                    lshape_rel <= 1e-6;
        criterion(6, "discrete L2-orthogonality of the box residuals", pass,
                  fmt("polynomial %.2e, convection %.2e, smooth %.2e, L-shape %.2e (relative)",
                      poly_defect, conv_defect, smooth_rel, lshape_rel));
    }

    // ---- criterion 7: defect identity between consecutive levels ------------
    {
        Problem poly = polynomial_problem();
        Mesh coarse = build_initial_mesh(DomainKind::unit_square, 1);
        DualMesh coarse_dual = build_dual_mesh(coarse);
        SolutionField u_coarse = solve(assemble_fvm(coarse, coarse_dual, poly), coarse);
        Refinement fine = uniform_refine(coarse);
        DualMesh fine_dual = build_dual_mesh(fine.mesh);
        SolutionField u_fine = solve(assemble_fvm(fine.mesh, fine_dual, poly), fine.mesh);
        double poly_mismatch = check_defect_identity(coarse, u_coarse, fine.mesh, fine_dual,
                                                     u_fine, fine.parent, poly);

        auto adaptive_mismatch = [](const char* key) {
            Problem p = problem_by_key(key);
            AdaptiveResult run = small_adaptive_run(p, 5);
            const LevelSnapshot& c = run.levels[run.levels.size() - 2];
            const LevelSnapshot& f = run.levels.back();
            DualMesh f_dual = build_dual_mesh(f.mesh);
            double raw = check_defect_identity(c.mesh, c.solution, f.mesh, f_dual, f.solution,
                                               f.parent, p);
            return std::make_pair(raw, l2_norm_of_f(p, f.mesh));
        };
        auto [smooth_raw, smooth_f] = adaptive_mismatch("smooth");
        auto [lshape_raw, lshape_f] = adaptive_mismatch("lshape");
        auto [conv_raw, conv_f] = adaptive_mismatch("convection");

        bool pass = poly_mismatch <= 1e-10 && conv_raw <= 1e-10 &&
                    smooth_raw <= 1e-6 * smooth_f && lshape_raw <= 1e-6 * lshape_f;
        criterion(7, "discrete defect identity across refinement", pass,
                  fmt("polynomial %.2e, convection %.2e, smooth %.2e, L-shape %.2e (relative)",
                      poly_mismatch, conv_raw, smooth_raw / smooth_f, lshape_raw / lshape_f));
    }

    // ---- criterion 8: geometry invariants on every mesh of every run --------
    {
        double worst_partition = 0.0, worst_subvolume = 0.0;
        long meshes = 0;
        bool angles_ok = true;
        for (const BenchmarkRun* run :
             {&smooth_ada, &smooth_uni, &lshape_ada, &lshape_uni, &conv_ada, &conv_uni}) {
            worst_partition = std::max(worst_partition, run->geometry.worst_partition);
            worst_subvolume = std::max(worst_subvolume, run->geometry.worst_subvolume);
            meshes += run->geometry.meshes_checked;
            if (run->geometry.worst_min_angle < run->geometry.min_angle_bound - 1e-12)
                angles_ok = false;
        }
        bool pass = worst_partition <= 1e-12 && worst_subvolume <= 1e-13 && angles_ok;
        criterion(8, "partition, sub-volume, conformity and angle bounds on every mesh", pass,
                  fmt("%ld meshes, worst partition defect %.2e, worst sub-volume defect %.2e",
                      meshes, worst_partition, worst_subvolume));
    }

    // ---- criterion 9: Doerfler minimality vs brute force ---------------------
    {
        std::mt19937 gen(20240817);
        std::uniform_int_distribution<int> size(1, 15);
        std::uniform_real_distribution<double> value(0.0, 1.0);
        std::uniform_real_distribution<double> theta_dist(0.05, 1.0);
        int mismatches = 0;
        for (int inst = 0; inst < 200; ++inst) {
            int n = size(gen);
            std::vector<double> values(n);
            for (double& v : values) v = value(gen);
            double theta = theta_dist(gen);
            std::vector<int> marked = doerfler_mark(values, theta);

            double total = 0.0;
            for (double v : values) total += v;
            int best = n + 1;
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                double sum = 0.0;
                int count = 0;
                for (int i = 0; i < n; ++i)
                    if (mask & (1u << i)) {
                        sum += values[i];
                        ++count;
                    }
                if (sum >= theta * total) best = std::min(best, count);
            }
            if (static_cast<int>(marked.size()) != best) ++mismatches;
        }
        criterion(9, "greedy Doerfler marking matches brute-force minimal cardinality",
                  mismatches == 0, fmt("%d mismatches in 200 random instances", mismatches));
    }

    // ---- criterion 10: a priori convergence and assembly identities ----------
    {
        // slope of log(h1 error) against log(h) over the last 4 uniform levels
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (size_t i = tr_su.size() - 4; i < tr_su.size(); ++i) {
            double x = -static_cast<double>(i) * std::log(2.0);  // log h up to a constant
            double y = std::log(*tr_su[i].h1_error);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

        Problem laplace = polynomial_problem();
        laplace.b = [](Vec2) -> Vec2 { return {0.0, 0.0}; };
        laplace.f = [](Vec2) { return 0.0; };
        Mesh mesh = build_initial_mesh(DomainKind::unit_square, 1);
        mesh = refine(mesh, std::vector<int>{0, 5, 17}).mesh;
        DualMesh dual = build_dual_mesh(mesh);
        LinearSystem fvm = assemble_fvm(mesh, dual, laplace);
        LinearSystem fem = assemble_fem(mesh, laplace);
        Eigen::SparseMatrix<double> diff = fvm.matrix - fem.matrix;
        double matrix_defect = max_abs(diff) / max_abs(fem.matrix);

        auto affine = [](Vec2 x) { return 0.4 - 0.3 * x.x + 0.8 * x.y; };
        laplace.g = affine;
        LinearSystem affsys = assemble_fvm(mesh, dual, laplace);
        SolutionField u = solve(affsys, mesh);
        double affine_defect = 0.0;
        for (int v = 0; v < mesh.num_vertices(); ++v)
            affine_defect = std::max(affine_defect, std::abs(u.nodal[v] - affine(mesh.pos(v))));

        bool pass = slope >= 0.9 && slope <= 1.1 && matrix_defect <= 1e-13 &&
                    affine_defect <= 1e-12;
        criterion(10, "first-order a priori convergence, FVM=FEM identity, affine exactness",
                  pass,
                  fmt("H1 slope in h %.4f, matrix defect %.2e, affine defect %.2e", slope,
                      matrix_defect, affine_defect));
    }

    // ---- criterion 11: FVM/FEM total-error comparison -------------------------
    {
        Problem p = problem_by_key("smooth");
        Mesh mesh = build_initial_mesh(p.domain, 1);
        double lo = 1e300, hi = 0.0;
        for (int level = 0; level <= 4; ++level) {
            if (level > 0) mesh = uniform_refine(mesh).mesh;
            DualMesh dual = build_dual_mesh(mesh);
            SolutionField u_fvm = solve(assemble_fvm(mesh, dual, p), mesh);
            SolutionField u_fem = solve(assemble_fem(mesh, p), mesh);
            double total_fvm =
                error_norms(u_fvm, p).h1 + compute_indicators(mesh, u_fvm, p).osc();
            double total_fem =
                error_norms(u_fem, p).h1 + compute_indicators(mesh, u_fem, p).osc();
            double ratio = total_fvm / total_fem;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        bool pass = lo >= 1.0 / 3.0 && hi <= 3.0;
        criterion(11, "FVM and FEM total errors stay within a factor 3", pass,
                  fmt("ratio range [%.3f, %.3f] over 5 uniform levels", lo, hi));
    }

    std::printf("%d of 11 criteria passed\n", 11 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
