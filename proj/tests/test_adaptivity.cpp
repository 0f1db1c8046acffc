#include <doctest.h>

#include <cmath>
#include <random>

#include "adaptivity.hpp"
#include "test_support.hpp"

using namespace afvm;

namespace {

// Exhaustive minimal-cardinality Doerfler oracle for small instances.
int brute_force_min_cardinality(const std::vector<double>& values, double theta) {
    const int n = static_cast<int>(values.size());
    double total = 0.0;
    for (double v : values) total += v;
    double threshold = theta * total;
    int best = n + 1;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) {
                sum += values[i];
                ++count;
            }
        if (sum >= threshold) best = std::min(best, count);
    }
    return best;
}

// Minimal augmentation oracle: smallest superset of m_eta meeting the
// oscillation criterion.
int brute_force_min_augmented(const std::vector<double>& osc, const std::vector<int>& m_eta,
                              double theta_prime) {
    const int n = static_cast<int>(osc.size());
    double total = 0.0;
    for (double v : osc) total += v;
    double threshold = theta_prime * total;
    unsigned base = 0;
    for (int id : m_eta) base |= 1u << id;
    int best = n + 1;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if ((mask & base) != base) continue;
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) {
                sum += osc[i];
                ++count;
            }
        if (sum >= threshold) best = std::min(best, count);
    }
    return best;
}

}  // namespace

TEST_SUITE("adaptivity") {

TEST_CASE("Doerfler marking worked examples") {
    std::vector<double> values{4.0, 3.0, 2.0, 1.0};
    CHECK(doerfler_mark(values, 0.5) == std::vector<int>{0, 1});
    CHECK(doerfler_mark(values, 1.0) == std::vector<int>{0, 1, 2, 3});
    CHECK(doerfler_mark(std::vector<double>{5.0}, 0.1) == std::vector<int>{0});
    CHECK(doerfler_mark(std::vector<double>{0.0, 0.0}, 0.7).empty());
    // zero entries are never marked even for theta = 1
    CHECK(doerfler_mark(std::vector<double>{2.0, 0.0, 1.0}, 1.0) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(doerfler_mark(values, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(doerfler_mark(values, 1.5), std::invalid_argument);
}

TEST_CASE("greedy marking is minimal and feasible on random instances") {
    std::uniform_int_distribution<int> size(1, 15);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    std::uniform_real_distribution<double> theta_dist(0.05, 1.0);
    for (int inst = 0; inst < 200; ++inst) {
        int n = size(afvm_test::rng());
        std::vector<double> values(n);
        for (double& v : values) v = value(afvm_test::rng());
        double theta = theta_dist(afvm_test::rng());

        std::vector<int> marked = doerfler_mark(values, theta);

        double total = 0.0;
        for (double v : values) total += v;
        double sum = 0.0;
        for (int id : marked) sum += values[id];
        CHECK(sum >= theta * total);

        CHECK(static_cast<int>(marked.size()) == brute_force_min_cardinality(values, theta));
    }
}

TEST_CASE("two-stage marking worked examples") {
    MarkingParams params{0.5, 0.5};

    SUBCASE("zero oscillations leave the eta set unchanged") {
        std::vector<double> eta{1.0, 2.0, 3.0};
        std::vector<double> osc{0.0, 0.0, 0.0};
        TwoStageMarks marks = mark_two_stage(eta, osc, params);
        CHECK(marks.m_total == marks.m_eta);
        CHECK(marks.osc_fraction == 1.0);
    }

    SUBCASE("eta set already captures the oscillations") {
        std::vector<double> eta{5.0, 1.0};
        std::vector<double> osc{9.0, 1.0};
        TwoStageMarks marks = mark_two_stage(eta, osc, params);
        CHECK(marks.m_eta == std::vector<int>{0});
        CHECK(marks.m_total == std::vector<int>{0});
        CHECK(marks.osc_fraction == doctest::Approx(0.9));
    }

    SUBCASE("augmentation adds the largest oscillation element") {
        std::vector<double> eta{1.0, 0.0, 0.0};
        std::vector<double> osc{0.0, 1.0, 1.0};
        TwoStageMarks marks = mark_two_stage(eta, osc, params);
        CHECK(marks.m_eta == std::vector<int>{0});
        CHECK(marks.m_total == std::vector<int>{0, 1});
        CHECK(marks.osc_fraction == doctest::Approx(0.0));
    }
}

TEST_CASE("two-stage marking is contained and minimal on random instances") {
    std::uniform_int_distribution<int> size(1, 12);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    for (int inst = 0; inst < 100; ++inst) {
        int n = size(afvm_test::rng());
        std::vector<double> eta(n), osc(n);
        for (double& v : eta) v = value(afvm_test::rng());
        for (double& v : osc) v = value(afvm_test::rng());
        MarkingParams params{0.6, 0.3};
        TwoStageMarks marks = mark_two_stage(eta, osc, params);

        for (int id : marks.m_eta)
            CHECK(std::find(marks.m_total.begin(), marks.m_total.end(), id) !=
                  marks.m_total.end());

        double total = 0.0, captured = 0.0;
        for (double v : osc) total += v;
        for (int id : marks.m_total) captured += osc[id];
        CHECK(captured >= params.theta_prime * total - 1e-15);

        CHECK(static_cast<int>(marks.m_total.size()) ==
              brute_force_min_augmented(osc, marks.m_eta, params.theta_prime));
    }
}

TEST_CASE("marking parameter validation") {
    CHECK_THROWS_AS((MarkingParams{0.5, 0.7}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((MarkingParams{1.2, 0.5}).validate(), std::invalid_argument);
    CHECK_NOTHROW((MarkingParams{1.0, 1.0}).validate());
}

TEST_CASE("a single iteration refines once and records one row") {
    Problem p = smooth_problem();
    AdaptiveOptions opts;
    opts.max_iterations = 1;
    AdaptiveResult run = adaptive_loop(p, opts);
    REQUIRE(run.trace.size() == 1);
    CHECK(run.trace[0].n_elements == 16);
    CHECK(run.final_mesh.num_triangles() > 16);
    CHECK(!run.solver_error);
}

TEST_CASE("element counts increase strictly along the trace") {
    Problem p = lshape_problem();
    AdaptiveOptions opts;
    opts.max_iterations = 8;
    AdaptiveResult run = adaptive_loop(p, opts);
    REQUIRE(run.trace.size() == 8);
    for (size_t i = 1; i < run.trace.size(); ++i) {
        CHECK(run.trace[i].n_elements > run.trace[i - 1].n_elements);
        CHECK(run.trace[i].mark_ratio >= 1.0);
    }
}

TEST_CASE("uniform mode quadruples and skips marking") {
    Problem p = smooth_problem();
    AdaptiveOptions opts;
    opts.mode = RefinementMode::uniform;
    opts.max_iterations = 3;
    AdaptiveResult run = adaptive_loop(p, opts);
    REQUIRE(run.trace.size() == 3);
    CHECK(run.trace[0].n_elements == 16);
    CHECK(run.trace[1].n_elements == 64);
    CHECK(run.trace[2].n_elements == 256);
    CHECK(run.final_mesh.num_triangles() == 1024);
}

TEST_CASE("element budget stops the loop") {
    Problem p = smooth_problem();
    AdaptiveOptions opts;
    opts.max_elements = 100;
    AdaptiveResult run = adaptive_loop(p, opts);
    CHECK(run.final_mesh.num_triangles() >= 100);
    CHECK(run.trace.back().n_elements < 100 * 4);
}

TEST_CASE("rate fits recover synthetic power laws") {
    std::vector<TraceRow> trace;
    for (int k = 0; k < 10; ++k) {
        TraceRow row;
        row.level = k;
        row.n_elements = 100 << k;
        row.eta = std::pow(static_cast<double>(row.n_elements), -0.5);
        row.osc = 7.0 / static_cast<double>(row.n_elements);
        row.h1_error = 3.0 * std::pow(static_cast<double>(row.n_elements), -0.25);
        trace.push_back(row);
    }
    CHECK(fit_rate(trace, TraceQuantity::eta, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit_rate(trace, TraceQuantity::osc, 0.6) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit_rate(trace, TraceQuantity::h1_error, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(fit_rate_last_decade(trace, TraceQuantity::eta) == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<TraceRow> short_trace(trace.begin(), trace.begin() + 3);
    CHECK_THROWS_AS(fit_rate(short_trace, TraceQuantity::eta, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate(trace, TraceQuantity::eta, 0.2), std::invalid_argument);
}

TEST_CASE("adaptive L-shape refinement concentrates at the reentrant corner") {
    Problem p = lshape_problem();
    AdaptiveOptions opts;
    opts.max_iterations = 12;
    opts.keep_snapshots = true;
    AdaptiveResult run = adaptive_loop(p, opts);
    REQUIRE(run.levels.size() == 12);

    double ball_area_fraction = (M_PI * 0.1 * 0.1 * 0.75) / 3.0;  // three quadrants of the ball
    for (size_t level = 10; level < run.levels.size(); ++level) {
        const LevelSnapshot& snap = run.levels[level];
        TwoStageMarks marks =
            mark_two_stage(snap.indicators.eta_sq, snap.indicators.osc_sq, opts.marking);
        int near_corner = 0;
        for (int t : marks.m_total) {
            double r = 2.0;
            for (int k = 0; k < 3; ++k) r = std::min(r, norm(snap.mesh.corner(t, k)));
            if (r <= 0.1) ++near_corner;
        }
        double marked_fraction = static_cast<double>(near_corner) / marks.m_total.size();
        CHECK(marked_fraction >= 5.0 * ball_area_fraction);
    }
}

TEST_CASE("quasi-orthogonality diagnostic") {
    SUBCASE("exactly representable solutions have zero increments") {
        auto affine = [](Vec2 x) { return 0.2 + 0.5 * x.x + 0.1 * x.y; };
        Problem p;
        p.key = "laplace-affine";
        p.domain = DomainKind::unit_square;
        p.A = [](Vec2) -> Mat2 { return {1.0, 0.0, 0.0, 1.0}; };
        p.div_A = [](Vec2) -> Vec2 { return {0.0, 0.0}; };
        p.b = [](Vec2) -> Vec2 { return {0.0, 0.0}; };
        p.div_b = [](Vec2) { return 0.0; };
        p.c = [](Vec2) { return 0.0; };
        p.f = [](Vec2) { return 0.0; };
        p.g = affine;

        AdaptiveOptions opts;
        opts.mode = RefinementMode::uniform;
        opts.max_iterations = 3;
        opts.keep_snapshots = true;
        opts.compute_errors = false;
        AdaptiveResult run = adaptive_loop(p, opts);
        for (size_t k = 0; k + 1 < run.levels.size(); ++k) {
            SolutionField lifted = prolong(run.levels[k].solution, run.levels[k + 1].mesh);
            double diff = 0.0;
            for (int v = 0; v < run.levels[k + 1].mesh.num_vertices(); ++v)
                diff = std::max(diff,
                                std::abs(lifted.nodal[v] - run.levels[k + 1].solution.nodal[v]));
            CHECK(diff <= 1e-12);
        }
    }

    SUBCASE("ratio sequence stays bounded on the smooth benchmark") {
        Problem p = smooth_problem();
        AdaptiveOptions opts;
        opts.max_iterations = 14;
        opts.keep_snapshots = true;
        opts.compute_errors = false;
        AdaptiveResult run = adaptive_loop(p, opts);
        auto ratios = quasi_orthogonality_diagnostic(run);
        REQUIRE(ratios.size() >= 11);
        // not monotonically increasing over the last 10 levels
        size_t start = ratios.size() - 10;
        bool monotone = true;
        for (size_t i = start + 1; i < ratios.size(); ++i)
            if (ratios[i] <= ratios[i - 1]) monotone = false;
        CHECK(!monotone);
    }

    SUBCASE("snapshots are required") {
        Problem p = smooth_problem();
        AdaptiveOptions opts;
        opts.max_iterations = 3;
        AdaptiveResult run = adaptive_loop(p, opts);
        CHECK_THROWS_AS(quasi_orthogonality_diagnostic(run), std::invalid_argument);
    }
}

TEST_CASE("estimator contracts geometrically on adaptive runs") {
    for (const char* key : {"smooth", "lshape"}) {
        Problem p = problem_by_key(key);
        AdaptiveOptions opts;
        opts.max_iterations = 18;
        opts.compute_errors = false;
        AdaptiveResult run = adaptive_loop(p, opts);
        REQUIRE(run.trace.size() == 18);
        // fitted per-iteration decay factor of eta^2 over the last 15 rows
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (size_t i = run.trace.size() - 15; i < run.trace.size(); ++i) {
            double x = static_cast<double>(i);
            double y = 2.0 * std::log(run.trace[i].eta);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CAPTURE(key);
        CHECK(std::exp(slope) < 1.0);
    }
}

}  // TEST_SUITE
