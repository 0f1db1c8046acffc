#include "adaptivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace afvm {

void MarkingParams::validate() const {
    if (!(theta_prime > 0.0 && theta_prime <= theta && theta <= 1.0))
        throw std::invalid_argument("marking parameters must satisfy 0 < theta' <= theta <= 1");
}

namespace {

// Sum in ascending-id order, the order tests and callers naturally use.
double id_order_sum(std::span<const double> values, std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    double s = 0.0;
    for (int id : ids) s += values[id];
    return s;
}

}  // namespace

std::vector<int> doerfler_mark(std::span<const double> values, double theta) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("theta must be in (0,1]");
    const int n = static_cast<int>(values.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    double total = std::accumulate(values.begin(), values.end(), 0.0);
    double threshold = theta * total;
    std::vector<int> marked;
    double sum = 0.0;
    for (int id : order) {
        // The running sum accumulates in descending-value order; confirm the
        // threshold with the id-ordered sum so the marking criterion holds
        // for whichever summation order the caller checks with.
        if (sum >= threshold && id_order_sum(values, marked) >= threshold) break;
        if (values[id] <= 0.0) break;  // remaining elements cannot contribute
        marked.push_back(id);
        sum += values[id];
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

TwoStageMarks mark_two_stage(std::span<const double> eta_sq, std::span<const double> osc_sq,
                             const MarkingParams& params) {
    params.validate();
    if (eta_sq.size() != osc_sq.size())
        throw std::invalid_argument("indicator fields live on different meshes");

    TwoStageMarks marks;
    marks.m_eta = doerfler_mark(eta_sq, params.theta);

    double osc_total = std::accumulate(osc_sq.begin(), osc_sq.end(), 0.0);
    double captured = 0.0;
    std::vector<uint8_t> in_set(eta_sq.size(), 0);
    for (int id : marks.m_eta) {
        in_set[id] = 1;
        captured += osc_sq[id];
    }
    marks.osc_fraction = osc_total > 0.0 ? captured / osc_total : 1.0;
    marks.m_total = marks.m_eta;

    double threshold = params.theta_prime * osc_total;
    if (captured < threshold) {
        const int n = static_cast<int>(osc_sq.size());
        std::vector<int> order;
        order.reserve(n);
        for (int i = 0; i < n; ++i)
            if (!in_set[i]) order.push_back(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (osc_sq[a] != osc_sq[b]) return osc_sq[a] > osc_sq[b];
            return a < b;
        });
        for (int id : order) {
            if (captured >= threshold && id_order_sum(osc_sq, marks.m_total) >= threshold) break;
            marks.m_total.push_back(id);
            captured += osc_sq[id];
        }
        std::sort(marks.m_total.begin(), marks.m_total.end());
    }
    return marks;
}

AdaptiveResult adaptive_loop(const Problem& problem, const AdaptiveOptions& options) {
    if (options.mode == RefinementMode::adaptive) options.marking.validate();

    AdaptiveResult result;
    Mesh mesh = build_initial_mesh(problem.domain, 1);
    std::vector<int> parent_of_current;  // vs previous level

    int level = 0;
    while (true) {
        auto t0 = std::chrono::steady_clock::now();
        DualMesh dual = build_dual_mesh(mesh);
        SolutionField u;
        SolveInfo info;
        try {
            LinearSystem system = assemble_fvm(mesh, dual, problem);
            u = solve(system, mesh, &info);
        } catch (const SolverError& err) {
            result.solver_error = err.what();
            result.final_mesh = std::move(mesh);
            break;
        }
        IndicatorField indicators = compute_indicators(mesh, u, problem);
        if (options.observer) options.observer(mesh, dual, u, indicators);

        TraceRow row;
        row.level = level;
        row.n_elements = mesh.num_triangles();
        row.n_vertices = mesh.num_vertices();
        row.eta = indicators.eta();
        row.osc = indicators.osc();
        row.solve_residual = info.residual;
        if (options.compute_errors && problem.exact) {
            ErrorNorms norms = error_norms(u, problem);
            row.h1_error = norms.h1;
            row.l2_error = norms.l2;
        }

        std::vector<int> marked;
        if (options.mode == RefinementMode::adaptive) {
            TwoStageMarks marks = mark_two_stage(indicators.eta_sq, indicators.osc_sq,
                                                 options.marking);
            row.n_marked_eta = static_cast<long>(marks.m_eta.size());
            row.n_marked_total = static_cast<long>(marks.m_total.size());
            row.mark_ratio = marks.m_eta.empty()
                                 ? 1.0
                                 : static_cast<double>(marks.m_total.size()) / marks.m_eta.size();
            row.osc_fraction = marks.osc_fraction;
            marked = std::move(marks.m_total);
        } else {
            row.n_marked_eta = row.n_marked_total = mesh.num_triangles();
        }

        if (!options.keep_snapshots) result.levels.clear();
        result.levels.push_back({mesh, u, indicators, parent_of_current});
        // snapshot solutions must reference the snapshot meshes, whose
        // addresses move when the vector grows
        for (auto& snap : result.levels) snap.solution.mesh = &snap.mesh;

        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.trace.push_back(row);

        if (options.mode == RefinementMode::adaptive && marked.empty()) {
            result.final_mesh = std::move(mesh);
            break;  // estimator vanished, nothing to refine
        }

        Refinement next = options.mode == RefinementMode::adaptive ? refine(mesh, marked)
                                                                   : uniform_refine(mesh);
        mesh = std::move(next.mesh);
        parent_of_current = std::move(next.parent);
        ++level;

        if (level >= options.max_iterations || mesh.num_triangles() >= options.max_elements) {
            result.final_mesh = std::move(mesh);
            break;
        }
    }
    result.snapshots_complete = options.keep_snapshots;
    return result;
}

namespace {

double quantity_value(const TraceRow& row, TraceQuantity q) {
    switch (q) {
        case TraceQuantity::eta: return row.eta;
        case TraceQuantity::osc: return row.osc;
        case TraceQuantity::h1_error:
            if (!row.h1_error) throw std::invalid_argument("trace has no h1_error column");
            return *row.h1_error;
    }
    return 0.0;
}

double fit_slope(const std::vector<std::pair<double, double>>& pts) {
    double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

double fit_rate(std::span<const TraceRow> trace, TraceQuantity quantity, double window_fraction) {
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw std::invalid_argument("window fraction must be in (0,1]");
    size_t n = trace.size();
    size_t count = std::max<size_t>(1, static_cast<size_t>(std::llround(window_fraction * n)));
    size_t begin = n - std::min(count, n);
    std::vector<std::pair<double, double>> pts;
    for (size_t i = begin; i < n; ++i) {
        double q = quantity_value(trace[i], quantity);
        if (q > 0.0) pts.emplace_back(std::log(static_cast<double>(trace[i].n_elements)),
                                      std::log(q));
    }
    if (pts.size() < 4) throw std::invalid_argument("rate fit needs at least 4 rows in the window");
    return -fit_slope(pts);
}

double fit_rate_last_decade(std::span<const TraceRow> trace, TraceQuantity quantity) {
    if (trace.empty()) throw std::invalid_argument("empty trace");
    double n_max = static_cast<double>(trace.back().n_elements);
    std::vector<std::pair<double, double>> pts;
    for (const TraceRow& row : trace) {
        if (row.n_elements < n_max / 10.0) continue;
        double q = quantity_value(row, quantity);
        if (q > 0.0)
            pts.emplace_back(std::log(static_cast<double>(row.n_elements)), std::log(q));
    }
    if (pts.size() < 4) throw std::invalid_argument("rate fit needs at least 4 rows in the window");
    return -fit_slope(pts);
}

std::vector<double> quasi_orthogonality_diagnostic(const AdaptiveResult& result) {
    if (!result.snapshots_complete || result.levels.size() < 2)
        throw std::invalid_argument("quasi-orthogonality diagnostic needs full snapshots");
    const size_t n = result.levels.size();
    std::vector<double> increments(n - 1);
    for (size_t k = 0; k + 1 < n; ++k) {
        const LevelSnapshot& fine = result.levels[k + 1];
        SolutionField lifted = prolong(result.levels[k].solution, fine.mesh);
        SolutionField diff;
        diff.mesh = &fine.mesh;
        diff.nodal.resize(fine.mesh.num_vertices());
        for (int v = 0; v < fine.mesh.num_vertices(); ++v)
            diff.nodal[v] = fine.solution.nodal[v] - lifted.nodal[v];
        double d = discrete_h1_norm(diff);
        increments[k] = d * d;
    }
    std::vector<double> ratios(n - 1);
    double tail = 0.0;
    for (size_t l = n - 1; l-- > 0;) {
        tail += increments[l];
        double eta_sq = result.levels[l].indicators.eta_total_sq;
        ratios[l] = eta_sq > 0.0 ? tail / eta_sq : 0.0;
    }
    return ratios;
}

}  // namespace afvm
