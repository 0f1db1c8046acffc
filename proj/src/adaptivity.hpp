#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "estimator.hpp"
#include "fvm_solver.hpp"
#include "mesh.hpp"
#include "problem.hpp"

namespace afvm {

struct MarkingParams {
    double theta = 0.5;
    double theta_prime = 0.5;

    void validate() const;  // throws std::invalid_argument unless 0 < theta' <= theta <= 1
};

// Minimal-cardinality Doerfler set: theta * sum(values) <= sum over the
// returned ids. Greedy on descending values, ties broken by smaller id.
std::vector<int> doerfler_mark(std::span<const double> values, double theta);

struct TwoStageMarks {
    std::vector<int> m_eta;    // Doerfler set for the indicators
    std::vector<int> m_total;  // augmented set satisfying the oscillation criterion
    double osc_fraction = 1.0; // osc(M_eta)^2 / osc^2
};

TwoStageMarks mark_two_stage(std::span<const double> eta_sq, std::span<const double> osc_sq,
                             const MarkingParams& params);

struct TraceRow {
    int level = 0;
    long n_elements = 0;
    long n_vertices = 0;
    double eta = 0.0;
    double osc = 0.0;
    std::optional<double> h1_error;
    std::optional<double> l2_error;
    long n_marked_eta = 0;
    long n_marked_total = 0;
    double mark_ratio = 1.0;
    double osc_fraction = 1.0;
    double solve_residual = 0.0;
    double wall_time_s = 0.0;
};

enum class RefinementMode { adaptive, uniform };

struct AdaptiveOptions {
    MarkingParams marking;
    RefinementMode mode = RefinementMode::adaptive;
    long max_elements = 1'000'000;
    int max_iterations = std::numeric_limits<int>::max();
    bool compute_errors = true;   // fill h1/l2 columns when an exact solution exists
    bool keep_snapshots = false;  // retain every level for diagnostics
    // Called after every solved level, before refinement.
    std::function<void(const Mesh&, const DualMesh&, const SolutionField&, const IndicatorField&)>
        observer;
};

// solution.mesh points at the snapshot's own mesh; move an AdaptiveResult
// rather than copying single snapshots out of it.
struct LevelSnapshot {
    Mesh mesh;
    SolutionField solution;
    IndicatorField indicators;
    std::vector<int> parent;  // triangle -> parent in the previous level (empty at level 0)
};

struct AdaptiveResult {
    std::vector<TraceRow> trace;
    Mesh final_mesh;                      // last produced mesh (not solved when the run
                                          // stopped on the element budget)
    std::vector<LevelSnapshot> levels;    // all solved levels, or just the last one
    bool snapshots_complete = false;
    std::optional<std::string> solver_error;  // set when the loop aborted mid-run
};

// Solve -> estimate -> mark I -> mark II -> refine, per Algorithm levels.
// Uniform mode skips marking and refines every element into four children.
AdaptiveResult adaptive_loop(const Problem& problem, const AdaptiveOptions& options);

enum class TraceQuantity { eta, osc, h1_error };

// Least-squares slope of log(quantity) vs log(n_elements) over the last
// `window_fraction` of rows; the returned rate is the negated slope so that
// 0.5 means decay like N^{-1/2}. Needs at least 4 rows in the window.
double fit_rate(std::span<const TraceRow> trace, TraceQuantity quantity, double window_fraction);

// Same fit restricted to rows with n_elements >= max n_elements / 10.
double fit_rate_last_decade(std::span<const TraceRow> trace, TraceQuantity quantity);

// Per level l: sum_{k>=l} ||u_{k+1} - u_k||_{H1}^2 / eta_l^2, successive
// solutions compared on the finer mesh. Requires complete snapshots.
std::vector<double> quasi_orthogonality_diagnostic(const AdaptiveResult& result);

}  // namespace afvm
