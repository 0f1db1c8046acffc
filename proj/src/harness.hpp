#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptivity.hpp"
#include "problem.hpp"

namespace afvm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Diagnostics {
    bool orthogonality = false;
    bool defect_identity = false;
    bool quasi_orthogonality = false;
    bool fem_comparison = false;

    bool any() const { return orthogonality || defect_identity || quasi_orthogonality || fem_comparison; }
};

struct ExperimentConfig {
    std::string problem = "smooth";
    std::string mode = "adaptive";  // adaptive | uniform
    double theta = 0.5;
    double theta_prime = 0.5;
    long max_elements = 1'000'000;
    long max_iterations = 1'000'000'000;
    int quadrature_degree = 4;
    std::string output_dir = ".";
    int threads = 1;
    Diagnostics diagnostics;

    void validate() const;  // throws ConfigError
};

struct ExperimentSummary {
    ExperimentConfig config;
    std::vector<TraceRow> trace;
    std::optional<double> rate_eta;       // last-decade fits
    std::optional<double> rate_osc;
    std::optional<double> rate_h1;
    double final_eta = 0.0;
    double final_osc = 0.0;
    long final_elements = 0;
    double max_mark_ratio = 1.0;
    double min_osc_fraction = 1.0;
    AssumptionReport assumptions;
    // diagnostics, when enabled
    std::optional<double> orthogonality_defect;
    std::optional<double> defect_identity_mismatch;
    std::optional<double> quasi_orthogonality_max_ratio;
    std::optional<double> fem_comparison_ratio;  // total-error ratio FVM/FEM on the final level
};

// Runs the configured experiment and writes trace.csv, summary.json,
// indicators.csv, final_mesh.txt and final_solution.txt into output_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config);

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);
std::vector<TraceRow> read_trace_csv(const std::string& path);

struct RunComparison {
    struct PairedRow {
        int level;
        long n_a, n_b;
        double eta_a, eta_b;
    };
    std::vector<PairedRow> rows;
    double rate_eta_a = 0.0;
    double rate_eta_b = 0.0;
    double rate_delta = 0.0;
};

// Merges two trace files by level and fits both eta rates.
RunComparison compare_runs(const std::string& trace_a, const std::string& trace_b);
void write_comparison(const RunComparison& cmp, const std::string& path);

// Whitespace-separated "N eta osc err" columns, log-log plot ready; missing
// error values become "nan".
void emit_plot_data(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace afvm
