#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "version.hpp"

namespace afvm {

void ExperimentConfig::validate() const {
    if (problem != "smooth" && problem != "lshape" && problem != "convection")
        throw ConfigError("unknown problem '" + problem + "' (smooth|lshape|convection)");
    if (mode != "adaptive" && mode != "uniform")
        throw ConfigError("mode must be 'adaptive' or 'uniform'");
    if (mode == "adaptive" && !(theta_prime > 0.0 && theta_prime <= theta && theta <= 1.0))
        throw ConfigError("marking parameters must satisfy 0 < theta' <= theta <= 1");
    if (max_elements < 1) throw ConfigError("max-elements must be positive");
    if (max_iterations < 1) throw ConfigError("max-iters must be positive");
    if (quadrature_degree < 1 || quadrature_degree > 10)
        throw ConfigError("quad-degree must be in [1,10]");
    if (threads < 1) throw ConfigError("threads must be positive");
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

void write_solution_text(const SolutionField& u, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    for (size_t v = 0; v < u.nodal.size(); ++v)
        f << v << ' ' << format_double(u.nodal[v]) << "\n";
}

nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json diag = nlohmann::json::array();
    if (c.diagnostics.orthogonality) diag.push_back("orthogonality");
    if (c.diagnostics.defect_identity) diag.push_back("defect_identity");
    if (c.diagnostics.quasi_orthogonality) diag.push_back("quasi_orthogonality");
    if (c.diagnostics.fem_comparison) diag.push_back("fem_comparison");
    return {{"problem", c.problem},
            {"mode", c.mode},
            {"theta", c.theta},
            {"theta_prime", c.theta_prime},
            {"max_elements", c.max_elements},
            {"max_iterations", c.max_iterations},
            {"quadrature_degree", c.quadrature_degree},
            {"output_dir", c.output_dir},
            {"threads", c.threads},
            {"diagnostics", diag}};
}

void set_optional(nlohmann::json& j, const char* key, const std::optional<double>& v) {
    if (v)
        j[key] = *v;
    else
        j[key] = nullptr;
}

}  // namespace

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "level,n_elements,n_vertices,eta,osc,h1_error,l2_error,n_marked_eta,n_marked_total,"
         "mark_ratio,osc_fraction,solve_residual,wall_time_s\n";
    for (const TraceRow& r : trace) {
        f << r.level << ',' << r.n_elements << ',' << r.n_vertices << ',' << format_double(r.eta)
          << ',' << format_double(r.osc) << ',' << format_optional(r.h1_error) << ','
          << format_optional(r.l2_error) << ',' << r.n_marked_eta << ',' << r.n_marked_total
          << ',' << format_double(r.mark_ratio) << ',' << format_double(r.osc_fraction) << ','
          << format_double(r.solve_residual) << ',' << format_double(r.wall_time_s) << "\n";
    }
    if (!f) throw IoError("write failure on " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": malformed numeric field '" + s +
                      "'");
    }
}

long parse_long(const std::string& s, const std::string& path, int line_no) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": malformed integer field '" + s +
                      "'");
    }
}

}  // namespace

std::vector<TraceRow> read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError(path + ":1: missing header line");
    if (split_csv_line(line).size() != 13)
        throw IoError(path + ":1: unexpected trace header");

    std::vector<TraceRow> trace;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 13)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected 13 fields, got " +
                          std::to_string(fields.size()));
        TraceRow r;
        r.level = static_cast<int>(parse_long(fields[0], path, line_no));
        r.n_elements = parse_long(fields[1], path, line_no);
        r.n_vertices = parse_long(fields[2], path, line_no);
        r.eta = parse_double(fields[3], path, line_no);
        r.osc = parse_double(fields[4], path, line_no);
        if (!fields[5].empty()) r.h1_error = parse_double(fields[5], path, line_no);
        if (!fields[6].empty()) r.l2_error = parse_double(fields[6], path, line_no);
        r.n_marked_eta = parse_long(fields[7], path, line_no);
        r.n_marked_total = parse_long(fields[8], path, line_no);
        r.mark_ratio = parse_double(fields[9], path, line_no);
        r.osc_fraction = parse_double(fields[10], path, line_no);
        r.solve_residual = parse_double(fields[11], path, line_no);
        r.wall_time_s = parse_double(fields[12], path, line_no);
        trace.push_back(r);
    }
    return trace;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.output_dir);

    Problem problem = problem_by_key(config.problem);
    problem.tri_quad_degree = config.quadrature_degree;
    problem.seg_quad_degree = config.quadrature_degree;

    AdaptiveOptions options;
    options.marking = {config.theta, config.theta_prime};
    options.mode = config.mode == "adaptive" ? RefinementMode::adaptive : RefinementMode::uniform;
    options.max_elements = config.max_elements;
    options.max_iterations = static_cast<int>(
        std::min<long>(config.max_iterations, std::numeric_limits<int>::max()));
    options.keep_snapshots =
        config.diagnostics.quasi_orthogonality || config.diagnostics.defect_identity;

    AdaptiveResult run = adaptive_loop(problem, options);

    ExperimentSummary summary;
    summary.config = config;
    summary.trace = run.trace;

    // Sampled coefficient diagnostics on a twice uniformly refined T_0.
    {
        Mesh sampling_mesh = build_initial_mesh(problem.domain, 1);
        for (int i = 0; i < 2; ++i) sampling_mesh = uniform_refine(sampling_mesh).mesh;
        summary.assumptions = check_assumptions(problem, sampling_mesh, 45);
    }

    auto try_rate = [&](TraceQuantity q) -> std::optional<double> {
        try {
            return fit_rate_last_decade(run.trace, q);
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    };
    summary.rate_eta = try_rate(TraceQuantity::eta);
    summary.rate_osc = try_rate(TraceQuantity::osc);
    if (!run.trace.empty() && run.trace.back().h1_error)
        summary.rate_h1 = try_rate(TraceQuantity::h1_error);

    if (!run.trace.empty()) {
        summary.final_eta = run.trace.back().eta;
        summary.final_osc = run.trace.back().osc;
        summary.final_elements = run.trace.back().n_elements;
        for (const TraceRow& r : run.trace) {
            summary.max_mark_ratio = std::max(summary.max_mark_ratio, r.mark_ratio);
            summary.min_osc_fraction = std::min(summary.min_osc_fraction, r.osc_fraction);
        }
    }

    if (!run.levels.empty()) {
        const LevelSnapshot& last = run.levels.back();
        if (config.diagnostics.orthogonality) {
            DualMesh dual = build_dual_mesh(last.mesh);
            summary.orthogonality_defect =
                check_discrete_orthogonality(last.mesh, dual, last.solution, problem);
        }
        if (config.diagnostics.defect_identity && run.levels.size() >= 2) {
            const LevelSnapshot& prev = run.levels[run.levels.size() - 2];
            DualMesh dual = build_dual_mesh(last.mesh);
            summary.defect_identity_mismatch = check_defect_identity(
                prev.mesh, prev.solution, last.mesh, dual, last.solution, last.parent, problem);
        }
        if (config.diagnostics.quasi_orthogonality && run.snapshots_complete &&
            run.levels.size() >= 2) {
            auto ratios = quasi_orthogonality_diagnostic(run);
            summary.quasi_orthogonality_max_ratio =
                *std::max_element(ratios.begin(), ratios.end());
        }
        if (config.diagnostics.fem_comparison && problem.exact) {
            LinearSystem fem = assemble_fem(last.mesh, problem);
            SolutionField u_fem = solve(fem, last.mesh, nullptr);
            ErrorNorms fvm_err = error_norms(last.solution, problem);
            ErrorNorms fem_err = error_norms(u_fem, problem);
            IndicatorField fem_ind = compute_indicators(last.mesh, u_fem, problem);
            double denom = fem_err.h1 + fem_ind.osc();
            if (denom > 0.0)
                summary.fem_comparison_ratio = (fvm_err.h1 + last.indicators.osc()) / denom;
        }

        write_indicator_csv(last.indicators, config.output_dir + "/indicators.csv");
        write_solution_text(last.solution, config.output_dir + "/final_solution.txt");
    }

    write_trace_csv(run.trace, config.output_dir + "/trace.csv");
    write_mesh_file(run.final_mesh, config.output_dir + "/final_mesh.txt");

    nlohmann::json j;
    j["software"] = {{"name", "afvm"}, {"version", kVersion}};
    j["config"] = config_json(config);
    set_optional(j, "rate_eta", summary.rate_eta);
    set_optional(j, "rate_osc", summary.rate_osc);
    set_optional(j, "rate_h1_error", summary.rate_h1);
    j["final_eta"] = summary.final_eta;
    j["final_osc"] = summary.final_osc;
    j["final_elements"] = summary.final_elements;
    j["levels"] = summary.trace.size();
    j["max_mark_ratio"] = summary.max_mark_ratio;
    j["min_osc_fraction"] = summary.min_osc_fraction;
    j["assumptions"] = {{"lambda_min", summary.assumptions.lambda_min},
                        {"lambda_max", summary.assumptions.lambda_max},
                        {"max_min_eigenvalue", summary.assumptions.max_min_eigenvalue},
                        {"min_half_divb_plus_c", summary.assumptions.min_half_divb_plus_c},
                        {"samples", summary.assumptions.samples},
                        {"ellipticity_ok", summary.assumptions.ellipticity_ok()},
                        {"drift_ok", summary.assumptions.drift_ok()}};
    set_optional(j, "orthogonality_defect", summary.orthogonality_defect);
    set_optional(j, "defect_identity_mismatch", summary.defect_identity_mismatch);
    set_optional(j, "quasi_orthogonality_max_ratio", summary.quasi_orthogonality_max_ratio);
    set_optional(j, "fem_comparison_ratio", summary.fem_comparison_ratio);
    if (run.solver_error) j["solver_error"] = *run.solver_error;

    std::ofstream jf(config.output_dir + "/summary.json");
    if (!jf) throw IoError("cannot open summary.json for writing");
    jf << j.dump(2) << "\n";

    if (run.solver_error) throw SolverError(*run.solver_error);
    return summary;
}

RunComparison compare_runs(const std::string& trace_a, const std::string& trace_b) {
    std::vector<TraceRow> a = read_trace_csv(trace_a);
    std::vector<TraceRow> b = read_trace_csv(trace_b);

    RunComparison cmp;
    size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia].level < b[ib].level) {
            ++ia;
        } else if (b[ib].level < a[ia].level) {
            ++ib;
        } else {
            cmp.rows.push_back({a[ia].level, a[ia].n_elements, b[ib].n_elements, a[ia].eta,
                                b[ib].eta});
            ++ia;
            ++ib;
        }
    }
    cmp.rate_eta_a = fit_rate_last_decade(a, TraceQuantity::eta);
    cmp.rate_eta_b = fit_rate_last_decade(b, TraceQuantity::eta);
    cmp.rate_delta = cmp.rate_eta_a - cmp.rate_eta_b;
    return cmp;
}

void write_comparison(const RunComparison& cmp, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "level,n_elements_a,eta_a,n_elements_b,eta_b\n";
    for (const auto& r : cmp.rows)
        f << r.level << ',' << r.n_a << ',' << format_double(r.eta_a) << ',' << r.n_b << ','
          << format_double(r.eta_b) << "\n";
    f << "# rate_eta_a " << format_double(cmp.rate_eta_a) << "\n";
    f << "# rate_eta_b " << format_double(cmp.rate_eta_b) << "\n";
    f << "# rate_delta " << format_double(cmp.rate_delta) << "\n";
    if (!f) throw IoError("write failure on " + path);
}

void emit_plot_data(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "# N eta osc err\n";
    char buf[96];
    for (const TraceRow& r : trace) {
        // %.17g round-trips doubles exactly
        std::snprintf(buf, sizeof buf, "%ld %.17g %.17g %.17g\n", r.n_elements, r.eta, r.osc,
                      r.h1_error ? *r.h1_error : std::nan(""));
        f << buf;
    }
    if (!f) throw IoError("write failure on " + path);
}

}  // namespace afvm
