// Command-line front end for the adaptive FVM library. Talks to the shared
// library exclusively through the C interface in afvm.h.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afvm.h"

namespace {

// 0 success, 2 config error, 3 solver failure, 4 I/O error
int exit_code(afvm_status_t status) {
    switch (status) {
        case AFVM_OK: return 0;
        case AFVM_ERROR_INVALID:
        case AFVM_ERROR_CONFIG: return 2;
        case AFVM_ERROR_SOLVER: return 3;
        case AFVM_ERROR_IO: return 4;
    }
    return 2;
}

int report(afvm_status_t status) {
    if (status != AFVM_OK) std::fprintf(stderr, "afvm: %s\n", afvm_last_error());
    return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive vertex-centered finite volume solver"};
    app.require_subcommand(1);

    // run ------------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Run a solve-estimate-mark-refine experiment");
    std::string problem = "smooth", mode = "adaptive", out_dir = ".";
    double theta = 0.5, theta_prime = 0.5;
    long max_elements = 1000000, max_iters = 1000000000;
    int quad_degree = 4, threads = 1;
    std::vector<std::string> diags;
    run_cmd->add_option("--problem", problem, "Problem key: smooth|lshape|convection")
        ->capture_default_str();
    run_cmd->add_option("--mode", mode, "adaptive|uniform")->capture_default_str();
    run_cmd->add_option("--theta", theta, "Doerfler parameter for the indicators")
        ->capture_default_str();
    run_cmd->add_option("--theta-prime", theta_prime, "Doerfler parameter for the oscillations")
        ->capture_default_str();
    run_cmd->add_option("--max-elements", max_elements, "Stop once the mesh reaches this size")
        ->capture_default_str();
    run_cmd->add_option("--max-iters", max_iters, "Maximum number of refinement steps")
        ->capture_default_str();
    run_cmd->add_option("--quad-degree", quad_degree, "Quadrature exactness degree")
        ->capture_default_str();
    run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run_cmd->add_option("--diag", diags,
                        "Extra diagnostics: orthogonality, defect_identity, "
                        "quasi_orthogonality, fem_comparison");
    run_cmd->add_option("--threads", threads, "Worker threads for inner stages")
        ->capture_default_str();
    run_cmd->set_config("--config", "", "Optional key=value config file; flags override");

    // compare ---------------------------------------------------------------
    auto* cmp_cmd = app.add_subcommand("compare", "Merge two trace.csv files and fit rate deltas");
    std::string trace_a, trace_b, cmp_out = "comparison.csv";
    cmp_cmd->add_option("trace_a", trace_a, "First trace.csv")->required();
    cmp_cmd->add_option("trace_b", trace_b, "Second trace.csv")->required();
    cmp_cmd->add_option("--out", cmp_out, "Output file")->capture_default_str();

    // plot -------------------------------------------------------------------
    auto* plot_cmd = app.add_subcommand("plot", "Emit plot-ready N/eta/osc/err columns");
    std::string plot_trace, plot_out = "plot.dat";
    plot_cmd->add_option("trace", plot_trace, "Input trace.csv")->required();
    plot_cmd->add_option("--out", plot_out, "Output file")->capture_default_str();

    // mesh -------------------------------------------------------------------
    auto* mesh_cmd = app.add_subcommand("mesh", "Write an initial or uniformly refined mesh");
    std::string domain = "unit_square_shifted", mesh_out = "mesh.txt";
    int subdivisions = 1, refine_steps = 0;
    mesh_cmd->add_option("--domain", domain, "unit_square_shifted|l_shape|unit_square")
        ->capture_default_str();
    mesh_cmd->add_option("--subdivisions", subdivisions, "Initial subdivision count")
        ->capture_default_str();
    mesh_cmd->add_option("--refine", refine_steps, "Uniform refinement steps")
        ->capture_default_str();
    mesh_cmd->add_option("--out", mesh_out, "Output file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run_cmd->parsed()) {
        afvm_config_t config;
        afvm_config_init(&config);
        config.problem = problem.c_str();
        config.mode = mode.c_str();
        config.theta = theta;
        config.theta_prime = theta_prime;
        config.max_elements = max_elements;
        config.max_iterations = max_iters;
        config.quadrature_degree = quad_degree;
        config.output_dir = out_dir.c_str();
        config.threads = threads;
        for (const std::string& d : diags) {
            if (d == "orthogonality")
                config.diagnostics |= AFVM_DIAG_ORTHOGONALITY;
            else if (d == "defect_identity")
                config.diagnostics |= AFVM_DIAG_DEFECT_IDENTITY;
            else if (d == "quasi_orthogonality")
                config.diagnostics |= AFVM_DIAG_QUASI_ORTHOGONALITY;
            else if (d == "fem_comparison")
                config.diagnostics |= AFVM_DIAG_FEM_COMPARISON;
            else {
                std::fprintf(stderr, "afvm: unknown diagnostic '%s'\n", d.c_str());
                return 2;
            }
        }
        afvm_run_t* run = nullptr;
        afvm_status_t status = afvm_run_experiment(&config, &run);
        if (status != AFVM_OK) return report(status);
        double eta = 0.0;
        afvm_run_stat(run, "eta", &eta);
        std::printf("levels=%ld final_eta=%.6g", afvm_run_num_levels(run), eta);
        double rate = 0.0;
        if (afvm_run_rate(run, "eta", &rate) == AFVM_OK) std::printf(" rate_eta=%.4f", rate);
        std::printf("\n");
        afvm_run_destroy(run);
        return 0;
    }

    if (cmp_cmd->parsed())
        return report(afvm_trace_compare(trace_a.c_str(), trace_b.c_str(), cmp_out.c_str()));

    if (plot_cmd->parsed())
        return report(afvm_trace_emit_plot(plot_trace.c_str(), plot_out.c_str()));

    if (mesh_cmd->parsed()) {
        afvm_mesh_t* mesh = nullptr;
        afvm_status_t status = afvm_mesh_create(domain.c_str(), subdivisions, &mesh);
        if (status != AFVM_OK) return report(status);
        for (int i = 0; i < refine_steps && status == AFVM_OK; ++i)
            status = afvm_mesh_uniform_refine(mesh);
        if (status == AFVM_OK) status = afvm_mesh_write(mesh, mesh_out.c_str());
        if (status == AFVM_OK)
            std::printf("triangles=%ld vertices=%ld\n", afvm_mesh_num_triangles(mesh),
                        afvm_mesh_num_vertices(mesh));
        afvm_mesh_destroy(mesh);
        return report(status);
    }

    return 2;
}
