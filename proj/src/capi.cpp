#include "afvm.h"

#include <cstring>
#include <string>

#include "harness.hpp"
#include "mesh.hpp"
#include "version.hpp"

struct afvm_mesh_t {
    afvm::Mesh mesh;
};

struct afvm_run_t {
    afvm::ExperimentSummary summary;
};

namespace {

thread_local std::string g_last_error;

afvm_status_t fail(afvm_status_t status, const char* message) {
    g_last_error = message;
    return status;
}

// Maps the library's exception hierarchy onto C status codes.
template <class Fn>
afvm_status_t guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return AFVM_OK;
    } catch (const afvm::ConfigError& e) {
        return fail(AFVM_ERROR_CONFIG, e.what());
    } catch (const afvm::SolverError& e) {
        return fail(AFVM_ERROR_SOLVER, e.what());
    } catch (const afvm::IoError& e) {
        return fail(AFVM_ERROR_IO, e.what());
    } catch (const afvm::MeshError& e) {
        return fail(AFVM_ERROR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(AFVM_ERROR_INVALID, e.what());
    }
}

afvm::DomainKind domain_by_name(const char* name) {
    std::string s = name ? name : "";
    if (s == "unit_square_shifted") return afvm::DomainKind::unit_square_shifted;
    if (s == "l_shape") return afvm::DomainKind::l_shape;
    if (s == "unit_square") return afvm::DomainKind::unit_square;
    throw std::invalid_argument("unknown domain '" + s +
                                "' (unit_square_shifted|l_shape|unit_square)");
}

}  // namespace

extern "C" {

const char* afvm_version(void) { return afvm::kVersion; }

const char* afvm_last_error(void) { return g_last_error.c_str(); }

afvm_status_t afvm_mesh_create(const char* domain, int subdivisions, afvm_mesh_t** out) {
    if (!out) return fail(AFVM_ERROR_INVALID, "null output pointer");
    return guarded([&] {
        *out = new afvm_mesh_t{afvm::build_initial_mesh(domain_by_name(domain), subdivisions)};
    });
}

afvm_status_t afvm_mesh_read(const char* path, afvm_mesh_t** out) {
    if (!out || !path) return fail(AFVM_ERROR_INVALID, "null argument");
    return guarded([&] { *out = new afvm_mesh_t{afvm::read_mesh_file(path)}; });
}

afvm_status_t afvm_mesh_write(const afvm_mesh_t* mesh, const char* path) {
    if (!mesh || !path) return fail(AFVM_ERROR_INVALID, "null argument");
    return guarded([&] { afvm::write_mesh_file(mesh->mesh, path); });
}

afvm_status_t afvm_mesh_uniform_refine(afvm_mesh_t* mesh) {
    if (!mesh) return fail(AFVM_ERROR_INVALID, "null mesh");
    return guarded([&] { mesh->mesh = afvm::uniform_refine(mesh->mesh).mesh; });
}

long afvm_mesh_num_triangles(const afvm_mesh_t* mesh) {
    return mesh ? mesh->mesh.num_triangles() : 0;
}

long afvm_mesh_num_vertices(const afvm_mesh_t* mesh) {
    return mesh ? mesh->mesh.num_vertices() : 0;
}

double afvm_mesh_shape_regularity(const afvm_mesh_t* mesh) {
    return mesh ? afvm::shape_regularity(mesh->mesh) : 0.0;
}

void afvm_mesh_destroy(afvm_mesh_t* mesh) { delete mesh; }

void afvm_config_init(afvm_config_t* config) {
    if (!config) return;
    config->problem = "smooth";
    config->mode = "adaptive";
    config->theta = 0.5;
    config->theta_prime = 0.5;
    config->max_elements = 1000000;
    config->max_iterations = 1000000000;
    config->quadrature_degree = 4;
    config->output_dir = ".";
    config->threads = 1;
    config->diagnostics = 0;
}

afvm_status_t afvm_run_experiment(const afvm_config_t* config, afvm_run_t** out) {
    if (!config || !out) return fail(AFVM_ERROR_INVALID, "null argument");
    return guarded([&] {
        afvm::ExperimentConfig cfg;
        if (config->problem) cfg.problem = config->problem;
        if (config->mode) cfg.mode = config->mode;
        cfg.theta = config->theta;
        cfg.theta_prime = config->theta_prime;
        cfg.max_elements = config->max_elements;
        cfg.max_iterations = config->max_iterations;
        cfg.quadrature_degree = config->quadrature_degree;
        if (config->output_dir) cfg.output_dir = config->output_dir;
        cfg.threads = config->threads;
        cfg.diagnostics.orthogonality = config->diagnostics & AFVM_DIAG_ORTHOGONALITY;
        cfg.diagnostics.defect_identity = config->diagnostics & AFVM_DIAG_DEFECT_IDENTITY;
        cfg.diagnostics.quasi_orthogonality = config->diagnostics & AFVM_DIAG_QUASI_ORTHOGONALITY;
        cfg.diagnostics.fem_comparison = config->diagnostics & AFVM_DIAG_FEM_COMPARISON;
        *out = new afvm_run_t{afvm::run_experiment(cfg)};
    });
}

long afvm_run_num_levels(const afvm_run_t* run) {
    return run ? static_cast<long>(run->summary.trace.size()) : 0;
}

afvm_status_t afvm_run_rate(const afvm_run_t* run, const char* quantity, double* out) {
    if (!run || !quantity || !out) return fail(AFVM_ERROR_INVALID, "null argument");
    std::string q = quantity;
    std::optional<double> rate;
    if (q == "eta")
        rate = run->summary.rate_eta;
    else if (q == "osc")
        rate = run->summary.rate_osc;
    else if (q == "h1_error")
        rate = run->summary.rate_h1;
    else
        return fail(AFVM_ERROR_INVALID, "unknown rate quantity (eta|osc|h1_error)");
    if (!rate) return fail(AFVM_ERROR_INVALID, "rate unavailable for this run");
    *out = *rate;
    return AFVM_OK;
}

afvm_status_t afvm_run_stat(const afvm_run_t* run, const char* name, double* out) {
    if (!run || !name || !out) return fail(AFVM_ERROR_INVALID, "null argument");
    std::string n = name;
    if (n == "eta")
        *out = run->summary.final_eta;
    else if (n == "osc")
        *out = run->summary.final_osc;
    else if (n == "n_elements")
        *out = static_cast<double>(run->summary.final_elements);
    else if (n == "max_mark_ratio")
        *out = run->summary.max_mark_ratio;
    else
        return fail(AFVM_ERROR_INVALID, "unknown stat (eta|osc|n_elements|max_mark_ratio)");
    return AFVM_OK;
}

void afvm_run_destroy(afvm_run_t* run) { delete run; }

afvm_status_t afvm_trace_compare(const char* trace_a, const char* trace_b, const char* out_path) {
    if (!trace_a || !trace_b || !out_path) return fail(AFVM_ERROR_INVALID, "null argument");
    return guarded([&] {
        afvm::RunComparison cmp = afvm::compare_runs(trace_a, trace_b);
        afvm::write_comparison(cmp, out_path);
    });
}

afvm_status_t afvm_trace_emit_plot(const char* trace_path, const char* out_path) {
    if (!trace_path || !out_path) return fail(AFVM_ERROR_INVALID, "null argument");
    return guarded([&] {
        auto trace = afvm::read_trace_csv(trace_path);
        afvm::emit_plot_data(trace, out_path);
    });
}

}  // extern "C"
