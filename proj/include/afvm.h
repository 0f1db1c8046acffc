/* C interface of the adaptive vertex-centered finite volume solver.
 *
 * All functions returning afvm_status_t set a thread-local error message
 * retrievable through afvm_last_error() on failure. Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * _destroy function.
 */
#ifndef AFVM_H
#define AFVM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum afvm_status_t {
    AFVM_OK = 0,
    AFVM_ERROR_INVALID = 1, /* bad argument or precondition violation */
    AFVM_ERROR_CONFIG = 2,
    AFVM_ERROR_SOLVER = 3,
    AFVM_ERROR_IO = 4
} afvm_status_t;

typedef struct afvm_mesh_t afvm_mesh_t;
typedef struct afvm_run_t afvm_run_t;

const char* afvm_version(void);

/* Message of the last failure on the calling thread; empty string if none. */
const char* afvm_last_error(void);

/* ---- meshes ---- */

/* domain: "unit_square_shifted" | "l_shape" | "unit_square"; subdivisions >= 1
 * (1 gives the coarsest meshes with 16 / 12 / 32 triangles). */
afvm_status_t afvm_mesh_create(const char* domain, int subdivisions, afvm_mesh_t** out);
afvm_status_t afvm_mesh_read(const char* path, afvm_mesh_t** out);
afvm_status_t afvm_mesh_write(const afvm_mesh_t* mesh, const char* path);
afvm_status_t afvm_mesh_uniform_refine(afvm_mesh_t* mesh);
long afvm_mesh_num_triangles(const afvm_mesh_t* mesh);
long afvm_mesh_num_vertices(const afvm_mesh_t* mesh);
double afvm_mesh_shape_regularity(const afvm_mesh_t* mesh);
void afvm_mesh_destroy(afvm_mesh_t* mesh);

/* ---- experiments ---- */

enum {
    AFVM_DIAG_ORTHOGONALITY = 1,
    AFVM_DIAG_DEFECT_IDENTITY = 2,
    AFVM_DIAG_QUASI_ORTHOGONALITY = 4,
    AFVM_DIAG_FEM_COMPARISON = 8
};

typedef struct afvm_config_t {
    const char* problem; /* "smooth" | "lshape" | "convection" */
    const char* mode;    /* "adaptive" | "uniform" */
    double theta;
    double theta_prime;
    long max_elements;
    long max_iterations;
    int quadrature_degree;
    const char* output_dir;
    int threads;
    unsigned diagnostics; /* AFVM_DIAG_* bitmask */
} afvm_config_t;

void afvm_config_init(afvm_config_t* config);

/* Runs the experiment and writes trace.csv, summary.json and companion files
 * into output_dir. On success *out holds the completed run. */
afvm_status_t afvm_run_experiment(const afvm_config_t* config, afvm_run_t** out);

long afvm_run_num_levels(const afvm_run_t* run);

/* quantity: "eta" | "osc" | "h1_error"; fitted decay rate over the last
 * decade of element counts. Returns 0 and AFVM_ERROR_INVALID through
 * afvm_last_error when unavailable. */
afvm_status_t afvm_run_rate(const afvm_run_t* run, const char* quantity, double* out);

/* Final-level scalars: "eta" | "osc" | "n_elements" | "max_mark_ratio". */
afvm_status_t afvm_run_stat(const afvm_run_t* run, const char* name, double* out);

void afvm_run_destroy(afvm_run_t* run);

/* ---- trace utilities ---- */

/* Merges two trace.csv files by level and appends fitted eta rates. */
afvm_status_t afvm_trace_compare(const char* trace_a, const char* trace_b, const char* out_path);

/* Rewrites a trace.csv as whitespace-separated "N eta osc err" columns. */
afvm_status_t afvm_trace_emit_plot(const char* trace_path, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* AFVM_H */
