/* spomap: subharmonic periodic orbits, Floquet bundles, and separatrices of
 * perturbative families of 4D symplectic maps.
 *
 * C interface of the shared library.  All objects are opaque handles created
 * and released through this API; every function reports a spo_status, with a
 * thread-local message available from spo_last_error().  State vectors are
 * length-4 double arrays ordered (x, y, px, py).
 */

#ifndef SPOMAP_H
#define SPOMAP_H

#include <stddef.h>

#if defined(_WIN32)
#define SPOMAP_API __declspec(dllexport)
#else
#define SPOMAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spo_status {
    SPO_OK = 0,
    SPO_ERR_ARGUMENT = 1,
    SPO_ERR_CONFIG = 2,
    SPO_ERR_NO_CONVERGENCE = 3,
    SPO_ERR_NUMERICAL = 4,
    SPO_ERR_IO = 5
} spo_status;

typedef struct spo_system spo_system;
typedef struct spo_map spo_map;
typedef struct spo_solution spo_solution;
typedef struct spo_separatrix spo_separatrix;

SPOMAP_API const char* spo_version(void);

/* Message describing the most recent failure on this thread. */
SPOMAP_API const char* spo_last_error(void);

SPOMAP_API void spo_string_free(char* s);

/* ---- systems ---- */

SPOMAP_API spo_status spo_system_pcr3bp(double mu, spo_system** out);
SPOMAP_API spo_status spo_system_ccr4bp(double mu, double r13, double omega3, spo_system** out);
SPOMAP_API spo_status spo_system_forced_pendulum(double omega_p, spo_system** out);
SPOMAP_API double spo_kepler_omega3(double mu, double eps_ref, double r13);
SPOMAP_API void spo_system_free(spo_system* sys);

/* ---- stroboscopic maps ---- */

/* abs_tol/rel_tol <= 0 select the defaults (1e-12). */
SPOMAP_API spo_status spo_map_create(const spo_system* sys, double eps, double theta0,
                                     double abs_tol, double rel_tol, spo_map** out);
SPOMAP_API void spo_map_free(spo_map* map);
SPOMAP_API spo_status spo_map_apply(const spo_map* map, const double x_in[4], double x_out[4]);
/* jac_out is row-major 4x4. */
SPOMAP_API spo_status spo_map_jacobian(const spo_map* map, const double x_in[4], double x_out[4],
                                       double jac_out[16]);
SPOMAP_API double spo_map_time(const spo_map* map);

/* ---- seeds and solutions ---- */

/* Symmetric periodic orbit of the eps = 0 flow with the given rotating-frame
 * period, from a perpendicular-crossing guess (x, 0, 0, py). */
SPOMAP_API spo_status spo_find_symmetric_orbit(const spo_system* sys, double period,
                                               double x_guess, double py_guess, double x0_out[4]);

/* eps = 0 initialization on a resonant flow-periodic orbit through x0. */
SPOMAP_API spo_status spo_seed_orbit(const spo_map* map_eps0, const double x0[4], int p, int q,
                                     spo_solution** out);

/* Continuation of `seed` to eps_f in n_steps increments at tolerance tol.
 * flow_map_mode != 0 pins lambda_1 = lambda_2 = 1.  On success *out holds the
 * final solution. */
SPOMAP_API spo_status spo_continue(const spo_system* sys, double theta0, const spo_solution* seed,
                                   double eps_f, int n_steps, double tol, int flow_map_mode,
                                   spo_solution** out);

SPOMAP_API void spo_solution_free(spo_solution* sol);
SPOMAP_API int spo_solution_q(const spo_solution* sol);
SPOMAP_API double spo_solution_eps(const spo_solution* sol);
/* points_out must hold 4*q doubles, ordered k-major. */
SPOMAP_API spo_status spo_solution_points(const spo_solution* sol, double* points_out);
/* center-pair multipliers as (re, im) pairs. */
SPOMAP_API spo_status spo_solution_multipliers(const spo_solution* sol, double lambda1[2],
                                               double lambda2[2], double shear[2]);
/* lambda_s_out/lambda_u_out must hold q doubles each. */
SPOMAP_API spo_status spo_solution_transverse(const spo_solution* sol, double* lambda_s_out,
                                              double* lambda_u_out);
SPOMAP_API spo_status spo_solution_residual_norms(const spo_solution* sol, double* norm_E,
                                                  double* norm_E_red);
/* 0 = hyperbolic, 1 = elliptic, 2 = parabolic. */
SPOMAP_API int spo_solution_center_class(const spo_solution* sol);

/* Recompute residual norms of a solution against a map. */
SPOMAP_API spo_status spo_solution_check(const spo_map* map, const spo_solution* sol,
                                         double* norm_E, double* norm_E_red);

SPOMAP_API spo_status spo_solution_save(const spo_solution* sol, const char* path);
SPOMAP_API spo_status spo_solution_load(const char* path, spo_solution** out);

/* ---- separatrices ---- */

/* branch: 0 = weak stable, 1 = weak unstable.  alpha = 0 auto-fits the scale. */
SPOMAP_API spo_status spo_separatrix_build(const spo_map* map, const spo_solution* sol, int branch,
                                           int degree, double alpha, spo_separatrix** out);
SPOMAP_API void spo_separatrix_free(spo_separatrix* sep);
SPOMAP_API int spo_separatrix_degree(const spo_separatrix* sep);
SPOMAP_API double spo_separatrix_lambda(const spo_separatrix* sep);
/* Fundamental-domain radii; d_out must hold q doubles. */
SPOMAP_API spo_status spo_separatrix_domains(const spo_map* map, spo_separatrix* sep, double e_tol,
                                             double* d_out);
/* Evaluates W(k, s). */
SPOMAP_API spo_status spo_separatrix_eval(const spo_separatrix* sep, int k, double s,
                                          double point_out[4]);
/* Samples n_per_k points per k into points_out (6 columns: k, s, x, y, px, py);
 * points_out must hold 6*q*n_per_k doubles.  Domains must be computed first. */
SPOMAP_API spo_status spo_separatrix_sample(const spo_separatrix* sep, int n_per_k,
                                            double* points_out);

/* ---- config-driven commands (the CLI subcommands) ---- */

/* overrides are "dotted.key=value" strings applied on top of the file.  Each
 * command stores its primary output path into *path_out (free with
 * spo_string_free). */
SPOMAP_API spo_status spo_run_seed(const char* config_path, const char* const* overrides,
                                   size_t n_overrides, char** path_out);
SPOMAP_API spo_status spo_run_continue(const char* config_path, const char* seed_path,
                                       const char* const* overrides, size_t n_overrides,
                                       char** path_out);
SPOMAP_API spo_status spo_run_separatrix(const char* config_path, const char* solution_path,
                                         const char* const* overrides, size_t n_overrides,
                                         char** path_out);
/* *report_out receives the validation report text; returns SPO_ERR_NUMERICAL
 * when a check fails. */
SPOMAP_API spo_status spo_run_validate(const char* solution_path, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* SPOMAP_H */
