#ifndef CAVITY_CAVITY_H
#define CAVITY_CAVITY_H

/* C interface to the cavitation solver.
 *
 * Every function returns a cav_status. On failure the message of the most
 * recent error on the calling thread is available from cav_last_error().
 * Objects are opaque handles released with the matching *_free function;
 * strings returned through char** are released with cav_free_string. */

#include <stddef.h>

#if defined(_WIN32)
#define CAV_API __declspec(dllexport)
#else
#define CAV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cav_status {
  CAV_OK = 0,
  CAV_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad value, under-determined data */
  CAV_ERR_CONFIG = 2,           /* configuration parse or validation failure */
  CAV_ERR_IO = 3,               /* file could not be read or written */
  CAV_ERR_NUMERICAL = 4,        /* inadmissible seed, oracle failure, ... */
  CAV_ERR_INTERNAL = 5
} cav_status;

typedef struct cav_problem cav_problem;
typedef struct cav_solution cav_solution;
typedef struct cav_profile cav_profile;

typedef struct cav_summary {
  int converged; /* 1 when the residual norm reached the final tolerance */
  double energy;          /* discrete quadrature energy */
  double energy_resolved; /* energy of the computed field on a fine graded rule */
  double residual_norm;
  double min_D;
  double min_D_fine;
  double semi_major;
  double semi_minor;
  long gradient_iterations;
  long quasi_newton_iterations;
  long evaluations;
  int restarts;
  int broyden_skips;
  double wall_seconds;
} cav_summary;

typedef struct cav_fit_result {
  double q_inf, c1, c2, nu1, nu2;
  double residual_norm;
  int reduced;    /* 1: single N, the N term is absent */
  int degenerate; /* 1: constant data */
} cav_fit_result;

CAV_API const char* cav_version(void);
CAV_API const char* cav_status_string(cav_status status);
/* Message of the last failure on this thread ("" if none). Valid until the
 * next failing call on the same thread. */
CAV_API const char* cav_last_error(void);
/* 1-based config line of the last CAV_ERR_CONFIG failure, 0 if unknown. */
CAV_API int cav_last_error_line(void);
CAV_API void cav_free_string(char* s);

/* Problems */
CAV_API cav_status cav_problem_parse(const char* json_text, cav_problem** out);
CAV_API cav_status cav_problem_load(const char* path, cav_problem** out);
CAV_API cav_status cav_problem_default(cav_problem** out);
/* KEY=VALUE with a dotted key, e.g. "solver.tol_final=1e-9" or "lambda=2.2". */
CAV_API cav_status cav_problem_override(cav_problem* problem, const char* assignment);
/* Fully resolved configuration as JSON. */
CAV_API cav_status cav_problem_to_json(const cav_problem* problem, char** out_json);
CAV_API int cav_problem_is_symmetric(const cav_problem* problem);
CAV_API int cav_problem_has_study(const cav_problem* problem);
CAV_API void cav_problem_free(cav_problem* problem);

/* Solving. `warm` may be NULL; otherwise its coefficients seed the solve when
 * they fit the problem's resolution and are admissible. A solve that stops
 * without converging still returns CAV_OK; check cav_solution_converged. */
CAV_API cav_status cav_solve(const cav_problem* problem, const cav_solution* warm, cav_solution** out);
CAV_API int cav_solution_converged(const cav_solution* solution);
CAV_API cav_status cav_solution_summary(const cav_solution* solution, cav_summary* out);
CAV_API cav_status cav_solution_report_json(const cav_solution* solution, char** out_json);
CAV_API cav_status cav_solution_snapshot_json(const cav_solution* solution, char** out_json);
/* Free coefficients in packing order; the pointer lives as long as the handle. */
CAV_API cav_status cav_solution_coefficients(const cav_solution* solution, const double** data,
                                             size_t* count);
/* Deformed inner radius P(-1, phi). */
CAV_API cav_status cav_solution_cavity_radius(const cav_solution* solution, double phi, double* out);
/* Writes <stem>_snapshot.json, <stem>_history.csv and <stem>_report.json. */
CAV_API cav_status cav_solution_write(const cav_solution* solution, const char* out_dir,
                                      const char* stem);
CAV_API void cav_solution_free(cav_solution* solution);

/* Re-evaluates a snapshot document: discrete and resolved energy. */
CAV_API cav_status cav_snapshot_energy(const char* snapshot_json, double* energy,
                                       double* energy_resolved);

/* Radial reference (symmetric problems only): solved at oracle_grid and
 * twice that; fails when the two energies differ by more than 1e-9. */
CAV_API cav_status cav_oracle_radial(const cav_problem* problem, cav_profile** out);
CAV_API double cav_profile_energy(const cav_profile* profile);
CAV_API double cav_profile_cavity_radius(const cav_profile* profile);
CAV_API cav_status cav_profile_summary_json(const cav_profile* profile, char** out_json);
/* Writes <stem>_profile.csv and <stem>_summary.json. */
CAV_API cav_status cav_profile_write(const cav_profile* profile, const char* out_dir, const char* stem);
CAV_API void cav_profile_free(cav_profile* profile);

/* Convergence regression q ~ q_inf + c1 N^-nu1 + c2 M^-nu2. */
CAV_API cav_status cav_fit(const int* N, const int* M, const double* q, size_t count,
                           cav_fit_result* out);
/* Same, from CSV text with columns N,M,q; *out_json receives the result. */
CAV_API cav_status cav_fit_csv(const char* csv_text, char** out_json);

/* Minimum over rho of d/drho of the interpolated incompressible profile. */
CAV_API cav_status cav_interp_min_slope(double eps, double gamma, double lambda, int M, double* out);

/* Runs the problem's study section into out_dir. *all_ok is 1 when every
 * row converged. *summary_json may be NULL when not wanted. */
CAV_API cav_status cav_study_run(const cav_problem* problem, const char* out_dir, int threads,
                                 char** summary_json, int* all_ok);

#ifdef __cplusplus
}
#endif

#endif /* CAVITY_CAVITY_H */
