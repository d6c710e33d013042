/* C API for the semiprop semiclassical propagation engine.
 *
 * All functions return sp_status; outputs go through pointers.  Handles are
 * opaque and must be released with the matching destroy function.  Error
 * details for the calling thread are available via sp_last_error().
 */
#ifndef SEMIPROP_H
#define SEMIPROP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
  SP_OK = 0,
  SP_ERR_INVALID_ARGUMENT = 1,
  SP_ERR_NUMERICAL = 2,
  SP_ERR_IO = 3,
  SP_ERR_UNKNOWN = 4
} sp_status;

typedef struct sp_model sp_model;
typedef struct sp_trajectory sp_trajectory;
typedef struct sp_wavefunction sp_wavefunction;

/* Last error message for the calling thread ("" if none). */
const char* sp_last_error(void);

/* --- models ---------------------------------------------------------- */

sp_status sp_model_create(const char* name, const double* params, size_t nparams,
                          sp_model** out);
sp_status sp_model_dim(const sp_model* model, int* out);
void sp_model_destroy(sp_model* model);

/* --- classical flow --------------------------------------------------- */

/* q and p have length dim; tol is the integrator tolerance (<= 0 -> default). */
sp_status sp_trajectory_compute(const sp_model* model, const double* q, const double* p,
                                double t, double tol, sp_trajectory** out);
sp_status sp_trajectory_action(const sp_trajectory* traj, double* out);
/* qt, pt each of length dim. */
sp_status sp_trajectory_endpoint(const sp_trajectory* traj, double* qt, double* pt);
/* Row-major d*d blocks of the tangent map. */
sp_status sp_trajectory_blocks(const sp_trajectory* traj, double* A, double* B, double* C,
                               double* D);
/* Branch-continued det^{1/2} M_t. */
sp_status sp_trajectory_prefactor(const sp_trajectory* traj, double* re, double* im);
sp_status sp_trajectory_maslov(const sp_trajectory* traj, int* out);
void sp_trajectory_destroy(sp_trajectory* traj);

/* --- kernels ----------------------------------------------------------- */

/* Herman-Kluk kernel with a tensor quadrature over the box
 * [q_lo,q_hi] x [p_lo,p_hi] (arrays of length dim), node spacing `spacing`. */
sp_status sp_hk_kernel(const sp_model* model, double hbar, double t, const double* x,
                       const double* y, const double* q_lo, const double* q_hi,
                       const double* p_lo, const double* p_hi, double spacing, double* re,
                       double* im);

/* Van Vleck kernel; search box [p_lo, p_hi] for branch momenta.
 * no_classical_path is set to 1 when the branch set is empty. */
sp_status sp_vanvleck_kernel(const sp_model* model, double hbar, double t, const double* x,
                             const double* y, const double* p_lo, const double* p_hi,
                             int order, double* re, double* im, int* no_classical_path);

/* --- wave functions ---------------------------------------------------- */

sp_status sp_wavefunction_load(const char* path, sp_wavefunction** out);
sp_status sp_wavefunction_save(const sp_wavefunction* psi, const char* path);
sp_status sp_wavefunction_dim(const sp_wavefunction* psi, int* dim, double* hbar);
sp_status sp_wavefunction_size(const sp_wavefunction* psi, size_t* out);
/* Interleaved re,im of length 2*size. */
sp_status sp_wavefunction_values(const sp_wavefunction* psi, double* out);
void sp_wavefunction_destroy(sp_wavefunction* psi);

/* Herman-Kluk propagation of psi0 on its own grid; quadrature as in
 * sp_hk_kernel; threads <= 0 picks the hardware default. */
sp_status sp_propagate_hk(const sp_model* model, const sp_wavefunction* psi0, double t,
                          const double* q_lo, const double* q_hi, const double* p_lo,
                          const double* p_hi, double spacing, int threads,
                          sp_wavefunction** out);

/* --- batch front end --------------------------------------------------- */

/* Runs one CLI subcommand (propagate, hk-kernel, vanvleck, statphase-check,
 * sweep, flow-check) against a config file; writes reports into out_dir. */
sp_status sp_run_command(const char* command, const char* config_path, const char* out_dir,
                         int threads, unsigned long seed, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* SEMIPROP_H */
