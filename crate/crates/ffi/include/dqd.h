#ifndef DQD_H
#define DQD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DqdBranch {
  DQD_BRANCH_OPEN_LOOP = 0,
  DQD_BRANCH_D1_CANCELS = 1,
  DQD_BRANCH_D2_CANCELS = 2,
  DQD_BRANCH_DEADPOINT = 3,
} DqdBranch;

typedef enum DqdStatus {
  DQD_STATUS_OK = 0,
  DQD_STATUS_NULL_POINTER = 1,
  DQD_STATUS_INVALID_PARAMETER = 2,
  DQD_STATUS_DOMAIN = 3,
  DQD_STATUS_INTEGRATOR_BLOW_UP = 4,
  DQD_STATUS_OUT_OF_RANGE = 5,
  DQD_STATUS_FULLY_MASKED = 6,
  DQD_STATUS_CONFIG = 7,
  DQD_STATUS_PANIC = 8,
  DQD_STATUS_OTHER = 9,
} DqdStatus;

// Opaque sweep result.
typedef struct DqdSweep DqdSweep;

// Opaque simulation result.
typedef struct DqdTrajectory DqdTrajectory;

// `gain_unit <= 0` selects the default ħ²/(1 ps).
typedef struct DqdControlConfig {
  double g1;
  double g2;
  double theta;
  double f_max;
  double hold_dt;
  uint32_t substeps;
  double deadpoint_kick;
  double v_tolerance;
  double gain_unit;
} DqdControlConfig;

// Energies in μeV, rates in 1/ps, ħ in μeV·ps.
typedef struct DqdSystemParams {
  double eps0;
  double delta;
  double gamma1;
  double gamma2;
  double hbar;
} DqdSystemParams;

typedef struct DqdPulseParams {
  double amplitude_a;
  double t_r;
  uint32_t cycles;
} DqdPulseParams;

// 2×2 density matrix in the (|R⟩, |L⟩) basis; ρ_LR is the conjugate of ρ_RL.
typedef struct DqdDensity {
  double rho_rr;
  double rho_ll;
  double rho_rl_re;
  double rho_rl_im;
} DqdDensity;

// One trajectory row; same fields as the CSV export.
typedef struct DqdRecord {
  double t_ps;
  struct DqdDensity rho;
  double f1_uev;
  double f2_uev;
  double v;
  double p_l;
  double fidelity;
  double bloch_x;
  double bloch_y;
  double bloch_z;
  enum DqdBranch branch;
} DqdRecord;

typedef struct DqdSummary {
  double max_p_l;
  double t_at_max;
  double max_fidelity;
  double fidelity_at_max;
  double final_v;
  double clamped_fraction;
} DqdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dqd_version(void);

// Message for the last failed call on this thread, or NULL if none.
// The pointer stays valid until the next failing call on this thread.
const char *dqd_last_error_message(void);

// Default controller settings (g = 0.22, θ = 5e-6, f_max = 800 μeV, 1 ps hold).
struct DqdControlConfig dqd_control_config_default(void);

// Build system parameters from coherence times in ps. Pass `INFINITY` to
// switch a channel off.
//
// # Safety
// `out` must be NULL or point to writable memory for one `DqdSystemParams`.
enum DqdStatus dqd_system_params_from_times(double eps0,
                                            double delta,
                                            double t1,
                                            double t2,
                                            struct DqdSystemParams *out);

// Closed-loop run from |R⟩ towards |L⟩ for `t_end` ps.
//
// # Safety
// `params` and `cfg` must be NULL or valid; `out` must be NULL or writable.
// On success `*out` owns a handle to release with [`dqd_trajectory_free`].
enum DqdStatus dqd_simulate_lyapunov(const struct DqdSystemParams *params,
                                     const struct DqdControlConfig *cfg,
                                     double t_end,
                                     struct DqdTrajectory **out);

// Open-loop triangular-pulse run from |R⟩ over the pulse duration.
//
// # Safety
// As for [`dqd_simulate_lyapunov`].
enum DqdStatus dqd_simulate_lzs(const struct DqdSystemParams *params,
                                const struct DqdPulseParams *pulse,
                                double hold_dt,
                                uint32_t substeps,
                                struct DqdTrajectory **out);

// Number of records; 0 for NULL.
//
// # Safety
// `traj` must be NULL or a live handle.
uintptr_t dqd_trajectory_len(const struct DqdTrajectory *traj);

// # Safety
// `traj` must be NULL or a live handle; `out` NULL or writable.
enum DqdStatus dqd_trajectory_record(const struct DqdTrajectory *traj,
                                     uintptr_t index,
                                     struct DqdRecord *out);

// # Safety
// `traj` must be NULL or a live handle; `out` NULL or writable.
enum DqdStatus dqd_trajectory_summary(const struct DqdTrajectory *traj, struct DqdSummary *out);

// # Safety
// `traj` must be NULL or a handle not yet freed.
void dqd_trajectory_free(struct DqdTrajectory *traj);

// Bures fidelity between two density matrices.
//
// # Safety
// Pointers must be NULL or valid.
enum DqdStatus dqd_bures_fidelity(const struct DqdDensity *rho_s,
                                  const struct DqdDensity *rho_f,
                                  double *out);

// exp(−2πΔ²/(vħ)); NaN for v ≤ 0.
double dqd_landau_zener_prob(double delta, double v, double hbar);

// 2(A − ε₀)²/(vħ); NaN for v ≤ 0.
double dqd_stuckelberg_phase(double amplitude_a, double eps0, double v, double hbar);

// Closed-form single-cycle transfer probability at pulse duration `t_p`.
double dqd_transfer_prob_analytic(double amplitude_a,
                                  double eps0,
                                  double delta,
                                  double t_p,
                                  double hbar);

double dqd_constructive_duration(double amplitude_a, double eps0, uint32_t n, double hbar);

// Run a sweep described by a JSON config document (the CLI format; `mode`
// is forced to `sweep`).
//
// # Safety
// `config_json` must be NULL or a NUL-terminated string; `out` NULL or
// writable. Release the handle with [`dqd_sweep_free`].
enum DqdStatus dqd_sweep_run(const char *config_json, struct DqdSweep **out);

// # Safety
// `sweep` must be NULL or a live handle; `n1`/`n2` NULL or writable.
enum DqdStatus dqd_sweep_shape(const struct DqdSweep *sweep, uintptr_t *n1, uintptr_t *n2);

// Cell `(i, j)`: axis coordinates, value (NaN when masked) and mask flag.
//
// # Safety
// `sweep` must be NULL or a live handle; output pointers NULL or writable.
enum DqdStatus dqd_sweep_cell(const struct DqdSweep *sweep,
                              uintptr_t i,
                              uintptr_t j,
                              double *x1,
                              double *x2,
                              double *value,
                              bool *masked);

// # Safety
// `sweep` must be NULL or a handle not yet freed.
void dqd_sweep_free(struct DqdSweep *sweep);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DQD_H */
