/* C interface to the policy-optimization core. All functions return
 * gpi_status (or a handle/NULL); gpi_last_error() describes the most recent
 * failure on the calling thread. Handles are opaque and single-owner. */
#ifndef GPI_H_
#define GPI_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpi_status {
  GPI_OK = 0,
  GPI_ERR_CONFIG = 1,  /* invalid configuration or arguments */
  GPI_ERR_NUMERIC = 2, /* numerical failure during computation */
  GPI_ERR_IO = 3,      /* file system failure */
  GPI_ERR_UNKNOWN = 4
} gpi_status;

/* Message for the last failure on this thread; empty string if none. The
 * pointer stays valid until the next failing call on the same thread. */
const char* gpi_last_error(void);

/* ---- training configuration and execution ---- */

typedef struct gpi_config gpi_config;

gpi_config* gpi_config_new(void);
void gpi_config_free(gpi_config* cfg);
/* Keys are the documented flat config keys (algo, env, steps, B, n, kappa,
 * eps, gamma, lambda, c_bar, seed, lr, alpha, epochs, minibatches,
 * value_epochs, value_minibatches, value_lr, cg_iters, damping, backtracks,
 * hidden, adaptive_radius, out). */
gpi_status gpi_config_set(gpi_config* cfg, const char* key, const char* value);
gpi_status gpi_config_load(gpi_config* cfg, const char* path);

/* Runs training to completion; writes the run directory path (NUL-
 * terminated) into run_dir_out if it fits. */
gpi_status gpi_train(const gpi_config* cfg, char* run_dir_out, size_t cap);

/* ---- mixture planning ---- */

typedef struct gpi_plan gpi_plan;

gpi_plan* gpi_plan_solve(int B, double kappa, int n, double eps);
void gpi_plan_free(gpi_plan* plan);
int gpi_plan_support(const gpi_plan* plan);
double gpi_plan_weight(const gpi_plan* plan, int age);
double gpi_plan_eps_gen(const gpi_plan* plan);
double gpi_plan_delta_gen(const gpi_plan* plan);
double gpi_plan_ess_gain_pct(const gpi_plan* plan);
double gpi_plan_tv_gain_pct(const gpi_plan* plan);

/* Sweeps kappa over `points` evenly spaced values in [0,1] and writes a CSV
 * (kappa, ess_gain_pct, tv_gain_pct, eps_gen, support) to csv_path. */
gpi_status gpi_plan_sweep_csv(int B, int n, double eps, int points,
                              const char* csv_path);

/* ---- exact-oracle certification ---- */

/* Runs the bound-certification suite; appends one "PASS name: detail" or
 * "FAIL name: detail" line per check to text_out (NUL-terminated, truncated
 * to cap). Returns the number of failed checks, or -1 on error. */
int gpi_verify_bounds(uint64_t seed, int instances, char* text_out,
                      size_t cap);

/* ---- plotting ---- */

gpi_status gpi_plot(const char* const* run_dirs, int count,
                    const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* GPI_H_ */
