#include "gpi.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "oracle.hpp"
#include "planner.hpp"
#include "plot.hpp"
#include "train.hpp"

namespace {

thread_local std::string g_last_error;

gpi_status set_error(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const gpi::ConfigError*>(&e)) return GPI_ERR_CONFIG;
  if (dynamic_cast<const gpi::NumericError*>(&e)) return GPI_ERR_NUMERIC;
  if (dynamic_cast<const gpi::IoError*>(&e)) return GPI_ERR_IO;
  return GPI_ERR_UNKNOWN;
}

void copy_out(const std::string& s, char* out, size_t cap) {
  if (!out || cap == 0) return;
  const size_t n = std::min(s.size(), cap - 1);
  std::memcpy(out, s.data(), n);
  out[n] = '\0';
}

}  // namespace

extern "C" {

struct gpi_config {
  gpi::RunConfig cfg;
};

struct gpi_plan {
  gpi::MixturePlan plan;
};

const char* gpi_last_error(void) { return g_last_error.c_str(); }

gpi_config* gpi_config_new(void) { return new gpi_config(); }

void gpi_config_free(gpi_config* cfg) { delete cfg; }

gpi_status gpi_config_set(gpi_config* cfg, const char* key,
                          const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "null argument";
    return GPI_ERR_CONFIG;
  }
  try {
    cfg->cfg.set(key, value);
    return GPI_OK;
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

gpi_status gpi_config_load(gpi_config* cfg, const char* path) {
  if (!cfg || !path) {
    g_last_error = "null argument";
    return GPI_ERR_CONFIG;
  }
  try {
    cfg->cfg = gpi::RunConfig::from_file(path);
    return GPI_OK;
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

gpi_status gpi_train(const gpi_config* cfg, char* run_dir_out, size_t cap) {
  if (!cfg) {
    g_last_error = "null config";
    return GPI_ERR_CONFIG;
  }
  try {
    copy_out(gpi::train(cfg->cfg), run_dir_out, cap);
    return GPI_OK;
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

gpi_plan* gpi_plan_solve(int B, double kappa, int n, double eps) {
  try {
    return new gpi_plan{gpi::solve_mixture(B, kappa, n, eps)};
  } catch (const std::exception& e) {
    set_error(e);
    return nullptr;
  }
}

void gpi_plan_free(gpi_plan* plan) { delete plan; }

int gpi_plan_support(const gpi_plan* plan) {
  return plan ? plan->plan.support : 0;
}

double gpi_plan_weight(const gpi_plan* plan, int age) {
  if (!plan || age < 0 || age >= plan->plan.support) return 0.0;
  return plan->plan.nu[age];
}

double gpi_plan_eps_gen(const gpi_plan* plan) {
  return plan ? plan->plan.eps_gen : 0.0;
}

double gpi_plan_delta_gen(const gpi_plan* plan) {
  return plan ? plan->plan.delta_gen : 0.0;
}

double gpi_plan_ess_gain_pct(const gpi_plan* plan) {
  return plan ? plan->plan.ess_gain_pct() : 0.0;
}

double gpi_plan_tv_gain_pct(const gpi_plan* plan) {
  return plan ? plan->plan.tv_gain_pct() : 0.0;
}

gpi_status gpi_plan_sweep_csv(int B, int n, double eps, int points,
                              const char* csv_path) {
  if (!csv_path || points < 2) {
    g_last_error = "need csv_path and at least 2 sweep points";
    return GPI_ERR_CONFIG;
  }
  try {
    std::ofstream f(csv_path);
    if (!f) throw gpi::IoError(std::string("cannot write ") + csv_path);
    f << "kappa,ess_gain_pct,tv_gain_pct,eps_gen,support\n";
    for (int i = 0; i < points; ++i) {
      const double kappa = static_cast<double>(i) / (points - 1);
      const gpi::MixturePlan p = gpi::solve_mixture(B, kappa, n, eps);
      char line[160];
      std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.10g,%d\n", kappa,
                    p.ess_gain_pct(), p.tv_gain_pct(), p.eps_gen, p.support);
      f << line;
    }
    return GPI_OK;
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

int gpi_verify_bounds(uint64_t seed, int instances, char* text_out,
                      size_t cap) {
  try {
    const std::vector<gpi::CheckResult> results =
        gpi::verify_bounds_suite(seed, instances);
    int failures = 0;
    std::ostringstream os;
    for (const auto& r : results) {
      failures += r.pass ? 0 : 1;
      os << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    }
    copy_out(os.str(), text_out, cap);
    return failures;
  } catch (const std::exception& e) {
    set_error(e);
    return -1;
  }
}

gpi_status gpi_plot(const char* const* run_dirs, int count,
                    const char* out_path) {
  if (!run_dirs || count < 1 || !out_path) {
    g_last_error = "need at least one run directory and an output path";
    return GPI_ERR_CONFIG;
  }
  try {
    std::vector<std::string> dirs(run_dirs, run_dirs + count);
    gpi::plot_runs(dirs, out_path);
    return GPI_OK;
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

}  // extern "C"
