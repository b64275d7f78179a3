// Command-line front end. Links only the public C API.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpi.h"

namespace {

int fail(const char* what) {
  std::fprintf(stderr, "%s: %s\n", what, gpi_last_error());
  return 1;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::pair<std::string, std::string>>& overrides) {
  gpi_config* cfg = gpi_config_new();
  if (!config_path.empty() && gpi_config_load(cfg, config_path.c_str()) != GPI_OK) {
    gpi_config_free(cfg);
    return fail("config");
  }
  for (const auto& [k, v] : overrides) {
    if (gpi_config_set(cfg, k.c_str(), v.c_str()) != GPI_OK) {
      gpi_config_free(cfg);
      return fail("config");
    }
  }
  char run_dir[4096];
  const gpi_status st = gpi_train(cfg, run_dir, sizeof(run_dir));
  gpi_config_free(cfg);
  if (st != GPI_OK) return fail("train");
  std::printf("%s\n", run_dir);
  return 0;
}

int cmd_plan(int B, int n, double eps, int points, const std::string& csv) {
  std::printf("%8s %12s %12s %12s %8s  nu\n", "kappa", "ess_gain_%",
              "tv_gain_%", "eps_gen", "support");
  for (int i = 0; i < points; ++i) {
    const double kappa = points == 1 ? 0.0 : double(i) / (points - 1);
    gpi_plan* p = gpi_plan_solve(B, kappa, n, eps);
    if (!p) return fail("plan");
    std::printf("%8.3f %12.4f %12.4f %12.6f %8d  ", kappa,
                gpi_plan_ess_gain_pct(p), gpi_plan_tv_gain_pct(p),
                gpi_plan_eps_gen(p), gpi_plan_support(p));
    for (int j = 0; j < gpi_plan_support(p); ++j)
      std::printf("%s%.4f", j ? "," : "", gpi_plan_weight(p, j));
    std::printf("\n");
    gpi_plan_free(p);
  }
  if (!csv.empty() &&
      gpi_plan_sweep_csv(B, n, eps, points < 2 ? 2 : points, csv.c_str()) !=
          GPI_OK)
    return fail("plan csv");
  return 0;
}

int cmd_verify(std::uint64_t seed, int instances) {
  std::vector<char> buf(1 << 16);
  const int failures = gpi_verify_bounds(seed, instances, buf.data(), buf.size());
  if (failures < 0) return fail("verify-bounds");
  std::fputs(buf.data(), stdout);
  std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

int cmd_plot(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<const char*> ptrs;
  for (const auto& d : dirs) ptrs.push_back(d.c_str());
  if (gpi_plot(ptrs.data(), static_cast<int>(ptrs.size()), out.c_str()) !=
      GPI_OK)
    return fail("plot");
  std::printf("%s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized policy improvement: training, planning, bound "
               "certification, and plotting"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Run a seeded training loop");
  std::string config_path, algo, env, out_dir;
  long steps = -1;
  int B = -1, n = -1;
  double kappa = -1.0, eps = -1.0;
  std::int64_t seed = -1;
  bool adaptive = false;
  train->add_option("--config", config_path, "Flat key=value config file");
  train->add_option("--algo", algo, "ppo|geppo|trpo|getrpo|vmpo|gevmpo");
  train->add_option("--env", env, "Environment name");
  train->add_option("--steps", steps, "Total environment steps");
  train->add_option("--B", B, "Batch multiple N = B*n");
  train->add_option("--n", n, "Minimum batch size");
  train->add_option("--kappa", kappa, "ESS/TV trade-off in [0,1]");
  train->add_option("--eps", eps, "On-policy TV radius");
  train->add_option("--seed", seed, "Master seed");
  train->add_option("--out", out_dir, "Output directory for runs");
  train->add_flag("--adaptive-radius", adaptive,
                  "Use the measured-drift trust-region radius");

  auto* plan = app.add_subcommand("plan", "Solve mixture weights over kappa");
  int plan_B = 2, plan_n = 1024, plan_points = 5;
  double plan_eps = 0.2;
  std::string plan_csv;
  plan->add_option("--B", plan_B, "Batch multiple")->required();
  plan->add_option("--n", plan_n, "Minimum batch size");
  plan->add_option("--eps", plan_eps, "On-policy TV radius");
  plan->add_option("--points", plan_points, "Kappa grid size");
  plan->add_option("--csv", plan_csv, "Also write the sweep as CSV");

  auto* verify = app.add_subcommand("verify-bounds",
                                    "Certify the tabular policy bounds");
  std::uint64_t vseed = 0;
  int vinstances = 100;
  verify->add_option("--seed", vseed, "Suite seed");
  verify->add_option("--instances", vinstances, "Random instances per check");

  auto* plot = app.add_subcommand("plot", "Render learning curves as SVG");
  std::vector<std::string> plot_dirs;
  std::string plot_out = "curves.svg";
  plot->add_option("dirs", plot_dirs, "Run directories")->required();
  plot->add_option("--out", plot_out, "Output SVG path");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    std::vector<std::pair<std::string, std::string>> ov;
    if (!algo.empty()) ov.emplace_back("algo", algo);
    if (!env.empty()) ov.emplace_back("env", env);
    if (steps >= 0) ov.emplace_back("steps", std::to_string(steps));
    if (B >= 0) ov.emplace_back("B", std::to_string(B));
    if (n >= 0) ov.emplace_back("n", std::to_string(n));
    if (kappa >= 0.0) ov.emplace_back("kappa", std::to_string(kappa));
    if (eps >= 0.0) ov.emplace_back("eps", std::to_string(eps));
    if (seed >= 0) ov.emplace_back("seed", std::to_string(seed));
    if (!out_dir.empty()) ov.emplace_back("out", out_dir);
    if (adaptive) ov.emplace_back("adaptive_radius", "1");
    return cmd_train(config_path, ov);
  }
  if (plan->parsed()) return cmd_plan(plan_B, plan_n, plan_eps, plan_points, plan_csv);
  if (verify->parsed()) return cmd_verify(vseed, vinstances);
  if (plot->parsed()) return cmd_plot(plot_dirs, plot_out);
  return 1;
}
