#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "gpi.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("gpi_capi_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("config lifecycle and error reporting") {
  gpi_config* cfg = gpi_config_new();
  REQUIRE(cfg != nullptr);
  CHECK(gpi_config_set(cfg, "algo", "geppo") == GPI_OK);
  CHECK(gpi_config_set(cfg, "B", "2") == GPI_OK);

  CHECK(gpi_config_set(cfg, "no_such_key", "1") == GPI_ERR_CONFIG);
  CHECK(std::strstr(gpi_last_error(), "no_such_key") != nullptr);
  CHECK(gpi_config_set(cfg, "B", "banana") == GPI_ERR_CONFIG);
  CHECK(gpi_config_set(nullptr, "B", "1") == GPI_ERR_CONFIG);
  CHECK(gpi_config_set(cfg, nullptr, "1") == GPI_ERR_CONFIG);

  CHECK(gpi_config_load(cfg, "/no/such/file.cfg") == GPI_ERR_IO);
  CHECK(gpi_last_error()[0] != '\0');

  const fs::path dir = fresh_dir("cfg");
  const fs::path file = dir / "run.cfg";
  std::ofstream(file) << "algo = getrpo\nB = 4\nkappa = 0.25\n";
  CHECK(gpi_config_load(cfg, file.string().c_str()) == GPI_OK);
  gpi_config_free(cfg);
  gpi_config_free(nullptr);  // explicitly a no-op
}

TEST_CASE("plan handles expose the solved mixture") {
  gpi_plan* plan = gpi_plan_solve(2, 1.0, 1024, 0.2);
  REQUIRE(plan != nullptr);
  CHECK(gpi_plan_support(plan) == 4);
  CHECK(std::abs(gpi_plan_weight(plan, 0) - 0.4) <= 1e-9);
  CHECK(std::abs(gpi_plan_weight(plan, 1) - 0.3) <= 1e-9);
  CHECK(std::abs(gpi_plan_weight(plan, 2) - 0.2) <= 1e-9);
  CHECK(std::abs(gpi_plan_weight(plan, 3) - 0.1) <= 1e-9);
  CHECK(gpi_plan_weight(plan, 4) == 0.0);  // out of range: no weight
  CHECK(std::abs(gpi_plan_eps_gen(plan) - 0.1) <= 1e-9);
  CHECK(std::abs(gpi_plan_delta_gen(plan) - 0.005) <= 1e-9);
  CHECK(std::abs(gpi_plan_ess_gain_pct(plan) - (100.0 / 0.6 - 100.0)) <= 1e-6);
  gpi_plan_free(plan);
  gpi_plan_free(nullptr);

  CHECK(gpi_plan_solve(0, 0.5, 1024, 0.2) == nullptr);
  CHECK(gpi_last_error()[0] != '\0');
  CHECK(gpi_plan_solve(2, 7.0, 1024, 0.2) == nullptr);
}

TEST_CASE("kappa sweep writes the documented CSV") {
  const fs::path dir = fresh_dir("sweep");
  const std::string csv = (dir / "sweep.csv").string();
  REQUIRE(gpi_plan_sweep_csv(2, 1024, 0.2, 5, csv.c_str()) == GPI_OK);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "kappa,ess_gain_pct,tv_gain_pct,eps_gen,support");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  CHECK(gpi_plan_sweep_csv(2, 1024, 0.2, 1, csv.c_str()) == GPI_ERR_CONFIG);
  CHECK(gpi_plan_sweep_csv(2, 1024, 0.2, 5, nullptr) == GPI_ERR_CONFIG);
}

TEST_CASE("bound certification runs through the shared library") {
  char text[65536];
  const int failures = gpi_verify_bounds(7, 3, text, sizeof(text));
  CHECK(failures == 0);
  CHECK(std::strstr(text, "PASS") != nullptr);
  CHECK(std::strstr(text, "FAIL") == nullptr);
  CHECK(gpi_verify_bounds(7, 0, text, sizeof(text)) == -1);
}

TEST_CASE("training and plotting via the C surface") {
  const fs::path out = fresh_dir("train");
  gpi_config* cfg = gpi_config_new();
  REQUIRE(cfg != nullptr);
  for (auto [k, v] : {std::pair<const char*, const char*>{"algo", "geppo"},
                      {"env", "pendulum_swingup"},
                      {"steps", "128"},
                      {"B", "2"},
                      {"n", "32"},
                      {"kappa", "1"},
                      {"epochs", "2"},
                      {"minibatches", "2"},
                      {"value_epochs", "2"},
                      {"value_minibatches", "2"},
                      {"hidden", "8"}}) {
    REQUIRE(gpi_config_set(cfg, k, v) == GPI_OK);
  }
  const std::string out_str = out.string();
  REQUIRE(gpi_config_set(cfg, "out", out_str.c_str()) == GPI_OK);

  char run_dir[1024];
  REQUIRE(gpi_train(cfg, run_dir, sizeof(run_dir)) == GPI_OK);
  CHECK(fs::exists(fs::path(run_dir) / "log.csv"));
  CHECK(gpi_train(nullptr, run_dir, sizeof(run_dir)) == GPI_ERR_CONFIG);

  const char* dirs[1] = {run_dir};
  const std::string svg = (out / "plot.svg").string();
  CHECK(gpi_plot(dirs, 1, svg.c_str()) == GPI_OK);
  CHECK(fs::exists(svg));
  CHECK(gpi_plot(dirs, 0, svg.c_str()) == GPI_ERR_CONFIG);
  CHECK(gpi_plot(nullptr, 1, svg.c_str()) == GPI_ERR_CONFIG);
  gpi_config_free(cfg);
}

}  // TEST_SUITE
