#ifndef GPI_TRAIN_HPP_
#define GPI_TRAIN_HPP_

#include <map>
#include <string>

#include "policy.hpp"

namespace gpi {

// Resolved run configuration. Defaults follow common benchmark settings
// (gamma 0.995, lambda 0.97, N = 2048, n = 1024, eps 0.2, lr 3e-4,
// alpha 0.03, 10 epochs x 32 minibatches, CG 20 / damping 0.01, c_bar 1.0).
struct RunConfig {
  std::string algo = "ppo";  // ppo|geppo|trpo|getrpo|vmpo|gevmpo
  std::string env = "pendulum_swingup";
  long total_steps = 200000;
  int B = 2;
  int n = 1024;
  double kappa = 0.5;
  double eps = 0.2;
  double gamma = 0.995;
  double lambda = 0.97;
  double c_bar = 1.0;
  std::uint64_t seed = 0;
  double lr = 3e-4;
  double alpha = 0.03;
  int epochs = 10;
  int minibatches = 32;
  int value_epochs = 10;
  int value_minibatches = 32;
  double value_lr = 3e-4;
  int cg_iters = 20;
  double damping = 0.01;
  int backtracks = 10;
  int hidden = 64;
  bool adaptive_radius = false;
  std::string out = "runs";

  bool onpolicy_algo() const;
  void validate() const;  // throws ConfigError

  // Flat key=value form ('#' comments); unknown keys are rejected.
  static RunConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> as_map() const;
};

// Runs the training loop and returns the run directory, which contains
// config.txt (resolved config plus the derived plan), log.csv (one row per
// policy update), and checkpoint.bin.
std::string train(const RunConfig& cfg);

// Little-endian flat-vector checkpoint: policy and value parameters plus the
// dimensions needed to rebuild both networks.
void save_checkpoint(const std::string& path, const GaussianPolicy& policy,
                     const ValueFunction& value_fn);
std::pair<GaussianPolicy, ValueFunction> load_checkpoint(
    const std::string& path);

// CSV header shared by train() and the plotting/acceptance code.
extern const char* kLogHeader;

}  // namespace gpi

#endif  // GPI_TRAIN_HPP_
