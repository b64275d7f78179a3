#ifndef GPI_PLANNER_HPP_
#define GPI_PLANNER_HPP_

#include <Eigen/Dense>
#include <vector>

#include "policy.hpp"

namespace gpi {

// Mixture weights over policy ages with the trust-region and sample-size
// accounting derived from them. Plans are immutable once built.
struct MixturePlan {
  Eigen::VectorXd nu;    // weights over ages 0..support-1, sums to 1
  int support = 1;       // count of nonzero weights (M)
  int B = 1;             // on-policy batch is N = B * n
  int n = 1024;          // minimum batch size
  double kappa = 0.0;
  double eps = 0.2;
  double eps_gen = 0.2;   // eps / E[i + 1]
  double delta_gen = 0.02;
  double sum_sq = 1.0;       // sum nu_i^2
  double mean_age1 = 1.0;    // sum nu_i (i + 1)
  double ess = 0.0;          // n / sum_sq
  double tv_total = 0.0;     // B * eps_gen / 2

  // Percent improvements over the on-policy baseline.
  double ess_gain_pct() const { return (1.0 / (B * sum_sq) - 1.0) * 100.0; }
  double tv_gain_pct() const { return (B / mean_age1 - 1.0) * 100.0; }

  void validate() const;  // throws NumericError on constraint violation
};

// eps_gen = eps / E_{i~nu}[i + 1]; always <= eps.
double eps_gen_from(const Eigen::VectorXd& nu, double eps);

// delta_gen = eps_gen^2 / 2.
double delta_gen_from(double eps_gen);

// Solves the convex mixture-weight problem
//   min  kappa * sum nu^2 / c_ess + (1 - kappa) * sum nu (i+1) / c_tv
//   s.t. sum nu^2 <= 1/B, sum nu (i+1) <= B, nu on the simplex,
// exactly via the water-filling structure nu_i = max(0, a - b(i+1)), with
// the scaling coefficients taken from the kappa = 0 and kappa = 1 extreme
// solutions. Support is capped at 4B (never binding; checked in tests).
MixturePlan solve_mixture(int B, double kappa, int n = 1024,
                          double eps = 0.2);

// Uniform weights over the last M policies; feasible iff B <= M <= 2B - 1.
MixturePlan uniform_plan(int B, int M, int n = 1024, double eps = 0.2);

// Degenerate on-policy plan: nu = (1.0), B = 1, n = full batch size.
MixturePlan onpolicy_plan(int n, double eps);

// Measured-drift alternative to the Theorem-style constant radius:
// 2 * max(0, eps/2 - sum_i nu_i * mean-per-state TV(pi_k, pi_{k-i})), with
// per-state TV estimated by min(1, sqrt(KL/2)). probe_states[i] holds states
// drawn from the age-i slot of the replay window.
double adaptive_eps_gen(const GaussianPolicy& current,
                        const std::vector<GaussianPolicy>& priors,
                        const Eigen::VectorXd& nu, double eps,
                        const std::vector<Eigen::MatrixXd>& probe_states);

}  // namespace gpi

#endif  // GPI_PLANNER_HPP_
