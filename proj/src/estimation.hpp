#ifndef GPI_ESTIMATION_HPP_
#define GPI_ESTIMATION_HPP_

#include <Eigen/Dense>
#include <vector>

#include "env.hpp"
#include "policy.hpp"

namespace gpi {

struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd value_targets;
  Eigen::VectorXd ratios;            // pi_k / pi_{k-i}
  Eigen::VectorXd truncated_ratios;  // c_t = min(c_bar, ratio)
};

// Plain backward-recursive GAE. `values` has one extra entry: V of the state
// following the last transition (used when the tail is truncated).
// `terminated[t]` marks true terminations (bootstrap 0), `truncated[t]`
// horizon cuts (bootstrap values[t+1]).
AdvantageEstimate gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values,
                      const std::vector<bool>& terminated,
                      const std::vector<bool>& truncated, double gamma,
                      double lambda);

// Off-policy GAE with V-trace truncated-importance corrections. Ratios are
// exp(current logprob - behavior logprob); with behavior == current and
// c_bar >= 1 the output matches gae() bit for bit.
AdvantageEstimate vtrace_advantages(const std::vector<Transition>& batch,
                                    const GaussianPolicy& current,
                                    const ValueFunction& value_fn,
                                    double gamma, double lambda, double c_bar);

// Standardizes the ratio-weighted advantages r .* adv to zero mean and unit
// standard deviation under `weights` (uniform when empty; weights must sum
// to 1), then divides by r so that r .* result is the standardized quantity.
// A zero-variance batch returns zeros.
Eigen::VectorXd standardize_weighted(
    const Eigen::VectorXd& advantages, const Eigen::VectorXd& ratios,
    const Eigen::VectorXd& weights = Eigen::VectorXd());

// Adam with the standard bias correction; state persists across calls.
class Adam {
 public:
  explicit Adam(int dim, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  Eigen::VectorXd step(const Eigen::VectorXd& params,
                       const Eigen::VectorXd& grad, double lr);
  void reset();

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Mean-squared-error regression of the value function onto fixed targets
// with a seeded minibatch schedule. Optimizer state is caller-owned so the
// training loop can keep moments across updates.
ValueFunction fit_value(const ValueFunction& value_fn,
                        const Eigen::MatrixXd& states,
                        const Eigen::VectorXd& targets, int epochs,
                        int minibatches, double lr, std::uint64_t shuffle_seed,
                        Adam* adam = nullptr);

}  // namespace gpi

#endif  // GPI_ESTIMATION_HPP_
