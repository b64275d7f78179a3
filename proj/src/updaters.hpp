#ifndef GPI_UPDATERS_HPP_
#define GPI_UPDATERS_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include "estimation.hpp"
#include "planner.hpp"
#include "policy.hpp"
#include "replay.hpp"

namespace gpi {

struct UpdateReport {
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  double measured_tv = 0.0;  // one-step TV via the ratio-deviation form
  double measured_kl = 0.0;
  double step_scale = 0.0;        // beta (natural-gradient family)
  double dual_temperature = 0.0;  // lambda* (VMPO family)
  double lr = 0.0;                // current learning rate (clipped family)
  bool accepted = true;
};

// Learning-rate and optimizer-moment state carried across clipped-surrogate
// updates; the adaptive rule only ever shrinks lr.
struct PpoState {
  double lr;
  Adam adam;
  PpoState(int param_count, double lr0 = 3e-4) : lr(lr0), adam(param_count) {}
};

struct PpoConfig {
  int epochs = 10;
  int minibatches = 32;
  double alpha = 0.03;  // lr <- lr / (1 + alpha) on trust-region breach
  std::uint64_t shuffle_seed = 0;
};

struct TrpoConfig {
  int cg_iters = 20;
  double damping = 0.01;
  int max_backtracks = 10;
  double cg_tol = 1e-6;
};

// Clipped-surrogate ascent with per-sample clip ranges centered at the
// ratios pi_k / pi_{k-i} and half-width plan.eps_gen; measured TV above
// eps_gen/2 after the epochs triggers the learning-rate decay.
std::pair<GaussianPolicy, UpdateReport> geppo_update(
    const WeightedBatch& batch, const GaussianPolicy& policy,
    const MixturePlan& plan, PpoState& state, const PpoConfig& cfg);

// On-policy special case: clip range [1 - eps, 1 + eps].
std::pair<GaussianPolicy, UpdateReport> ppo_update(const WeightedBatch& batch,
                                                   const GaussianPolicy& policy,
                                                   double eps, PpoState& state,
                                                   const PpoConfig& cfg);

// Natural-gradient trust region: conjugate-gradient solve of F v = g with
// damping, step beta = sqrt(2 delta / v'Fv), backtracking (factor 0.5) until
// the empirical mixture KL fits the radius and the surrogate does not
// decrease. Rejection leaves the policy unchanged.
std::pair<GaussianPolicy, UpdateReport> getrpo_update(
    const WeightedBatch& batch, const GaussianPolicy& policy,
    const MixturePlan& plan, const TrpoConfig& cfg);

std::pair<GaussianPolicy, UpdateReport> trpo_update(
    const WeightedBatch& batch, const GaussianPolicy& policy, double delta,
    const TrpoConfig& cfg);

struct VmpoWeights {
  Eigen::VectorXd w;   // exp(adv / lambda*) / Z
  double lambda_star;  // dual minimizer of lambda*delta + lambda*log Z
};

// Temperature from the empirical dual, minimized on a 64-point log grid over
// [1e-6, 1e3] and refined by golden section. `sample_weights` are the
// per-sample probabilities (mixture weight times importance ratio for the
// generalized case); empty means uniform. Z is the sample-weighted mean of
// exp(adv / lambda), so the sample-weighted mean of w is exactly 1.
VmpoWeights vmpo_weights(const Eigen::VectorXd& advantages, double delta,
                         const Eigen::VectorXd& sample_weights =
                             Eigen::VectorXd());

// Weighted maximum likelihood toward w with the w-1 baseline, projected into
// the forward-KL trust region by the natural-gradient machinery.
std::pair<GaussianPolicy, UpdateReport> gevmpo_update(
    const WeightedBatch& batch, const GaussianPolicy& policy,
    const MixturePlan& plan, const TrpoConfig& cfg);

std::pair<GaussianPolicy, UpdateReport> vmpo_update(
    const WeightedBatch& batch, const GaussianPolicy& policy, double delta,
    const TrpoConfig& cfg);

// Conjugate gradient on a symmetric positive-definite matvec; stops when the
// relative residual drops below tol or after max_iters rounds.
Eigen::VectorXd conjugate_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
    const Eigen::VectorXd& g, int max_iters, double tol);

}  // namespace gpi

#endif  // GPI_UPDATERS_HPP_
