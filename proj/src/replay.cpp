#include "replay.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"
#include "estimation.hpp"

namespace gpi {

ReplayWindow::ReplayWindow(int capacity, int slot_size)
    : capacity_(capacity), slot_size_(slot_size) {
  if (capacity < 1 || slot_size < 1)
    throw ConfigError("replay window: capacity and slot size must be >= 1");
}

void ReplayWindow::push(const GaussianPolicy& snapshot,
                        const std::vector<Transition>& transitions) {
  if (static_cast<int>(transitions.size()) != slot_size_)
    throw ConfigError("replay window: batch size " +
                      std::to_string(transitions.size()) + " != slot size " +
                      std::to_string(slot_size_));
  slots_.push_front(Slot{snapshot, transitions});
  if (static_cast<int>(slots_.size()) > capacity_) slots_.pop_back();
}

WeightedBatch assemble(const ReplayWindow& window,
                       const GaussianPolicy& current,
                       const ValueFunction& value_fn, const MixturePlan& plan,
                       const EstimatorConfig& cfg) {
  const int slots = window.size();
  if (slots == 0) throw ConfigError("assemble: replay window is empty");
  const int n = window.slot_size();
  const int total = slots * n;

  // Restrict the plan weights to the ages that exist and renormalize; during
  // warm-up this gracefully degrades to on-policy at the first update.
  Eigen::VectorXd nu = plan.nu.head(std::min<int>(slots, plan.nu.size()));
  if (nu.size() < slots) {
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(slots);
    padded.head(nu.size()) = nu;
    nu = padded;
  }
  double mass = nu.sum();
  if (mass <= 0.0) throw NumericError("assemble: realized ages carry no weight");
  nu /= mass;

  WeightedBatch b;
  const int sd = current.obs_dim();
  const int ad = current.act_dim();
  b.states.resize(sd, total);
  b.actions.resize(ad, total);
  b.next_states.resize(sd, total);
  b.rewards.resize(total);
  b.terminated.resize(total);
  b.truncated.resize(total);
  b.behavior_logprob.resize(total);
  b.ages.resize(total);
  b.mixture_weight.resize(total);
  b.ratio_center.resize(total);
  b.advantages.resize(total);
  b.value_targets.resize(total);

  Eigen::VectorXd raw_adv(total);
  for (int age = 0; age < slots; ++age) {
    const auto& data = window.transitions(age);
    AdvantageEstimate est = vtrace_advantages(data, current, value_fn,
                                              cfg.gamma, cfg.lambda, cfg.c_bar);
    const int base = age * n;
    for (int t = 0; t < n; ++t) {
      const Transition& tr = data[t];
      const int col = base + t;
      b.states.col(col) = tr.state;
      b.actions.col(col) = tr.action;
      b.next_states.col(col) = tr.next_state;
      b.rewards[col] = tr.reward;
      b.terminated[col] = tr.done && !tr.truncated;
      b.truncated[col] = tr.truncated;
      b.behavior_logprob[col] = tr.behavior_logprob;
      b.ages[col] = age;
      b.mixture_weight[col] = nu[age] / n;
      double r = est.ratios[t];
      if (!std::isfinite(r))
        throw NumericError("assemble: non-finite ratio at slot " +
                           std::to_string(age) + " index " +
                           std::to_string(t));
      b.ratio_center[col] = r;
      raw_adv[col] = est.advantages[t];
      b.value_targets[col] = est.value_targets[t];
    }
  }
  b.advantages =
      standardize_weighted(raw_adv, b.ratio_center, b.mixture_weight);
  return b;
}

}  // namespace gpi
