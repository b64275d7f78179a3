#ifndef GPI_REPLAY_HPP_
#define GPI_REPLAY_HPP_

#include <Eigen/Dense>
#include <deque>
#include <vector>

#include "env.hpp"
#include "planner.hpp"
#include "policy.hpp"

namespace gpi {

// Update batch assembled across the window: one column per transition,
// ordered slot by slot from newest (age 0) to oldest.
struct WeightedBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd rewards;
  std::vector<bool> terminated;
  std::vector<bool> truncated;
  Eigen::VectorXd behavior_logprob;   // log pi_{k-i}(a|s) at collection time
  Eigen::VectorXi ages;
  Eigen::VectorXd mixture_weight;     // nu_age / n_age, sums to 1
  Eigen::VectorXd ratio_center;       // pi_k / pi_{k-i} at assembly time
  Eigen::VectorXd advantages;         // V-trace-corrected, standardized
  Eigen::VectorXd value_targets;
  int size() const { return static_cast<int>(states.cols()); }
};

// Ring of the last M per-policy batches, newest first. Holds exactly M*n
// transitions plus M policy snapshots once warm.
class ReplayWindow {
 public:
  ReplayWindow(int capacity, int slot_size);

  // Ages existing slots, evicts the oldest at capacity, stores the new batch
  // at age 0 together with the collecting policy's parameters.
  void push(const GaussianPolicy& snapshot,
            const std::vector<Transition>& transitions);

  int size() const { return static_cast<int>(slots_.size()); }
  int capacity() const { return capacity_; }
  int slot_size() const { return slot_size_; }
  const GaussianPolicy& snapshot(int age) const { return slots_[age].policy; }
  const std::vector<Transition>& transitions(int age) const {
    return slots_[age].data;
  }

 private:
  struct Slot {
    GaussianPolicy policy;
    std::vector<Transition> data;
  };
  std::deque<Slot> slots_;  // front = age 0
  int capacity_;
  int slot_size_;
};

struct EstimatorConfig {
  double gamma = 0.995;
  double lambda = 0.97;
  double c_bar = 1.0;
};

// Recomputes ratios, V-trace advantages, and value targets against the
// current policy and value function, then standardizes the ratio-weighted
// advantages under the mixture weights. During warm-up the plan weights are
// restricted to realized ages and renormalized.
WeightedBatch assemble(const ReplayWindow& window,
                       const GaussianPolicy& current,
                       const ValueFunction& value_fn, const MixturePlan& plan,
                       const EstimatorConfig& cfg);

}  // namespace gpi

#endif  // GPI_REPLAY_HPP_
