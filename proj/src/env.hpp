#ifndef GPI_ENV_HPP_
#define GPI_ENV_HPP_

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "policy.hpp"
#include "rng.hpp"

namespace gpi {

// One environment step. `done` marks an episode boundary; `truncated`
// distinguishes a horizon cut (bootstrap from V) from a true termination
// (bootstrap zero).
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;  // unclipped sample; dynamics clip internally
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
  bool truncated = false;
  double behavior_logprob = 0.0;
  int policy_age = 0;
};

// Deterministic fixed-timestep continuous-control task. Value object; one
// instance per sampling thread.
struct ContinuousEnv {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 1000;
  double action_low = -1.0;
  double action_high = 1.0;
  // step map over the clipped action; rewards are clamped to [0, 1]
  std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      dynamics;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      reward;
  std::function<Eigen::VectorXd(Rng&)> reset;

  Eigen::VectorXd clip_action(const Eigen::VectorXd& a) const {
    return a.cwiseMax(action_low).cwiseMin(action_high);
  }
};

// Built-in tasks: pendulum_swingup, cartpole_swingup_sparse, pointmass_easy.
// Unknown names raise ConfigError listing the valid set.
ContinuousEnv builtin_env(const std::string& name);
std::vector<std::string> builtin_env_names();

// Enumerable MDP for exact verification.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Eigen::MatrixXd> transition;  // per action: (s -> s') rows
  Eigen::MatrixXd reward;                   // (s, a) in [0, 1]
  Eigen::VectorXd initial_dist;
  double discount = 0.99;

  void validate() const;  // throws ConfigError on invariant violation
};

TabularMdp make_random_tabular(int num_states, int num_actions,
                               std::uint64_t seed);

// Stateful trajectory collector. Episodes persist across collect() calls so
// consecutive batches continue mid-episode; completed undiscounted returns
// are tracked for logging.
class Sampler {
 public:
  Sampler(ContinuousEnv env, std::uint64_t seed);

  std::vector<Transition> collect(const GaussianPolicy& policy, int n);

  // Mean undiscounted return over the last `k` completed episodes (0 if none
  // have completed yet).
  double mean_recent_return(int k = 10) const;
  int episodes_completed() const { return episodes_completed_; }

  const ContinuousEnv& env() const { return env_; }

 private:
  void begin_episode();

  ContinuousEnv env_;
  Rng rng_;
  Eigen::VectorXd state_;
  int t_in_episode_ = 0;
  double episode_return_ = 0.0;
  int episodes_completed_ = 0;
  std::deque<double> recent_returns_;
};

// Fresh-start convenience wrapper around Sampler.
std::vector<Transition> collect(const ContinuousEnv& env,
                                const GaussianPolicy& policy, int n,
                                std::uint64_t seed);

}  // namespace gpi

#endif  // GPI_ENV_HPP_
