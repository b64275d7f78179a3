#include <cmath>

#include "doctest.h"
#include "env.hpp"
#include "errors.hpp"
#include "policy.hpp"
#include "rng.hpp"

using namespace gpi;

TEST_SUITE("env") {

TEST_CASE("builtin environments and their shapes") {
  const ContinuousEnv pend = builtin_env("pendulum_swingup");
  CHECK(pend.state_dim == 3);
  CHECK(pend.action_dim == 1);
  CHECK(pend.horizon == 1000);
  const ContinuousEnv cart = builtin_env("cartpole_swingup_sparse");
  CHECK(cart.state_dim == 5);
  CHECK(cart.action_dim == 1);
  const ContinuousEnv pm = builtin_env("pointmass_easy");
  CHECK(pm.state_dim == 4);
  CHECK(pm.action_dim == 2);
  CHECK_THROWS_AS(builtin_env("nope"), ConfigError);
}

TEST_CASE("pendulum reward shape: 1 upright, 0 hanging") {
  const ContinuousEnv env = builtin_env("pendulum_swingup");
  Eigen::VectorXd up(3), down(3), a(1);
  up << 1.0, 0.0, 0.0;    // cos = 1: upright
  down << -1.0, 0.0, 0.0; // cos = -1: hanging
  a << 0.0;
  CHECK(env.reward(up, a) == doctest::Approx(1.0));
  CHECK(env.reward(down, a) == doctest::Approx(0.0));
}

TEST_CASE("sparse cartpole pays only near upright") {
  const ContinuousEnv env = builtin_env("cartpole_swingup_sparse");
  Eigen::VectorXd s(5), a(1);
  a << 0.0;
  s << 0, 0, std::cos(0.1), std::sin(0.1), 0;  // ~5.7 degrees
  CHECK(env.reward(s, a) == 1.0);
  s << 0, 0, std::cos(0.5), std::sin(0.5), 0;  // ~28.6 degrees
  CHECK(env.reward(s, a) == 0.0);
}

TEST_CASE("pointmass reward is distance-shaped and clamped") {
  const ContinuousEnv env = builtin_env("pointmass_easy");
  Eigen::VectorXd s(4), a(2);
  a << 0, 0;
  s << 0, 0, 0, 0;
  CHECK(env.reward(s, a) == doctest::Approx(1.0));
  s << 1.0, 1.0, 0, 0;
  CHECK(env.reward(s, a) == 0.0);
}

TEST_CASE("collect: exact count, boundaries, logprob fidelity, determinism") {
  const ContinuousEnv env = builtin_env("pendulum_swingup");
  Rng rng(3);
  const GaussianPolicy pi =
      GaussianPolicy::initialized(3, 1, rng, 0.0, 16);

  const std::vector<Transition> batch = collect(env, pi, 1024, 7);
  CHECK(batch.size() == 1024);
  int boundaries = 0;
  for (const auto& tr : batch) {
    CHECK(std::isfinite(tr.behavior_logprob));
    CHECK(tr.reward >= 0.0);
    CHECK(tr.reward <= 1.0);
    // Stored log-density must be the collecting policy's own evaluation.
    Eigen::MatrixXd X = tr.state, A = tr.action;
    CHECK(pi.log_prob(X, A)(0) == tr.behavior_logprob);
    boundaries += tr.done ? 1 : 0;
  }
  // 1024 steps with horizon 1000 spans exactly one truncation boundary.
  CHECK(boundaries == 1);
  CHECK(batch[999].done);
  CHECK(batch[999].truncated);

  const std::vector<Transition> again = collect(env, pi, 1024, 7);
  for (int t = 0; t < 1024; ++t) {
    CHECK((again[t].state - batch[t].state).cwiseAbs().maxCoeff() == 0.0);
    CHECK(again[t].reward == batch[t].reward);
  }
}

TEST_CASE("deterministic replaying of the step map") {
  const ContinuousEnv env = builtin_env("cartpole_swingup_sparse");
  Rng rng(5);
  const GaussianPolicy pi = GaussianPolicy::initialized(5, 1, rng, 0.0, 16);
  const std::vector<Transition> batch = collect(env, pi, 256, 11);
  for (const auto& tr : batch) {
    if (tr.done) continue;  // reset replaces next_state at boundaries
    const Eigen::VectorXd replay = env.dynamics(tr.state, env.clip_action(tr.action));
    CHECK((replay - tr.next_state).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sparse cartpole random-policy reward fraction is below 10%") {
  const ContinuousEnv env = builtin_env("cartpole_swingup_sparse");
  Rng rng(9);
  const GaussianPolicy pi = GaussianPolicy::initialized(5, 1, rng, 0.0, 16);
  const std::vector<Transition> batch = collect(env, pi, 100000, 13);
  int paid = 0;
  for (const auto& tr : batch) paid += tr.reward > 0.01 ? 1 : 0;
  CHECK(double(paid) / batch.size() < 0.10);
}

TEST_CASE("random tabular MDPs satisfy their invariants deterministically") {
  const TabularMdp a = make_random_tabular(3, 2, 0);
  a.validate();
  for (int act = 0; act < 2; ++act)
    CHECK((a.transition[act].rowwise().sum().array() - 1.0).abs().maxCoeff() <
          1e-9);
  const TabularMdp b1 = make_random_tabular(2, 2, 1);
  const TabularMdp b2 = make_random_tabular(2, 2, 1);
  for (int act = 0; act < 2; ++act)
    CHECK((b1.transition[act] - b2.transition[act]).cwiseAbs().maxCoeff() ==
          0.0);
  const TabularMdp c = make_random_tabular(5, 3, 17);
  CHECK(c.reward.minCoeff() >= 0.0);
  CHECK(c.reward.maxCoeff() <= 1.0);
}

TEST_CASE("discounted return of any trajectory stays in [0, 1/(1-gamma)]") {
  const ContinuousEnv env = builtin_env("pointmass_easy");
  Rng rng(15);
  const GaussianPolicy pi = GaussianPolicy::initialized(4, 2, rng, 0.0, 16);
  const std::vector<Transition> batch = collect(env, pi, 2000, 19);
  const double gamma = 0.99;
  double acc = 0.0, w = 1.0;
  for (const auto& tr : batch) {
    acc += w * tr.reward;
    w *= gamma;
    if (tr.done) {
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0 / (1.0 - gamma) + 1e-9);
      acc = 0.0;
      w = 1.0;
    }
  }
}

}  // TEST_SUITE
