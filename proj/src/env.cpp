#include "env.hpp"

#include <cmath>

#include "errors.hpp"

namespace gpi {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp01(double r) { return std::min(1.0, std::max(0.0, r)); }

// Torque-limited pendulum, angle measured from upright. Constants are the
// classic ones: g = 10, m = 1, l = 1, dt = 0.05, torque in [-2, 2],
// angular velocity clamped to [-8, 8]. Semi-implicit Euler.
ContinuousEnv make_pendulum() {
  ContinuousEnv env;
  env.name = "pendulum_swingup";
  env.state_dim = 3;  // cos(theta), sin(theta), theta_dot
  env.action_dim = 1;
  env.action_low = -2.0;
  env.action_high = 2.0;
  env.dynamics = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double theta = std::atan2(s[1], s[0]);
    double theta_dot = s[2];
    const double u = a[0];
    const double dt = 0.05;
    theta_dot += (3.0 * 10.0 / 2.0 * std::sin(theta) + 3.0 * u) * dt;
    theta_dot = std::min(8.0, std::max(-8.0, theta_dot));
    const double new_theta = theta + theta_dot * dt;
    Eigen::VectorXd out(3);
    out << std::cos(new_theta), std::sin(new_theta), theta_dot;
    return out;
  };
  env.reward = [](const Eigen::VectorXd& s, const Eigen::VectorXd&) {
    return clamp01(0.5 * (1.0 + s[0]));  // 1 upright, 0 hanging
  };
  env.reset = [](Rng& rng) {
    Eigen::VectorXd s(3);
    const double theta = rng.uniform(-kPi, kPi);
    s << std::cos(theta), std::sin(theta), rng.uniform(-1.0, 1.0);
    return s;
  };
  return env;
}

// Cart-pole swing-up with a sparse signal: reward 1 only while the pole is
// within 15 degrees of upright. The pole starts hanging. Track limited to
// |x| <= 2.4 with a dead stop at the walls; episodes never terminate early.
// Constants: mc = 1, mp = 0.1, half-length l = 0.5, g = 9.8, dt = 0.02.
// Actions are normalized to [-1, 1] and scaled to a [-5, 5] N force inside
// the step map: unit-variance Gaussian exploration spans the force range,
// while the modest authority keeps upright visits rare under a random
// policy.
ContinuousEnv make_cartpole_sparse() {
  ContinuousEnv env;
  env.name = "cartpole_swingup_sparse";
  env.state_dim = 5;  // x, x_dot, cos(theta), sin(theta), theta_dot
  env.action_dim = 1;
  env.action_low = -1.0;
  env.action_high = 1.0;
  env.dynamics = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double dt = 0.02, g = 9.8, mc = 1.0, mp = 0.1, l = 0.5;
    double x = s[0], x_dot = s[1];
    const double theta = std::atan2(s[3], s[2]);  // from upright
    double theta_dot = s[4];
    const double f = 5.0 * a[0];
    const double sin_t = std::sin(theta), cos_t = std::cos(theta);
    const double total_m = mc + mp;
    const double tmp =
        (f + mp * l * theta_dot * theta_dot * sin_t) / total_m;
    const double theta_acc =
        (g * sin_t - cos_t * tmp) /
        (l * (4.0 / 3.0 - mp * cos_t * cos_t / total_m));
    const double x_acc = tmp - mp * l * theta_acc * cos_t / total_m;
    x_dot += x_acc * dt;
    x += x_dot * dt;
    if (x > 2.4) { x = 2.4; x_dot = 0.0; }
    if (x < -2.4) { x = -2.4; x_dot = 0.0; }
    theta_dot += theta_acc * dt;
    theta_dot = std::min(12.0, std::max(-12.0, theta_dot));
    const double new_theta = theta + theta_dot * dt;
    Eigen::VectorXd out(5);
    out << x, x_dot, std::cos(new_theta), std::sin(new_theta), theta_dot;
    return out;
  };
  env.reward = [](const Eigen::VectorXd& s, const Eigen::VectorXd&) {
    return (s[2] > std::cos(15.0 * kPi / 180.0)) ? 1.0 : 0.0;
  };
  env.reset = [](Rng& rng) {
    Eigen::VectorXd s(5);
    const double theta = kPi + rng.uniform(-0.05, 0.05);  // hanging
    s << rng.uniform(-0.05, 0.05), 0.0, std::cos(theta), std::sin(theta),
        rng.uniform(-0.05, 0.05);
    return s;
  };
  return env;
}

// Damped point mass on [-1, 1]^2 pushed toward the origin target. Reward is
// max(0, 1 - distance/target_radius) with target_radius = 0.5.
ContinuousEnv make_pointmass() {
  ContinuousEnv env;
  env.name = "pointmass_easy";
  env.state_dim = 4;  // px, py, vx, vy
  env.action_dim = 2;
  env.action_low = -1.0;
  env.action_high = 1.0;
  env.dynamics = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    const double dt = 0.05, drag = 1.0, gain = 4.0;
    Eigen::Vector2d p = s.head<2>(), v = s.tail<2>();
    v += dt * (gain * a - drag * v);
    p += dt * v;
    for (int i = 0; i < 2; ++i) {
      if (p[i] > 1.0) { p[i] = 1.0; v[i] = 0.0; }
      if (p[i] < -1.0) { p[i] = -1.0; v[i] = 0.0; }
    }
    Eigen::VectorXd out(4);
    out << p, v;
    return out;
  };
  env.reward = [](const Eigen::VectorXd& s, const Eigen::VectorXd&) {
    const double dist = s.head<2>().norm();
    return clamp01(1.0 - dist / 0.5);
  };
  env.reset = [](Rng& rng) {
    Eigen::VectorXd s(4);
    s << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0, 0.0;
    return s;
  };
  return env;
}

}  // namespace

std::vector<std::string> builtin_env_names() {
  return {"pendulum_swingup", "cartpole_swingup_sparse", "pointmass_easy"};
}

ContinuousEnv builtin_env(const std::string& name) {
  if (name == "pendulum_swingup") return make_pendulum();
  if (name == "cartpole_swingup_sparse") return make_cartpole_sparse();
  if (name == "pointmass_easy") return make_pointmass();
  std::string msg = "unknown environment '" + name + "'; valid names:";
  for (const auto& n : builtin_env_names()) msg += " " + n;
  throw ConfigError(msg);
}

void TabularMdp::validate() const {
  if (num_states < 1 || num_actions < 1 ||
      static_cast<int>(transition.size()) != num_actions) {
    throw ConfigError("tabular mdp: inconsistent sizes");
  }
  for (int a = 0; a < num_actions; ++a) {
    if (transition[a].rows() != num_states ||
        transition[a].cols() != num_states) {
      throw ConfigError("tabular mdp: transition shape mismatch");
    }
    for (int s = 0; s < num_states; ++s) {
      if (std::abs(transition[a].row(s).sum() - 1.0) > 1e-9 ||
          transition[a].row(s).minCoeff() < 0.0) {
        throw ConfigError("tabular mdp: transition row is not a distribution");
      }
    }
  }
  if (std::abs(initial_dist.sum() - 1.0) > 1e-9 ||
      initial_dist.minCoeff() < 0.0) {
    throw ConfigError("tabular mdp: initial distribution invalid");
  }
  if (reward.minCoeff() < 0.0 || reward.maxCoeff() > 1.0) {
    throw ConfigError("tabular mdp: rewards must lie in [0, 1]");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw ConfigError("tabular mdp: discount must be in (0, 1)");
  }
}

TabularMdp make_random_tabular(int num_states, int num_actions,
                               std::uint64_t seed) {
  if (num_states < 2 || num_actions < 2) {
    throw ConfigError("make_random_tabular: need >= 2 states and actions");
  }
  Rng rng(seed);
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = 0.9;
  mdp.reward.resize(num_states, num_actions);
  mdp.initial_dist.resize(num_states);
  for (int a = 0; a < num_actions; ++a) {
    Eigen::MatrixXd P(num_states, num_states);
    for (int s = 0; s < num_states; ++s) {
      // Dirichlet(1,...,1) row via normalized exponentials.
      Eigen::ArrayXd e(num_states);
      for (int t = 0; t < num_states; ++t)
        e[t] = -std::log(1.0 - rng.uniform());
      P.row(s) = (e / e.sum()).matrix().transpose();
    }
    mdp.transition.push_back(P);
  }
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) mdp.reward(s, a) = rng.uniform();
  Eigen::ArrayXd e(num_states);
  for (int s = 0; s < num_states; ++s) e[s] = -std::log(1.0 - rng.uniform());
  mdp.initial_dist = (e / e.sum()).matrix();
  mdp.validate();
  return mdp;
}

Sampler::Sampler(ContinuousEnv env, std::uint64_t seed)
    : env_(std::move(env)), rng_(seed) {
  begin_episode();
}

void Sampler::begin_episode() {
  state_ = env_.reset(rng_);
  t_in_episode_ = 0;
  episode_return_ = 0.0;
}

std::vector<Transition> Sampler::collect(const GaussianPolicy& policy,
                                         int n) {
  if (n < 1) throw ConfigError("collect: n must be >= 1");
  if (policy.obs_dim() != env_.state_dim ||
      policy.act_dim() != env_.action_dim) {
    throw ConfigError("collect: policy dimensions do not match environment");
  }
  std::vector<Transition> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Transition tr;
    tr.state = state_;
    tr.action = policy.sample(state_, rng_);
    tr.behavior_logprob = policy.log_prob(tr.state, tr.action)(0);
    const Eigen::VectorXd clipped = env_.clip_action(tr.action);
    tr.next_state = env_.dynamics(state_, clipped);
    tr.reward = clamp01(env_.reward(state_, clipped));
    episode_return_ += tr.reward;
    ++t_in_episode_;
    if (t_in_episode_ >= env_.horizon) {
      tr.done = true;
      tr.truncated = true;
      recent_returns_.push_back(episode_return_);
      if (recent_returns_.size() > 100) recent_returns_.pop_front();
      ++episodes_completed_;
      begin_episode();
    } else {
      state_ = tr.next_state;
    }
    out.push_back(std::move(tr));
  }
  return out;
}

double Sampler::mean_recent_return(int k) const {
  if (recent_returns_.empty()) return 0.0;
  const int count = std::min<int>(k, static_cast<int>(recent_returns_.size()));
  double acc = 0.0;
  for (int i = 0; i < count; ++i)
    acc += recent_returns_[recent_returns_.size() - 1 - i];
  return acc / count;
}

std::vector<Transition> collect(const ContinuousEnv& env,
                                const GaussianPolicy& policy, int n,
                                std::uint64_t seed) {
  Sampler sampler(env, seed);
  return sampler.collect(policy, n);
}

}  // namespace gpi
