#include "estimation.hpp"

#include <cmath>

#include "errors.hpp"

namespace gpi {

AdvantageEstimate gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values,
                      const std::vector<bool>& terminated,
                      const std::vector<bool>& truncated, double gamma,
                      double lambda) {
  const int T = static_cast<int>(rewards.size());
  if (values.size() != T + 1 || static_cast<int>(terminated.size()) != T ||
      static_cast<int>(truncated.size()) != T) {
    throw ConfigError("gae: length mismatch");
  }
  AdvantageEstimate est;
  est.advantages.resize(T);
  est.value_targets.resize(T);
  est.ratios = Eigen::VectorXd::Ones(T);
  est.truncated_ratios = Eigen::VectorXd::Ones(T);
  double tail = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    const double bootstrap = terminated[t] ? 0.0 : values[t + 1];
    const double delta = rewards[t] + gamma * bootstrap - values[t];
    const bool boundary = terminated[t] || truncated[t];
    est.advantages[t] = delta + gamma * lambda * (boundary ? 0.0 : tail);
    tail = est.advantages[t];
    est.value_targets[t] = est.advantages[t] + values[t];
  }
  return est;
}

AdvantageEstimate vtrace_advantages(const std::vector<Transition>& batch,
                                    const GaussianPolicy& current,
                                    const ValueFunction& value_fn,
                                    double gamma, double lambda,
                                    double c_bar) {
  const int T = static_cast<int>(batch.size());
  if (T == 0) throw ConfigError("vtrace: empty batch");
  if (c_bar <= 0.0) throw ConfigError("vtrace: c_bar must be positive");

  Eigen::MatrixXd X(current.obs_dim(), T);
  Eigen::MatrixXd A(current.act_dim(), T);
  Eigen::MatrixXd Xn(current.obs_dim(), T);
  for (int t = 0; t < T; ++t) {
    X.col(t) = batch[t].state;
    A.col(t) = batch[t].action;
    Xn.col(t) = batch[t].next_state;
  }
  const Eigen::RowVectorXd lp = current.log_prob(X, A);
  const Eigen::RowVectorXd v = value_fn.values(X);
  const Eigen::RowVectorXd vn = value_fn.values(Xn);

  AdvantageEstimate est;
  est.advantages.resize(T);
  est.value_targets.resize(T);
  est.ratios.resize(T);
  est.truncated_ratios.resize(T);

  double tail = 0.0;
  double c_next = 1.0;  // c_{t+1}, irrelevant at boundaries where tail = 0
  for (int t = T - 1; t >= 0; --t) {
    const Transition& tr = batch[t];
    const double ratio = std::exp(lp[t] - tr.behavior_logprob);
    if (!std::isfinite(ratio)) {
      throw NumericError("vtrace: non-finite importance ratio at index " +
                         std::to_string(t) + " (age " +
                         std::to_string(tr.policy_age) + ")");
    }
    const double c = std::min(c_bar, ratio);
    const bool terminated = tr.done && !tr.truncated;
    const bool boundary = tr.done;
    const double bootstrap = terminated ? 0.0 : vn[t];
    const double delta = tr.reward + gamma * bootstrap - v[t];
    // A_t = delta_t + gamma * lambda * c_{t+1} * A_{t+1}; the lambda-weighted
    // combination of the K-step V-trace sums collapses to this recursion.
    est.advantages[t] =
        delta + gamma * lambda * (boundary ? 0.0 : c_next * tail);
    tail = est.advantages[t];
    c_next = c;
    est.ratios[t] = ratio;
    est.truncated_ratios[t] = c;
    // V-trace value estimate: V(s_t) + c_t * A_t.
    est.value_targets[t] = v[t] + c * est.advantages[t];
  }
  return est;
}

Eigen::VectorXd standardize_weighted(const Eigen::VectorXd& advantages,
                                     const Eigen::VectorXd& ratios,
                                     const Eigen::VectorXd& weights) {
  const int T = static_cast<int>(advantages.size());
  if (ratios.size() != T) throw ConfigError("standardize: length mismatch");
  if (T < 2) throw ConfigError("standardize: batch size must be >= 2");
  Eigen::VectorXd w = weights;
  if (w.size() == 0) w = Eigen::VectorXd::Constant(T, 1.0 / T);
  if (w.size() != T) throw ConfigError("standardize: weight length mismatch");

  const Eigen::ArrayXd q = advantages.array() * ratios.array();
  const double mean = (q * w.array()).sum();
  const double var = ((q - mean).square() * w.array()).sum();
  constexpr double kEps = 1e-12;
  if (var < kEps) return Eigen::VectorXd::Zero(T);  // degenerate batch
  // Return per-sample advantages such that ratio * adv is the standardized
  // quantity; with all ratios 1 this is plain advantage normalization.
  return (((q - mean) / std::sqrt(var)) / ratios.array()).matrix();
}

Adam::Adam(int dim, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(dim)),
      v_(Eigen::VectorXd::Zero(dim)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::reset() {
  m_.setZero();
  v_.setZero();
  t_ = 0;
}

Eigen::VectorXd Adam::step(const Eigen::VectorXd& params,
                           const Eigen::VectorXd& grad, double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array().matrix() +
       (1.0 - beta2_) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const Eigen::ArrayXd m_hat = m_.array() / bc1;
  const Eigen::ArrayXd v_hat = v_.array() / bc2;
  return params.array() - lr * m_hat / (v_hat.sqrt() + eps_);
}

namespace {

// Fisher-Yates over index vector, seeded.
std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace

ValueFunction fit_value(const ValueFunction& value_fn,
                        const Eigen::MatrixXd& states,
                        const Eigen::VectorXd& targets, int epochs,
                        int minibatches, double lr,
                        std::uint64_t shuffle_seed, Adam* adam) {
  const int T = static_cast<int>(targets.size());
  if (T == 0) throw ConfigError("fit_value: empty batch");
  if (states.cols() != T) throw ConfigError("fit_value: length mismatch");

  ValueFunction v = value_fn;
  Adam local(v.param_count());
  Adam& opt = adam ? *adam : local;
  Rng rng(shuffle_seed);
  const Mlp& mlp = v.mlp();

  for (int e = 0; e < epochs; ++e) {
    const std::vector<int> idx = shuffled_indices(T, rng);
    const int mb_count = std::min(minibatches, T);
    for (int m = 0; m < mb_count; ++m) {
      const int lo = static_cast<int>(static_cast<long>(m) * T / mb_count);
      const int hi =
          static_cast<int>(static_cast<long>(m + 1) * T / mb_count);
      const int B = hi - lo;
      if (B == 0) continue;
      Eigen::MatrixXd Xb(states.rows(), B);
      Eigen::RowVectorXd yb(B);
      for (int i = 0; i < B; ++i) {
        Xb.col(i) = states.col(idx[lo + i]);
        yb[i] = targets[idx[lo + i]];
      }
      ad::Tape tape;
      std::vector<ad::Expr> leaves;
      ad::Expr out = mlp.build(tape, v.flat(), Xb, leaves);
      ad::Expr err = tape.sub(out, tape.constant(yb.array()));
      ad::Expr loss = tape.mul_scalar(tape.sum(tape.square(err)), 1.0 / B);
      tape.backward(loss);
      v.set_flat(opt.step(v.flat(), mlp.collect_grad(tape, leaves), lr));
    }
  }
  return v;
}

}  // namespace gpi
