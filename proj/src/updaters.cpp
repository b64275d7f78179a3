#include "updaters.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace gpi {

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

// Weighted clipped surrogate evaluated without a tape.
double clipped_surrogate(const GaussianPolicy& pi, const WeightedBatch& b,
                         double eps_gen) {
  const Eigen::RowVectorXd lp = pi.log_prob(b.states, b.actions);
  double s = 0.0;
  for (int t = 0; t < b.size(); ++t) {
    const double r = std::exp(lp[t] - b.behavior_logprob[t]);
    const double c = b.ratio_center[t];
    const double rc = std::min(std::max(r, c - eps_gen), c + eps_gen);
    const double a = b.advantages[t];
    s += b.mixture_weight[t] * std::min(r * a, rc * a);
  }
  return s;
}

double ratio_tv(const GaussianPolicy& pi, const WeightedBatch& b) {
  const Eigen::RowVectorXd lp = pi.log_prob(b.states, b.actions);
  double s = 0.0;
  for (int t = 0; t < b.size(); ++t) {
    const double r = std::exp(lp[t] - b.behavior_logprob[t]);
    s += b.mixture_weight[t] * std::abs(r - b.ratio_center[t]);
  }
  return 0.5 * s;
}

}  // namespace

std::pair<GaussianPolicy, UpdateReport> geppo_update(const WeightedBatch& batch,
                                                     const GaussianPolicy& policy,
                                                     const MixturePlan& plan,
                                                     PpoState& state,
                                                     const PpoConfig& cfg) {
  const int T = batch.size();
  const double eps_gen = plan.eps_gen;
  GaussianPolicy pi = policy;
  UpdateReport rep;
  rep.surrogate_before = clipped_surrogate(pi, batch, eps_gen);

  Rng rng(cfg.shuffle_seed);
  for (int e = 0; e < cfg.epochs; ++e) {
    const std::vector<int> idx = shuffled_indices(T, rng);
    const int mb_count = std::min(cfg.minibatches, T);
    for (int m = 0; m < mb_count; ++m) {
      const int lo = static_cast<int>(static_cast<long>(m) * T / mb_count);
      const int hi = static_cast<int>(static_cast<long>(m + 1) * T / mb_count);
      const int B = hi - lo;
      if (B == 0) continue;
      Eigen::MatrixXd Xb(batch.states.rows(), B);
      Eigen::MatrixXd Ab(batch.actions.rows(), B);
      ad::Mat blp(1, B), adv(1, B), w(1, B), clo(1, B), chi(1, B);
      for (int i = 0; i < B; ++i) {
        const int t = idx[lo + i];
        Xb.col(i) = batch.states.col(t);
        Ab.col(i) = batch.actions.col(t);
        blp(0, i) = batch.behavior_logprob[t];
        adv(0, i) = batch.advantages[t];
        w(0, i) = batch.mixture_weight[t];
        clo(0, i) = batch.ratio_center[t] - eps_gen;
        chi(0, i) = batch.ratio_center[t] + eps_gen;
      }
      ad::Tape tape;
      GaussianPolicy::TapeBits bits = pi.build_mean(tape, Xb);
      ad::Expr lp = pi.build_log_prob(tape, bits, Ab);
      ad::Expr ratio = tape.exp(tape.sub(lp, tape.constant(blp)));
      ad::Expr obj = tape.min(tape.mul(ratio, tape.constant(adv)),
                              tape.mul(tape.clip(ratio, clo, chi),
                                       tape.constant(adv)));
      // Weighted sum rescaled so each minibatch estimates the full batch.
      ad::Expr loss = tape.mul_scalar(tape.sum(tape.mul(obj, tape.constant(w))),
                                      -static_cast<double>(T) / B);
      tape.backward(loss);
      pi.set_flat(state.adam.step(pi.flat(), pi.collect_grad(tape, bits),
                                  state.lr));
    }
  }

  rep.surrogate_after = clipped_surrogate(pi, batch, eps_gen);
  rep.measured_tv = ratio_tv(pi, batch);
  const Eigen::RowVectorXd wrow = batch.mixture_weight.transpose();
  rep.measured_kl = GaussianPolicy::mean_kl(policy, pi, batch.states, &wrow);
  if (rep.measured_tv > eps_gen / 2.0) state.lr /= (1.0 + cfg.alpha);
  rep.lr = state.lr;
  rep.accepted = true;
  return {std::move(pi), rep};
}

std::pair<GaussianPolicy, UpdateReport> ppo_update(const WeightedBatch& batch,
                                                   const GaussianPolicy& policy,
                                                   double eps, PpoState& state,
                                                   const PpoConfig& cfg) {
  return geppo_update(batch, policy, onpolicy_plan(batch.size(), eps), state,
                      cfg);
}

Eigen::VectorXd conjugate_gradient(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
    const Eigen::VectorXd& g, int max_iters, double tol) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd r = g;  // residual g - A x with x = 0
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  const double g_norm = std::sqrt(rs);
  if (g_norm == 0.0) return x;
  for (int it = 0; it < max_iters; ++it) {
    if (std::sqrt(rs) / g_norm <= tol) break;
    const Eigen::VectorXd Ap = matvec(p);
    const double pAp = p.dot(Ap);
    if (!std::isfinite(pAp) || pAp <= 0.0)
      throw NumericError("conjugate gradient: matvec lost positive definiteness");
    const double alpha = rs / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    const double rs_new = r.squaredNorm();
    if (!std::isfinite(rs_new))
      throw NumericError("conjugate gradient: non-finite residual");
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return x;
}

namespace {

// Shared trust-region machinery for the TRPO and VMPO families. `surrogate`
// must be cheap: it is re-evaluated once per backtracking step.
std::pair<GaussianPolicy, UpdateReport> natural_core(
    const WeightedBatch& batch, const GaussianPolicy& policy,
    const Eigen::VectorXd& g, double delta, const TrpoConfig& cfg,
    const std::function<double(const GaussianPolicy&)>& surrogate) {
  UpdateReport rep;
  rep.surrogate_before = surrogate(policy);
  const Eigen::RowVectorXd wrow = batch.mixture_weight.transpose();

  if (g.norm() < 1e-12) {
    rep.surrogate_after = rep.surrogate_before;
    rep.accepted = true;
    return {policy, rep};
  }

  auto matvec = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return policy.fisher_vector_product(batch.states, v, &wrow) +
           cfg.damping * v;
  };
  const Eigen::VectorXd v =
      conjugate_gradient(matvec, g, cfg.cg_iters, cfg.cg_tol);
  const double vFv = v.dot(matvec(v));
  if (vFv <= 0.0 || !std::isfinite(vFv)) {
    rep.surrogate_after = rep.surrogate_before;
    rep.accepted = false;
    return {policy, rep};
  }
  const double beta = std::sqrt(2.0 * delta / vFv);

  double factor = 1.0;
  for (int j = 0; j < cfg.max_backtracks; ++j, factor *= 0.5) {
    GaussianPolicy cand = policy;
    cand.set_flat(policy.flat() + beta * factor * v);
    const double kl =
        GaussianPolicy::mean_kl(policy, cand, batch.states, &wrow);
    const double surr = surrogate(cand);
    if (kl <= delta * (1.0 + 1e-6) && surr >= rep.surrogate_before) {
      rep.surrogate_after = surr;
      rep.measured_kl = kl;
      rep.measured_tv = ratio_tv(cand, batch);
      rep.step_scale = beta * factor;
      rep.accepted = true;
      return {std::move(cand), rep};
    }
  }
  rep.surrogate_after = rep.surrogate_before;
  rep.accepted = false;
  return {policy, rep};
}

// Gradient of a surrogate that is linear in log pi with fixed per-sample
// coefficients, evaluated at the current parameters.
Eigen::VectorXd logprob_grad(const GaussianPolicy& policy,
                             const WeightedBatch& batch,
                             const Eigen::ArrayXd& coeff) {
  ad::Tape tape;
  GaussianPolicy::TapeBits bits = policy.build_mean(tape, batch.states);
  ad::Expr lp = policy.build_log_prob(tape, bits, batch.actions);
  ad::Mat c(1, coeff.size());
  c.row(0) = coeff.transpose();
  tape.backward(tape.sum(tape.mul(lp, tape.constant(c))));
  return policy.collect_grad(tape, bits);
}

}  // namespace

std::pair<GaussianPolicy, UpdateReport> getrpo_update(const WeightedBatch& batch,
                                                      const GaussianPolicy& policy,
                                                      const MixturePlan& plan,
                                                      const TrpoConfig& cfg) {
  // First-order surrogate: sum_t w_t * (pi/pi_{k-i})_t * adv_t.
  auto surrogate = [&](const GaussianPolicy& pi) {
    const Eigen::RowVectorXd lp = pi.log_prob(batch.states, batch.actions);
    double s = 0.0;
    for (int t = 0; t < batch.size(); ++t)
      s += batch.mixture_weight[t] *
           std::exp(lp[t] - batch.behavior_logprob[t]) * batch.advantages[t];
    return s;
  };
  const Eigen::ArrayXd coeff = batch.mixture_weight.array() *
                               batch.ratio_center.array() *
                               batch.advantages.array();
  const Eigen::VectorXd g = logprob_grad(policy, batch, coeff);
  return natural_core(batch, policy, g, plan.delta_gen, cfg, surrogate);
}

std::pair<GaussianPolicy, UpdateReport> trpo_update(const WeightedBatch& batch,
                                                    const GaussianPolicy& policy,
                                                    double delta,
                                                    const TrpoConfig& cfg) {
  MixturePlan plan = onpolicy_plan(batch.size(), std::sqrt(2.0 * delta));
  plan.delta_gen = delta;
  return getrpo_update(batch, policy, plan, cfg);
}

VmpoWeights vmpo_weights(const Eigen::VectorXd& advantages, double delta,
                         const Eigen::VectorXd& sample_weights) {
  const int T = static_cast<int>(advantages.size());
  if (T == 0) throw ConfigError("vmpo weights: empty advantage vector");
  Eigen::ArrayXd p = sample_weights.size() == 0
                         ? Eigen::ArrayXd::Constant(T, 1.0 / T)
                         : Eigen::ArrayXd(sample_weights.array());
  if (p.size() != T) throw ConfigError("vmpo weights: weight length mismatch");

  // log Z(lambda) = logsumexp_t(log p_t + adv_t / lambda), skipping zero-mass
  // samples; the dual phi(lambda) = lambda*delta + lambda*log Z is convex.
  Eigen::ArrayXd logp(T);
  for (int t = 0; t < T; ++t)
    logp[t] = p[t] > 0.0 ? std::log(p[t])
                         : -std::numeric_limits<double>::infinity();
  auto log_z = [&](double lambda) {
    double hi = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < T; ++t)
      hi = std::max(hi, logp[t] + advantages[t] / lambda);
    double s = 0.0;
    for (int t = 0; t < T; ++t) {
      const double e = logp[t] + advantages[t] / lambda;
      if (std::isfinite(e)) s += std::exp(e - hi);
    }
    return hi + std::log(s);
  };
  auto dual = [&](double lambda) {
    return lambda * delta + lambda * log_z(lambda);
  };

  constexpr int kGrid = 64;
  const double lo0 = 1e-6, hi0 = 1e3;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = lo0 * std::pow(hi0 / lo0, i / double(kGrid - 1));
    const double d = dual(grid[i]);
    if (d < best_val) {
      best_val = d;
      best = i;
    }
  }
  if (best == kGrid - 1)
    throw NumericError("vmpo dual bracket failure: dual(" +
                       std::to_string(lo0) + ")=" + std::to_string(dual(lo0)) +
                       ", dual(" + std::to_string(hi0) + ")=" +
                       std::to_string(dual(hi0)));

  double a = grid[std::max(0, best - 1)];
  double b = grid[std::min(kGrid - 1, best + 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = dual(x1), f2 = dual(x2);
  while (b - a > 1e-8 * std::max(1.0, a)) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = dual(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = dual(x2);
    }
  }
  VmpoWeights out;
  out.lambda_star = (a + b) / 2.0;
  const double lz = log_z(out.lambda_star);
  out.w.resize(T);
  for (int t = 0; t < T; ++t)
    out.w[t] = std::exp(advantages[t] / out.lambda_star - lz);
  return out;
}

std::pair<GaussianPolicy, UpdateReport> gevmpo_update(const WeightedBatch& batch,
                                                      const GaussianPolicy& policy,
                                                      const MixturePlan& plan,
                                                      const TrpoConfig& cfg) {
  const Eigen::VectorXd sample_w =
      (batch.mixture_weight.array() * batch.ratio_center.array()).matrix();
  VmpoWeights vw = vmpo_weights(batch.advantages, plan.delta_gen, sample_w);
  // Maximum likelihood toward w with the w - 1 baseline; coefficients are
  // fixed at pi_k, so the objective is linear in log pi.
  const Eigen::ArrayXd coeff = sample_w.array() * (vw.w.array() - 1.0);
  auto surrogate = [&, coeff](const GaussianPolicy& pi) {
    const Eigen::RowVectorXd lp = pi.log_prob(batch.states, batch.actions);
    return (coeff * lp.transpose().array()).sum();
  };
  const Eigen::VectorXd g = logprob_grad(policy, batch, coeff);
  auto [pi, rep] = natural_core(batch, policy, g, plan.delta_gen, cfg, surrogate);
  rep.dual_temperature = vw.lambda_star;
  return {std::move(pi), rep};
}

std::pair<GaussianPolicy, UpdateReport> vmpo_update(const WeightedBatch& batch,
                                                    const GaussianPolicy& policy,
                                                    double delta,
                                                    const TrpoConfig& cfg) {
  MixturePlan plan = onpolicy_plan(batch.size(), std::sqrt(2.0 * delta));
  plan.delta_gen = delta;
  return gevmpo_update(batch, policy, plan, cfg);
}

}  // namespace gpi
