#include "policy.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace gpi {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
}

GaussianPolicy::GaussianPolicy(int obs_dim, int act_dim, int hidden)
    : mlp_(obs_dim, hidden, act_dim),
      params_(Eigen::VectorXd::Zero(mlp_.param_count() + act_dim)) {}

GaussianPolicy GaussianPolicy::initialized(int obs_dim, int act_dim, Rng& rng,
                                           double init_log_std, int hidden) {
  GaussianPolicy p(obs_dim, act_dim, hidden);
  p.params_.head(p.mlp_.param_count()) = p.mlp_.init_params(rng, 0.01);
  p.params_.tail(act_dim).setConstant(init_log_std);
  return p;
}

void GaussianPolicy::set_flat(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) {
    throw ConfigError("policy: flat parameter size mismatch");
  }
  params_ = p;
}

Eigen::MatrixXd GaussianPolicy::mean(const Eigen::MatrixXd& X) const {
  if (X.rows() != obs_dim()) {
    throw ConfigError("policy: state dimension mismatch");
  }
  return mlp_.forward(params_.head(mlp_.param_count()), X);
}

Eigen::VectorXd GaussianPolicy::effective_log_std() const {
  return params_.tail(act_dim()).cwiseMax(kLogStdFloor);
}

Eigen::RowVectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& X,
                                            const Eigen::MatrixXd& A) const {
  if (A.rows() != act_dim() || A.cols() != X.cols()) {
    throw ConfigError("policy: action dimension mismatch");
  }
  const Eigen::MatrixXd M = mean(X);
  const Eigen::ArrayXd ls = effective_log_std().array();
  const Eigen::ArrayXd inv_sigma = (ls * -1.0).exp();
  // Mirrors the tape arithmetic in build_log_prob() bit for bit.
  Eigen::ArrayXXd z = (A.array() - M.array()) *
                      inv_sigma.matrix().replicate(1, X.cols()).array();
  Eigen::ArrayXXd term =
      (z * z) * -0.5 - ls.matrix().replicate(1, X.cols()).array() +
      (-kHalfLog2Pi);
  return term.colwise().sum().matrix();
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& state,
                                       Rng& rng) const {
  const Eigen::VectorXd m = mean(state);
  const Eigen::ArrayXd sigma = effective_log_std().array().exp();
  Eigen::VectorXd a(act_dim());
  for (int j = 0; j < act_dim(); ++j) a[j] = m[j] + sigma[j] * rng.normal();
  return a;
}

double GaussianPolicy::mean_kl(const GaussianPolicy& p,
                               const GaussianPolicy& q,
                               const Eigen::MatrixXd& X,
                               const Eigen::RowVectorXd* weights) {
  if (p.act_dim() != q.act_dim()) {
    throw ConfigError("policy: KL requires matching action dimensions");
  }
  const Eigen::ArrayXXd mp = p.mean(X).array();
  const Eigen::ArrayXXd mq = q.mean(X).array();
  const Eigen::ArrayXd lsp = p.effective_log_std().array();
  const Eigen::ArrayXd lsq = q.effective_log_std().array();
  const int B = static_cast<int>(X.cols());
  const Eigen::ArrayXd var_p = (2.0 * lsp).exp();
  const Eigen::ArrayXd inv_var_q = (-2.0 * lsq).exp();
  Eigen::ArrayXXd dmu2 = (mp - mq).square();
  Eigen::RowVectorXd per_state(B);
  for (int s = 0; s < B; ++s) {
    per_state[s] = ((lsq - lsp) +
                    0.5 * (var_p + dmu2.col(s)) * inv_var_q - 0.5)
                       .sum();
  }
  if (weights) return per_state.dot(*weights);
  return per_state.mean();
}

double GaussianPolicy::mean_tv_pinsker(const GaussianPolicy& p,
                                       const GaussianPolicy& q,
                                       const Eigen::MatrixXd& X) {
  const Eigen::ArrayXXd mp = p.mean(X).array();
  const Eigen::ArrayXXd mq = q.mean(X).array();
  const Eigen::ArrayXd lsp = p.effective_log_std().array();
  const Eigen::ArrayXd lsq = q.effective_log_std().array();
  const Eigen::ArrayXd var_p = (2.0 * lsp).exp();
  const Eigen::ArrayXd inv_var_q = (-2.0 * lsq).exp();
  double acc = 0.0;
  for (int s = 0; s < X.cols(); ++s) {
    const double kl = ((lsq - lsp) +
                       0.5 * (var_p + (mp.col(s) - mq.col(s)).square()) *
                           inv_var_q -
                       0.5)
                          .sum();
    acc += std::min(1.0, std::sqrt(std::max(0.0, kl) / 2.0));
  }
  return acc / static_cast<double>(X.cols());
}

GaussianPolicy::TapeBits GaussianPolicy::build_mean(
    ad::Tape& tape, const Eigen::MatrixXd& X) const {
  TapeBits bits;
  bits.mean = mlp_.build(tape, params_.head(mlp_.param_count()), X,
                         bits.mlp_leaves);
  bits.log_std_leaf = tape.leaf(params_.tail(act_dim()).array());
  bits.log_std = tape.clip(
      bits.log_std_leaf, ad::Mat::Constant(1, 1, kLogStdFloor),
      ad::Mat::Constant(1, 1, std::numeric_limits<double>::infinity()));
  return bits;
}

ad::Expr GaussianPolicy::build_log_prob(ad::Tape& tape, const TapeBits& bits,
                                        const Eigen::MatrixXd& A) const {
  const int B = static_cast<int>(A.cols());
  ad::Expr inv_sigma = tape.exp(tape.mul_scalar(bits.log_std, -1.0));
  ad::Expr z = tape.mul(tape.sub(tape.constant(A.array()), bits.mean),
                        tape.broadcast_cols(inv_sigma, B));
  ad::Expr term = tape.add_scalar(
      tape.sub(tape.mul_scalar(tape.square(z), -0.5),
               tape.broadcast_cols(bits.log_std, B)),
      -kHalfLog2Pi);
  return tape.sum_rows(term);
}

Eigen::VectorXd GaussianPolicy::collect_grad(const ad::Tape& tape,
                                             const TapeBits& bits) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(param_count());
  g.head(mlp_.param_count()) = mlp_.collect_grad(tape, bits.mlp_leaves);
  const ad::Mat& gls = tape.grad(bits.log_std_leaf);
  if (gls.size() > 0) g.tail(act_dim()) = gls.col(0).matrix();
  return g;
}

void GaussianPolicy::seed_tangents(ad::Tape& tape, const TapeBits& bits,
                                   const Eigen::VectorXd& flat_dir) const {
  mlp_.seed_tangents(tape, bits.mlp_leaves,
                     flat_dir.head(mlp_.param_count()));
  ad::Mat ls_tan = flat_dir.tail(act_dim()).array();
  tape.seed_tangent(bits.log_std_leaf, ls_tan);
}

Eigen::VectorXd GaussianPolicy::fisher_vector_product(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& v,
    const Eigen::RowVectorXd* weights) const {
  const int B = static_cast<int>(X.cols());
  ad::Tape tape;
  TapeBits bits = build_mean(tape, X);
  seed_tangents(tape, bits, v);
  ad::Mat mean_dot = tape.tangent(bits.mean);  // J_mu v

  Eigen::RowVectorXd w =
      weights ? *weights
              : Eigen::RowVectorXd::Constant(B, 1.0 / static_cast<double>(B));
  const Eigen::ArrayXd inv_var =
      (-2.0 * effective_log_std().array()).exp();

  // Cotangent G * (J v) on the mean block; the log_std block of the exact
  // Fisher is diagonal with entry 2 per dimension (cross terms vanish at
  // theta_k).
  ad::Mat seed = mean_dot;
  for (int s = 0; s < B; ++s) {
    seed.col(s) = mean_dot.col(s) * inv_var * w[s];
  }
  tape.backward_from(bits.mean, seed);
  Eigen::VectorXd out = collect_grad(tape, bits);
  out.tail(act_dim()) += 2.0 * v.tail(act_dim());
  return out;
}

ValueFunction::ValueFunction(int obs_dim, int hidden)
    : mlp_(obs_dim, hidden, 1),
      params_(Eigen::VectorXd::Zero(mlp_.param_count())) {}

ValueFunction ValueFunction::initialized(int obs_dim, Rng& rng, int hidden) {
  ValueFunction v(obs_dim, hidden);
  v.params_ = v.mlp_.init_params(rng, 1.0);
  return v;
}

void ValueFunction::set_flat(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) {
    throw ConfigError("value: flat parameter size mismatch");
  }
  params_ = p;
}

Eigen::RowVectorXd ValueFunction::values(const Eigen::MatrixXd& X) const {
  return mlp_.forward(params_, X).row(0);
}

double ValueFunction::value(const Eigen::VectorXd& x) const {
  return mlp_.forward(params_, x)(0, 0);
}

Eigen::MatrixXd TabularPolicy::probs() const {
  Eigen::MatrixXd p(logits_.rows(), logits_.cols());
  for (int s = 0; s < logits_.rows(); ++s) {
    const Eigen::ArrayXd row = logits_.row(s).array();
    const Eigen::ArrayXd shifted = (row - row.maxCoeff()).exp();
    p.row(s) = (shifted / shifted.sum()).matrix();
  }
  return p;
}

}  // namespace gpi
