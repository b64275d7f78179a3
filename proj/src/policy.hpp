#ifndef GPI_POLICY_HPP_
#define GPI_POLICY_HPP_

#include <Eigen/Dense>
#include <vector>

#include "autodiff.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace gpi {

// Diagonal Gaussian policy: a tanh MLP for the state-conditional mean and a
// state-independent log standard deviation per action dimension. Parameters
// live in one flat vector [mlp blocks..., log_std]; snapshots are value
// objects and safe to share immutably.
class GaussianPolicy {
 public:
  static constexpr double kLogStdFloor = -20.0;

  GaussianPolicy(int obs_dim, int act_dim, int hidden = 64);

  // Orthogonal-style init with the mean head scaled by 0.01 and
  // log_std = init_log_std everywhere.
  static GaussianPolicy initialized(int obs_dim, int act_dim, Rng& rng,
                                    double init_log_std = 0.0, int hidden = 64);

  int obs_dim() const { return mlp_.in_dim(); }
  int act_dim() const { return mlp_.out_dim(); }
  int param_count() const { return static_cast<int>(params_.size()); }

  const Eigen::VectorXd& flat() const { return params_; }
  void set_flat(const Eigen::VectorXd& p);

  Eigen::MatrixXd mean(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd effective_log_std() const;  // floor applied

  // Exact diagonal-Gaussian log-density of each column of A under the policy
  // at each column of X.
  Eigen::RowVectorXd log_prob(const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& A) const;

  Eigen::VectorXd sample(const Eigen::VectorXd& state, Rng& rng) const;

  // Batch-averaged closed-form KL(p || q); optional per-state weights must
  // sum to 1.
  static double mean_kl(const GaussianPolicy& p, const GaussianPolicy& q,
                        const Eigen::MatrixXd& X,
                        const Eigen::RowVectorXd* weights = nullptr);

  // Mean per-state TV upper estimate min(1, sqrt(KL/2)) between p and q.
  static double mean_tv_pinsker(const GaussianPolicy& p,
                                const GaussianPolicy& q,
                                const Eigen::MatrixXd& X);

  // --- tape construction for updaters ---
  struct TapeBits {
    std::vector<ad::Expr> mlp_leaves;
    ad::Expr log_std_leaf;
    ad::Expr log_std;  // floored
    ad::Expr mean;
  };

  // Mean path first: nodes up to `mean` support forward-mode tangents.
  TapeBits build_mean(ad::Tape& tape, const Eigen::MatrixXd& X) const;
  ad::Expr build_log_prob(ad::Tape& tape, const TapeBits& bits,
                          const Eigen::MatrixXd& A) const;

  // Flat gradient (mlp blocks + log_std) after a backward pass.
  Eigen::VectorXd collect_grad(const ad::Tape& tape,
                               const TapeBits& bits) const;
  void seed_tangents(ad::Tape& tape, const TapeBits& bits,
                     const Eigen::VectorXd& flat_dir) const;

  // Exact Fisher-vector product of the batch-averaged forward KL
  // KL(self || pi_theta) at theta = self, computed as J' G J v with the
  // Gauss-Newton blocks 1/sigma^2 (mean) and 2 (log_std). Optional per-state
  // weights must sum to 1.
  Eigen::VectorXd fisher_vector_product(
      const Eigen::MatrixXd& X, const Eigen::VectorXd& v,
      const Eigen::RowVectorXd* weights = nullptr) const;

  const Mlp& mlp() const { return mlp_; }

 private:
  Mlp mlp_;
  Eigen::VectorXd params_;
};

// Value function: same MLP architecture with a scalar head.
class ValueFunction {
 public:
  ValueFunction(int obs_dim, int hidden = 64);
  static ValueFunction initialized(int obs_dim, Rng& rng, int hidden = 64);

  int param_count() const { return static_cast<int>(params_.size()); }
  const Eigen::VectorXd& flat() const { return params_; }
  void set_flat(const Eigen::VectorXd& p);

  Eigen::RowVectorXd values(const Eigen::MatrixXd& X) const;
  double value(const Eigen::VectorXd& x) const;

  const Mlp& mlp() const { return mlp_; }

 private:
  Mlp mlp_;
  Eigen::VectorXd params_;
};

// Softmax policy over a finite MDP, exact by construction.
class TabularPolicy {
 public:
  explicit TabularPolicy(Eigen::MatrixXd logits) : logits_(std::move(logits)) {}

  int num_states() const { return static_cast<int>(logits_.rows()); }
  int num_actions() const { return static_cast<int>(logits_.cols()); }
  const Eigen::MatrixXd& logits() const { return logits_; }

  // Row-stochastic action distributions.
  Eigen::MatrixXd probs() const;

 private:
  Eigen::MatrixXd logits_;
};

}  // namespace gpi

#endif  // GPI_POLICY_HPP_
