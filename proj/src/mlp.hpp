#ifndef GPI_MLP_HPP_
#define GPI_MLP_HPP_

#include <Eigen/Dense>
#include <vector>

#include "autodiff.hpp"
#include "rng.hpp"

namespace gpi {

// Two-hidden-layer tanh network with a linear head, parameters held as a
// single flat vector. The flat layout is fixed: [W1, b1, W2, b2, W3, b3],
// column-major within each block, so checkpoints and finite-difference
// probes address parameters unambiguously.
class Mlp {
 public:
  Mlp(int in_dim, int hidden_dim, int out_dim);

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  int hidden_dim() const { return hidden_; }
  int param_count() const { return total_; }

  // Scaled orthogonal-style init; the head is scaled by `head_scale`.
  Eigen::VectorXd init_params(Rng& rng, double head_scale) const;

  // Plain forward pass: X is (in x B), result (out x B).
  Eigen::MatrixXd forward(const Eigen::VectorXd& params,
                          const Eigen::MatrixXd& X) const;

  // Tape-backed forward pass. Leaves for all six blocks are created on the
  // tape and returned through `leaves` so callers can seed tangents and read
  // gradients. The output expression computes exactly the same arithmetic as
  // forward().
  ad::Expr build(ad::Tape& tape, const Eigen::VectorXd& params,
                 const Eigen::MatrixXd& X, std::vector<ad::Expr>& leaves) const;

  // Gather leaf gradients (in build() order) back into a flat vector.
  Eigen::VectorXd collect_grad(const ad::Tape& tape,
                               const std::vector<ad::Expr>& leaves) const;

  // Scatter a flat vector into per-block tangents and seed them on the tape.
  void seed_tangents(ad::Tape& tape, const std::vector<ad::Expr>& leaves,
                     const Eigen::VectorXd& flat) const;

  struct Block {
    int rows, cols, offset;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  Eigen::MatrixXd block_of(const Eigen::VectorXd& params, int b) const;

  int in_, hidden_, out_, total_;
  std::vector<Block> blocks_;
};

}  // namespace gpi

#endif  // GPI_MLP_HPP_
