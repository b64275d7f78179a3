#include "mlp.hpp"

namespace gpi {

Mlp::Mlp(int in_dim, int hidden_dim, int out_dim)
    : in_(in_dim), hidden_(hidden_dim), out_(out_dim) {
  const int dims[4] = {in_, hidden_, hidden_, out_};
  int offset = 0;
  for (int l = 0; l < 3; ++l) {
    blocks_.push_back({dims[l + 1], dims[l], offset});  // W
    offset += dims[l + 1] * dims[l];
    blocks_.push_back({dims[l + 1], 1, offset});  // b
    offset += dims[l + 1];
  }
  total_ = offset;
}

namespace {

// Orthogonal rows/columns via QR of a Gaussian matrix, with the usual sign
// fix so the factorization is unique.
Eigen::MatrixXd orthogonal_init(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  Eigen::MatrixXd g(big, std::min(rows, cols));
  for (int j = 0; j < g.cols(); ++j)
    for (int i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, g.cols());
  Eigen::MatrixXd r = qr.matrixQR().topRows(g.cols()).triangularView<Eigen::Upper>();
  for (int j = 0; j < g.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  Eigen::MatrixXd w = (rows >= cols) ? q : Eigen::MatrixXd(q.transpose());
  return gain * w;
}

}  // namespace

Eigen::VectorXd Mlp::init_params(Rng& rng, double head_scale) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(total_);
  const int dims[4] = {in_, hidden_, hidden_, out_};
  for (int l = 0; l < 3; ++l) {
    const double gain = (l == 2) ? head_scale : 1.0;
    Eigen::MatrixXd w = orthogonal_init(dims[l + 1], dims[l], gain, rng);
    const Block& blk = blocks_[2 * l];
    for (int j = 0; j < blk.cols; ++j)
      for (int i = 0; i < blk.rows; ++i)
        p[blk.offset + j * blk.rows + i] = w(i, j);
    // biases stay zero
  }
  return p;
}

Eigen::MatrixXd Mlp::block_of(const Eigen::VectorXd& params, int b) const {
  const Block& blk = blocks_[b];
  return Eigen::Map<const Eigen::MatrixXd>(params.data() + blk.offset,
                                           blk.rows, blk.cols);
}

Eigen::MatrixXd Mlp::forward(const Eigen::VectorXd& params,
                             const Eigen::MatrixXd& X) const {
  // Evaluate column by column so each output depends only on its own input:
  // batched and single-state evaluations then agree bitwise, which the
  // on-policy reduction of the off-policy estimators relies on.
  const Eigen::MatrixXd w1 = block_of(params, 0), b1 = block_of(params, 1);
  const Eigen::MatrixXd w2 = block_of(params, 2), b2 = block_of(params, 3);
  const Eigen::MatrixXd w3 = block_of(params, 4), b3 = block_of(params, 5);
  Eigen::MatrixXd out(w3.rows(), X.cols());
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    const Eigen::VectorXd h1 =
        (w1 * X.col(t) + b1.col(0)).array().tanh().matrix();
    const Eigen::VectorXd h2 =
        (w2 * h1 + b2.col(0)).array().tanh().matrix();
    out.col(t) = w3 * h2 + b3.col(0);
  }
  return out;
}

ad::Expr Mlp::build(ad::Tape& tape, const Eigen::VectorXd& params,
                    const Eigen::MatrixXd& X,
                    std::vector<ad::Expr>& leaves) const {
  leaves.clear();
  for (int b = 0; b < 6; ++b) leaves.push_back(tape.leaf(block_of(params, b)));
  ad::Expr x = tape.constant(X.array());
  ad::Expr h1 = tape.tanh(tape.affine(leaves[0], x, leaves[1]));
  ad::Expr h2 = tape.tanh(tape.affine(leaves[2], h1, leaves[3]));
  return tape.affine(leaves[4], h2, leaves[5]);
}

Eigen::VectorXd Mlp::collect_grad(const ad::Tape& tape,
                                  const std::vector<ad::Expr>& leaves) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(total_);
  for (int b = 0; b < 6; ++b) {
    const ad::Mat& gb = tape.grad(leaves[b]);
    if (gb.size() == 0) continue;
    const Block& blk = blocks_[b];
    for (int j = 0; j < blk.cols; ++j)
      for (int i = 0; i < blk.rows; ++i)
        g[blk.offset + j * blk.rows + i] = gb(i, j);
  }
  return g;
}

void Mlp::seed_tangents(ad::Tape& tape, const std::vector<ad::Expr>& leaves,
                        const Eigen::VectorXd& flat) const {
  for (int b = 0; b < 6; ++b) {
    const Block& blk = blocks_[b];
    ad::Mat t = Eigen::Map<const Eigen::MatrixXd>(flat.data() + blk.offset,
                                                  blk.rows, blk.cols)
                    .array();
    tape.seed_tangent(leaves[b], t);
  }
}

}  // namespace gpi
