#ifndef GPI_AUTODIFF_HPP_
#define GPI_AUTODIFF_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "errors.hpp"

namespace gpi::ad {

using Mat = Eigen::ArrayXXd;

// Handle into a Tape. Valid only for the tape that produced it.
struct Expr {
  int id = -1;
};

// Minimal reverse-mode engine over dense arrays. The primitive set is exactly
// what the policy and value updates need: affine maps, tanh, exp, log,
// square, elementwise arithmetic, min, clip, column broadcast and reductions.
// Values are evaluated eagerly at construction; backward() accumulates
// gradients into leaves; forward-mode tangents are supported for the subset
// of primitives used on the network mean path (affine, tanh), which is what
// Fisher-vector products require.
class Tape {
 public:
  Expr leaf(const Mat& value);
  Expr constant(const Mat& value);
  Expr constant_scalar(double v) { return constant(Mat::Constant(1, 1, v)); }

  // W (r x k) * x (k x B) + b (r x 1, broadcast over columns).
  Expr affine(Expr W, Expr x, Expr b);

  Expr tanh(Expr x);
  Expr exp(Expr x);
  Expr log(Expr x);
  Expr square(Expr x);
  Expr neg(Expr x) { return mul_scalar(x, -1.0); }

  Expr add(Expr a, Expr b);
  Expr sub(Expr a, Expr b);
  Expr mul(Expr a, Expr b);
  Expr div(Expr a, Expr b);
  Expr add_scalar(Expr a, double c);
  Expr mul_scalar(Expr a, double c);

  // Elementwise minimum of two same-shape expressions. Subgradient follows
  // the active branch; ties send the gradient to the first argument.
  Expr min(Expr a, Expr b);

  // Elementwise clip against constant bounds (same shape as x or 1x1).
  Expr clip(Expr x, const Mat& lo, const Mat& hi);

  // Replicate an (r x 1) column across `cols` columns.
  Expr broadcast_cols(Expr v, int cols);

  // Sum over rows: (r x B) -> (1 x B).
  Expr sum_rows(Expr x);

  // Sum of all entries -> (1 x 1).
  Expr sum(Expr x);

  const Mat& value(Expr e) const { return nodes_[e.id].value; }

  // Reverse pass from a scalar output (seed 1) or from any node with an
  // explicit cotangent. Leaf gradients accumulate across calls until
  // zero_grad().
  void backward(Expr scalar_out);
  void backward_from(Expr out, const Mat& cotangent);
  void zero_grad();
  const Mat& grad(Expr leaf_expr) const;

  // Forward-mode: seed tangents on leaves, then propagate through the graph.
  // Unsupported primitives on a tangent path raise NumericError.
  void zero_tangent();
  void seed_tangent(Expr leaf_expr, const Mat& tangent);
  Mat tangent(Expr out);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kLeaf,
    kConst,
    kAffine,
    kTanh,
    kExp,
    kLog,
    kSquare,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kAddScalar,
    kMulScalar,
    kMin,
    kClip,
    kBroadcastCols,
    kSumRows,
    kSum,
  };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;  // parents
    Mat value;
    Mat grad;     // same shape as value once touched
    Mat lo, hi;   // clip bounds
    double scalar = 0.0;
    bool has_grad = false;
  };

  Expr push(Node&& n);
  void check_same_shape(const Mat& a, const Mat& b, const char* where) const;
  void run_backward(int start);
  Mat& grad_ref(int id);

  std::vector<Node> nodes_;
  std::vector<Mat> tangents_;       // aligned with nodes_ when forward-mode runs
  std::vector<bool> tangent_set_;   // seeded leaves
  bool tangent_seeded_ = false;
};

}  // namespace gpi::ad

#endif  // GPI_AUTODIFF_HPP_
