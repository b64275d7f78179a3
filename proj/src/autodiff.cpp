#include "autodiff.hpp"

#include <utility>

namespace gpi::ad {

Expr Tape::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return Expr{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_same_shape(const Mat& a, const Mat& b,
                            const char* where) const {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw NumericError(std::string("autodiff: shape mismatch in ") + where);
  }
}

Expr Tape::leaf(const Mat& value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = value;
  return push(std::move(n));
}

Expr Tape::constant(const Mat& value) {
  Node n;
  n.op = Op::kConst;
  n.value = value;
  return push(std::move(n));
}

Expr Tape::affine(Expr W, Expr x, Expr b) {
  const Mat& w = nodes_[W.id].value;
  const Mat& xv = nodes_[x.id].value;
  const Mat& bv = nodes_[b.id].value;
  if (w.cols() != xv.rows() || bv.rows() != w.rows() || bv.cols() != 1) {
    throw NumericError("autodiff: shape mismatch in affine");
  }
  Node n;
  n.op = Op::kAffine;
  n.a = W.id;
  n.b = x.id;
  n.c = b.id;
  n.value = ((w.matrix() * xv.matrix()).colwise() + bv.matrix().col(0)).array();
  return push(std::move(n));
}

#define GPI_UNARY(NAME, OP, EXPR)               \
  Expr Tape::NAME(Expr x) {                     \
    Node n;                                     \
    n.op = Op::OP;                              \
    n.a = x.id;                                 \
    const Mat& v = nodes_[x.id].value;          \
    n.value = (EXPR);                           \
    return push(std::move(n));                  \
  }

GPI_UNARY(tanh, kTanh, v.tanh())
GPI_UNARY(exp, kExp, v.exp())
GPI_UNARY(log, kLog, v.log())
GPI_UNARY(square, kSquare, v * v)
#undef GPI_UNARY

#define GPI_BINARY(NAME, OP, EXPR)                          \
  Expr Tape::NAME(Expr a, Expr b) {                         \
    const Mat& av = nodes_[a.id].value;                     \
    const Mat& bv = nodes_[b.id].value;                     \
    check_same_shape(av, bv, #NAME);                        \
    Node n;                                                 \
    n.op = Op::OP;                                          \
    n.a = a.id;                                             \
    n.b = b.id;                                             \
    n.value = (EXPR);                                       \
    return push(std::move(n));                              \
  }

GPI_BINARY(add, kAdd, av + bv)
GPI_BINARY(sub, kSub, av - bv)
GPI_BINARY(mul, kMul, av * bv)
GPI_BINARY(div, kDiv, av / bv)
GPI_BINARY(min, kMin, av.min(bv))
#undef GPI_BINARY

Expr Tape::add_scalar(Expr a, double c) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = a.id;
  n.scalar = c;
  n.value = nodes_[a.id].value + c;
  return push(std::move(n));
}

Expr Tape::mul_scalar(Expr a, double c) {
  Node n;
  n.op = Op::kMulScalar;
  n.a = a.id;
  n.scalar = c;
  n.value = nodes_[a.id].value * c;
  return push(std::move(n));
}

Expr Tape::clip(Expr x, const Mat& lo, const Mat& hi) {
  const Mat& v = nodes_[x.id].value;
  const Mat l = (lo.size() == 1) ? Mat::Constant(v.rows(), v.cols(), lo(0, 0))
                                 : lo;
  const Mat h = (hi.size() == 1) ? Mat::Constant(v.rows(), v.cols(), hi(0, 0))
                                 : hi;
  check_same_shape(v, l, "clip");
  check_same_shape(v, h, "clip");
  Node n;
  n.op = Op::kClip;
  n.a = x.id;
  n.lo = l;
  n.hi = h;
  n.value = v.max(l).min(h);
  return push(std::move(n));
}

Expr Tape::broadcast_cols(Expr v, int cols) {
  const Mat& val = nodes_[v.id].value;
  if (val.cols() != 1) {
    throw NumericError("autodiff: broadcast_cols expects a column vector");
  }
  Node n;
  n.op = Op::kBroadcastCols;
  n.a = v.id;
  n.value = val.replicate(1, cols);
  return push(std::move(n));
}

Expr Tape::sum_rows(Expr x) {
  Node n;
  n.op = Op::kSumRows;
  n.a = x.id;
  n.value = nodes_[x.id].value.colwise().sum();
  return push(std::move(n));
}

Expr Tape::sum(Expr x) {
  Node n;
  n.op = Op::kSum;
  n.a = x.id;
  n.value = Mat::Constant(1, 1, nodes_[x.id].value.sum());
  return push(std::move(n));
}

Mat& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
}

void Tape::backward(Expr scalar_out) {
  const Mat& v = nodes_[scalar_out.id].value;
  if (v.size() != 1) {
    throw NumericError("autodiff: backward expects a scalar output");
  }
  backward_from(scalar_out, Mat::Constant(1, 1, 1.0));
}

void Tape::backward_from(Expr out, const Mat& cotangent) {
  check_same_shape(nodes_[out.id].value, cotangent, "backward_from");
  // Propagate only this call's cotangent; grads from earlier backward
  // calls are stashed and re-added so repeated calls accumulate linearly.
  std::vector<std::pair<int, Mat>> stash;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (nodes_[i].has_grad) {
      stash.emplace_back(i, std::move(nodes_[i].grad));
      nodes_[i].has_grad = false;
      nodes_[i].grad.resize(0, 0);
    }
  }
  grad_ref(out.id) += cotangent;
  run_backward(out.id);
  for (auto& [i, g] : stash) grad_ref(i) += g;
}

void Tape::run_backward(int start) {
  for (int i = start; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kAffine: {
        const Mat& w = nodes_[n.a].value;
        const Mat& x = nodes_[n.b].value;
        grad_ref(n.a) += (g.matrix() * x.matrix().transpose()).array();
        grad_ref(n.b) += (w.matrix().transpose() * g.matrix()).array();
        grad_ref(n.c) += g.rowwise().sum();
        break;
      }
      case Op::kTanh:
        grad_ref(n.a) += g * (1.0 - n.value * n.value);
        break;
      case Op::kExp:
        grad_ref(n.a) += g * n.value;
        break;
      case Op::kLog:
        grad_ref(n.a) += g / nodes_[n.a].value;
        break;
      case Op::kSquare:
        grad_ref(n.a) += g * 2.0 * nodes_[n.a].value;
        break;
      case Op::kAdd:
        grad_ref(n.a) += g;
        grad_ref(n.b) += g;
        break;
      case Op::kSub:
        grad_ref(n.a) += g;
        grad_ref(n.b) -= g;
        break;
      case Op::kMul:
        grad_ref(n.a) += g * nodes_[n.b].value;
        grad_ref(n.b) += g * nodes_[n.a].value;
        break;
      case Op::kDiv: {
        const Mat& bv = nodes_[n.b].value;
        grad_ref(n.a) += g / bv;
        grad_ref(n.b) -= g * nodes_[n.a].value / (bv * bv);
        break;
      }
      case Op::kAddScalar:
        grad_ref(n.a) += g;
        break;
      case Op::kMulScalar:
        grad_ref(n.a) += g * n.scalar;
        break;
      case Op::kMin: {
        const Mat& av = nodes_[n.a].value;
        const Mat& bv = nodes_[n.b].value;
        const Mat take_a = (av <= bv).cast<double>();
        grad_ref(n.a) += g * take_a;
        grad_ref(n.b) += g * (1.0 - take_a);
        break;
      }
      case Op::kClip: {
        const Mat& xv = nodes_[n.a].value;
        // Zero subgradient outside the active range.
        const Mat inside =
            ((xv >= n.lo) && (xv <= n.hi)).cast<double>();
        grad_ref(n.a) += g * inside;
        break;
      }
      case Op::kBroadcastCols:
        grad_ref(n.a) += g.rowwise().sum();
        break;
      case Op::kSumRows: {
        Mat& ga = grad_ref(n.a);
        ga += g.replicate(ga.rows(), 1);
        break;
      }
      case Op::kSum: {
        Mat& ga = grad_ref(n.a);
        ga += Mat::Constant(ga.rows(), ga.cols(), g(0, 0));
        break;
      }
    }
  }
}

const Mat& Tape::grad(Expr leaf_expr) const {
  const Node& n = nodes_[leaf_expr.id];
  if (!n.has_grad) {
    static const Mat kEmpty;
    return kEmpty;
  }
  return n.grad;
}

void Tape::zero_tangent() {
  tangents_.clear();
  tangent_set_.clear();
  tangent_seeded_ = false;
}

void Tape::seed_tangent(Expr leaf_expr, const Mat& tan) {
  if (nodes_[leaf_expr.id].op != Op::kLeaf) {
    throw NumericError("autodiff: tangents can only be seeded on leaves");
  }
  check_same_shape(nodes_[leaf_expr.id].value, tan, "seed_tangent");
  if (tangents_.size() != nodes_.size()) {
    tangents_.assign(nodes_.size(), Mat());
    tangent_set_.assign(nodes_.size(), false);
  }
  tangents_[leaf_expr.id] = tan;
  tangent_set_[leaf_expr.id] = true;
  tangent_seeded_ = true;
}

Mat Tape::tangent(Expr out) {
  if (!tangent_seeded_) {
    throw NumericError("autodiff: no tangent seeded");
  }
  if (tangents_.size() != nodes_.size()) {
    tangents_.resize(nodes_.size());
    tangent_set_.resize(nodes_.size(), false);
  }
  for (int i = 0; i <= out.id; ++i) {
    Node& n = nodes_[i];
    auto tan_of = [&](int id) -> Mat {
      if (tangent_set_[id]) return tangents_[id];
      return Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    };
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        if (!tangent_set_[i]) {
          tangents_[i] = Mat::Zero(n.value.rows(), n.value.cols());
          tangent_set_[i] = true;
        }
        break;
      case Op::kAffine: {
        const Mat tw = tan_of(n.a), tx = tan_of(n.b), tb = tan_of(n.c);
        tangents_[i] =
            ((tw.matrix() * nodes_[n.b].value.matrix() +
              nodes_[n.a].value.matrix() * tx.matrix())
                 .colwise() +
             tb.matrix().col(0))
                .array();
        tangent_set_[i] = true;
        break;
      }
      case Op::kTanh:
        tangents_[i] = tan_of(n.a) * (1.0 - n.value * n.value);
        tangent_set_[i] = true;
        break;
      case Op::kAdd:
        tangents_[i] = tan_of(n.a) + tan_of(n.b);
        tangent_set_[i] = true;
        break;
      case Op::kSub:
        tangents_[i] = tan_of(n.a) - tan_of(n.b);
        tangent_set_[i] = true;
        break;
      case Op::kMulScalar:
        tangents_[i] = tan_of(n.a) * n.scalar;
        tangent_set_[i] = true;
        break;
      case Op::kAddScalar:
        tangents_[i] = tan_of(n.a);
        tangent_set_[i] = true;
        break;
      case Op::kBroadcastCols:
        tangents_[i] = tan_of(n.a).replicate(1, n.value.cols());
        tangent_set_[i] = true;
        break;
      case Op::kSumRows:
        tangents_[i] = tan_of(n.a).colwise().sum();
        tangent_set_[i] = true;
        break;
      case Op::kSum:
        tangents_[i] = Mat::Constant(1, 1, tan_of(n.a).sum());
        tangent_set_[i] = true;
        break;
      default:
        throw NumericError(
            "autodiff: primitive has no forward-mode rule on this path");
    }
  }
  return tangents_[out.id];
}

}  // namespace gpi::ad
