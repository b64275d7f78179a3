#include <cmath>

#include "doctest.h"
#include "policy.hpp"
#include "rng.hpp"

using gpi::GaussianPolicy;
using gpi::Rng;
using gpi::TabularPolicy;
using gpi::ValueFunction;

namespace {

Eigen::MatrixXd random_mat(int r, int c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

GaussianPolicy small_policy(Rng& rng, int obs = 2, int act = 2,
                            int hidden = 8) {
  GaussianPolicy p = GaussianPolicy::initialized(obs, act, rng, 0.0, hidden);
  // Randomize away from the near-zero init so tests see generic behavior.
  Eigen::VectorXd f = p.flat();
  for (int i = 0; i < f.size(); ++i) f[i] += 0.3 * rng.normal();
  p.set_flat(f);
  return p;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("flat parameter view round-trips bit for bit") {
  Rng rng(11);
  GaussianPolicy p = small_policy(rng);
  const Eigen::VectorXd f = p.flat();
  GaussianPolicy q(p.obs_dim(), p.act_dim(), 8);
  q.set_flat(f);
  CHECK((q.flat() - f).cwiseAbs().maxCoeff() == 0.0);
  ValueFunction v = ValueFunction::initialized(3, rng, 8);
  const Eigen::VectorXd vf = v.flat();
  ValueFunction w(3, 8);
  w.set_flat(vf);
  CHECK((w.flat() - vf).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standard normal at the mode") {
  // Zero mean output, log_std 0, action 0 in 1-D: -0.5 log(2 pi).
  GaussianPolicy p(1, 1, 8);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(p.param_count());
  p.set_flat(f);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 1);
  CHECK(p.log_prob(X, A)(0) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log_prob matches the direct density formula") {
  Rng rng(21);
  GaussianPolicy p = small_policy(rng);
  const Eigen::MatrixXd X = random_mat(2, 5, rng);
  const Eigen::MatrixXd A = random_mat(2, 5, rng);
  const Eigen::MatrixXd M = p.mean(X);
  const Eigen::VectorXd ls = p.effective_log_std();
  const Eigen::RowVectorXd lp = p.log_prob(X, A);
  for (int t = 0; t < 5; ++t) {
    double ref = 0.0;
    for (int d = 0; d < 2; ++d) {
      const double s = std::exp(ls[d]);
      const double z = (A(d, t) - M(d, t)) / s;
      ref += -0.5 * z * z - ls[d] - 0.5 * std::log(2.0 * M_PI);
    }
    CHECK(lp[t] == doctest::Approx(ref).epsilon(1e-12));
    CHECK(std::exp(lp[t]) > 0.0);
  }
}

TEST_CASE("fast log_prob equals the tape log_prob bit for bit") {
  Rng rng(31);
  GaussianPolicy p = small_policy(rng);
  const Eigen::MatrixXd X = random_mat(2, 7, rng);
  const Eigen::MatrixXd A = random_mat(2, 7, rng);
  const Eigen::RowVectorXd fast = p.log_prob(X, A);
  gpi::ad::Tape tape;
  GaussianPolicy::TapeBits bits = p.build_mean(tape, X);
  const gpi::ad::Mat taped = tape.value(p.build_log_prob(tape, bits, A));
  for (int t = 0; t < 7; ++t) CHECK(fast[t] == taped(0, t));
}

TEST_CASE("log_prob gradient matches finite differences") {
  Rng rng(41);
  GaussianPolicy p = small_policy(rng);
  const Eigen::MatrixXd X = random_mat(2, 3, rng);
  const Eigen::MatrixXd A = random_mat(2, 3, rng);

  gpi::ad::Tape tape;
  GaussianPolicy::TapeBits bits = p.build_mean(tape, X);
  tape.backward(tape.sum(p.build_log_prob(tape, bits, A)));
  const Eigen::VectorXd g = p.collect_grad(tape, bits);

  const double h = 1e-6;
  Eigen::VectorXd f = p.flat();
  for (int i = 0; i < f.size(); i += 7) {  // subsample for speed
    GaussianPolicy q = p;
    Eigen::VectorXd fp = f, fm = f;
    fp[i] += h;
    fm[i] -= h;
    q.set_flat(fp);
    const double up = q.log_prob(X, A).sum();
    q.set_flat(fm);
    const double um = q.log_prob(X, A).sum();
    const double fd = (up - um) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("sampling: determinism, degenerate noise, variance") {
  Rng rng(51);
  GaussianPolicy p = small_policy(rng);
  Eigen::VectorXd s(2);
  s << 0.3, -0.7;
  {
    Rng r1(99), r2(99);
    CHECK((p.sample(s, r1) - p.sample(s, r2)).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    GaussianPolicy tight = p;
    Eigen::VectorXd f = tight.flat();
    f.tail(2).setConstant(std::log(1e-9));
    tight.set_flat(f);
    Rng r(1);
    CHECK((tight.sample(s, r) - tight.mean(s).col(0)).cwiseAbs().maxCoeff() <
          1e-6);
  }
  {
    GaussianPolicy unit(1, 1, 8);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(unit.param_count());
    unit.set_flat(f);  // std = 1
    Eigen::VectorXd st(1);
    st << 0.0;
    Rng r(3);
    double m = 0.0, m2 = 0.0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
      const double a = unit.sample(st, r)[0];
      m += a;
      m2 += a * a;
    }
    m /= N;
    const double var = m2 / N - m * m;
    CHECK(std::abs(var - 1.0) < 0.05);
  }
}

TEST_CASE("closed-form KL: identity, 1-D shift, quadrature oracle") {
  Rng rng(61);
  GaussianPolicy p = small_policy(rng, 2, 1);
  const Eigen::MatrixXd X = random_mat(2, 4, rng);
  CHECK(GaussianPolicy::mean_kl(p, p, X) == doctest::Approx(0.0));

  // 1-D means 0 and 1, stds 1 -> KL = 0.5.
  GaussianPolicy a(1, 1, 8), b(1, 1, 8);
  Eigen::VectorXd fa = Eigen::VectorXd::Zero(a.param_count());
  a.set_flat(fa);
  Eigen::VectorXd fb = fa;
  // Shift the final bias of the mean head by 1 (last mlp block bias).
  fb[a.param_count() - 2] = 1.0;  // [mlp..., b3(last), log_std(1)]
  b.set_flat(fb);
  Eigen::MatrixXd X0 = Eigen::MatrixXd::Zero(1, 1);
  CHECK(GaussianPolicy::mean_kl(a, b, X0) == doctest::Approx(0.5).epsilon(1e-10));

  // Quadrature oracle in 1-D action space.
  GaussianPolicy q = small_policy(rng, 2, 1);
  double quad = 0.0;
  const Eigen::MatrixXd Mp = p.mean(X), Mq = q.mean(X);
  const double sp = std::exp(p.effective_log_std()[0]);
  const double sq = std::exp(q.effective_log_std()[0]);
  for (int t = 0; t < 4; ++t) {
    const double lo = Mp(0, t) - 12 * sp, hi = Mp(0, t) + 12 * sp;
    const int K = 20000;
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      const double x = lo + (hi - lo) * (k + 0.5) / K;
      const double zp = (x - Mp(0, t)) / sp, zq = (x - Mq(0, t)) / sq;
      const double logp = -0.5 * zp * zp - std::log(sp) - 0.5 * std::log(2 * M_PI);
      const double logq = -0.5 * zq * zq - std::log(sq) - 0.5 * std::log(2 * M_PI);
      acc += std::exp(logp) * (logp - logq);
    }
    quad += acc * (hi - lo) / K;
  }
  quad /= 4.0;
  CHECK(GaussianPolicy::mean_kl(p, q, X) == doctest::Approx(quad).epsilon(1e-3));
}

TEST_CASE("fisher-vector product matches the finite-difference KL Hessian") {
  Rng rng(71);
  GaussianPolicy p = small_policy(rng, 2, 1, 4);
  const Eigen::MatrixXd X = random_mat(2, 6, rng);
  Eigen::VectorXd v(p.param_count());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
  const Eigen::VectorXd fv = p.fisher_vector_product(X, v);

  // d/dt grad_theta KL(p_fixed || p_theta) at theta = p + t v.
  auto kl_grad = [&](const Eigen::VectorXd& params) {
    GaussianPolicy q = p;
    q.set_flat(params);
    const double h = 1e-5;
    Eigen::VectorXd g(params.size());
    for (int i = 0; i < params.size(); ++i) {
      Eigen::VectorXd pp = params, pm = params;
      pp[i] += h;
      pm[i] -= h;
      GaussianPolicy qp = p, qm = p;
      qp.set_flat(pp);
      qm.set_flat(pm);
      g[i] = (GaussianPolicy::mean_kl(p, qp, X) -
              GaussianPolicy::mean_kl(p, qm, X)) /
             (2 * h);
    }
    return g;
  };
  const double t = 1e-4;
  const Eigen::VectorXd fd =
      (kl_grad(p.flat() + t * v) - kl_grad(p.flat() - t * v)) / (2 * t);
  CHECK((fv - fd).norm() / fd.norm() < 1e-3);
}

TEST_CASE("tabular softmax rows") {
  TabularPolicy uniform(Eigen::MatrixXd::Zero(3, 4));
  const Eigen::MatrixXd pr = uniform.probs();
  CHECK((pr.array() - 0.25).abs().maxCoeff() < 1e-15);

  Rng rng(81);
  Eigen::MatrixXd logits = random_mat(3, 4, rng);
  TabularPolicy a(logits);
  Eigen::MatrixXd shifted = logits;
  shifted.row(1).array() += 100.0;  // shift invariance per row
  TabularPolicy b(shifted);
  CHECK((a.probs() - b.probs()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.probs().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("orthogonal-style init keeps hidden weights near-orthogonal") {
  Rng rng(91);
  GaussianPolicy p = GaussianPolicy::initialized(4, 2, rng, 0.0, 16);
  // First block: 16 x 4 weight; columns should be orthonormal.
  Eigen::Map<const Eigen::MatrixXd> W(p.flat().data(), 16, 4);
  const Eigen::MatrixXd gram = W.transpose() * W;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
}

}  // TEST_SUITE
