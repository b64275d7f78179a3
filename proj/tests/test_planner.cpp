#include <cmath>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "planner.hpp"
#include "policy.hpp"
#include "rng.hpp"

using namespace gpi;

namespace {

double objective(const Eigen::VectorXd& nu, double kappa, double c_ess,
                 double c_tv) {
  double sq = 0.0, ma = 0.0;
  for (int i = 0; i < nu.size(); ++i) {
    sq += nu[i] * nu[i];
    ma += nu[i] * (i + 1);
  }
  return kappa * sq / c_ess + (1.0 - kappa) * ma / c_tv;
}

bool feasible(const Eigen::VectorXd& nu, int B, double tol = 1e-9) {
  double s = 0.0, sq = 0.0, ma = 0.0;
  for (int i = 0; i < nu.size(); ++i) {
    if (nu[i] < -tol) return false;
    s += nu[i];
    sq += nu[i] * nu[i];
    ma += nu[i] * (i + 1);
  }
  return std::abs(s - 1.0) <= tol && sq <= 1.0 / B + tol && ma <= B + tol;
}

}  // namespace

TEST_SUITE("planner") {

TEST_CASE("on-policy plan is the degenerate point mass") {
  const MixturePlan p = onpolicy_plan(2048, 0.2);
  CHECK(p.B == 1);
  CHECK(p.support == 1);
  CHECK(p.nu.size() == 1);
  CHECK(p.nu[0] == 1.0);
  CHECK(p.eps_gen == 0.2);
  CHECK(p.ess == doctest::Approx(2048.0));
  CHECK(p.ess_gain_pct() == doctest::Approx(0.0));
  CHECK(p.tv_gain_pct() == doctest::Approx(0.0));
  p.validate();
}

TEST_CASE("B=1 optimization collapses to on-policy") {
  const MixturePlan p = solve_mixture(1, 0.5, 1024, 0.2);
  CHECK(p.support == 1);
  CHECK(p.nu[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("B=2 sample-efficiency extreme: the hand-solved KKT point") {
  const MixturePlan p = solve_mixture(2, 1.0, 1024, 0.2);
  REQUIRE(p.support == 4);
  CHECK(p.nu[0] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(p.nu[1] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(p.nu[2] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(p.nu[3] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(p.sum_sq == doctest::Approx(0.30).epsilon(1e-9));
  CHECK(p.ess_gain_pct() == doctest::Approx(100.0 / 0.6 - 100.0).epsilon(1e-6));
  // E[i+1] = 0.4*1 + 0.3*2 + 0.2*3 + 0.1*4 = 2.0 -> eps_gen = eps / 2.
  CHECK(p.mean_age1 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(p.eps_gen == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(p.delta_gen == doctest::Approx(0.005).epsilon(1e-9));
  p.validate();
}

TEST_CASE("B=2 drift extreme: the hand-solved boundary point") {
  const MixturePlan p = solve_mixture(2, 0.0, 1024, 0.2);
  REQUIRE(p.support == 3);
  // nu_j = a - b j with b = 1/sqrt(12), sum nu^2 = 1/2 active.
  const double b = 1.0 / std::sqrt(12.0);
  CHECK(p.nu[0] == doctest::Approx(1.0 / 3.0 + b).epsilon(1e-6));
  CHECK(p.nu[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK(p.nu[2] == doctest::Approx(1.0 / 3.0 - b).epsilon(1e-6));
  CHECK(p.nu[0] == doctest::Approx(0.62201).epsilon(1e-4));
  CHECK(p.nu[2] == doctest::Approx(0.04466).epsilon(1e-3));
  CHECK(p.sum_sq == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p.mean_age1 == doctest::Approx(2.0 - 2.0 * b).epsilon(1e-6));
  CHECK(p.tv_gain_pct() == doctest::Approx(100.0 * b / (1.0 - b)).epsilon(1e-6));
  CHECK(p.tv_gain_pct() == doctest::Approx(40.58).epsilon(1e-3));
  p.validate();
}

TEST_CASE("eps_gen and delta_gen worked examples") {
  Eigen::VectorXd nu(4);
  nu << 0.4, 0.3, 0.2, 0.1;
  CHECK(eps_gen_from(nu, 0.2) == doctest::Approx(0.1).epsilon(1e-12));
  Eigen::VectorXd uni = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  // E[i+1] = 2 for uniform over three ages.
  CHECK(eps_gen_from(uni, 0.2) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(delta_gen_from(0.2) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(delta_gen_from(0.1) == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("optimal plans beat random feasible mixtures") {
  // Scaling constants recovered from the plan's own extremes.
  Rng rng(21);
  for (int B : {2, 4, 8, 16}) {
    const MixturePlan e1 = solve_mixture(B, 1.0);
    const MixturePlan e0 = solve_mixture(B, 0.0);
    const double c_ess = e0.sum_sq - e1.sum_sq;
    const double c_tv = e1.mean_age1 - e0.mean_age1;
    REQUIRE(c_ess > 0.0);
    REQUIRE(c_tv > 0.0);
    for (double kappa : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const MixturePlan p = solve_mixture(B, kappa);
      CHECK(feasible(p.nu, B));
      const double opt = objective(p.nu, kappa, c_ess, c_tv);
      // Rejection-sample feasible points and verify none improves on opt.
      int tried = 0, attempts = 0;
      while (tried < 200 && ++attempts < 20000) {
        Eigen::VectorXd cand(2 * B);
        double s = 0.0;
        for (int i = 0; i < cand.size(); ++i) {
          cand[i] = -std::log(rng.uniform() + 1e-300);
          s += cand[i];
        }
        cand /= s;
        std::sort(cand.data(), cand.data() + cand.size(),
                  std::greater<double>());
        if (!feasible(cand, B)) continue;
        ++tried;
        CHECK(objective(cand, kappa, c_ess, c_tv) >= opt - 1e-9);
      }
    }
  }
}

TEST_CASE("gain profiles are monotone along the trade-off curve") {
  for (int B : {2, 8}) {
    double prev_sq = std::numeric_limits<double>::infinity();
    double prev_ma = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double kappa = i / 100.0;
      const MixturePlan p = solve_mixture(B, kappa);
      CHECK(p.sum_sq <= prev_sq + 1e-12);     // ESS improves with kappa
      CHECK(p.mean_age1 >= prev_ma - 1e-12);  // TV budget degrades
      CHECK(p.eps_gen <= p.eps + 1e-15);
      CHECK(p.support <= 4 * B - 1);  // the 4B cap never binds
      prev_sq = p.sum_sq;
      prev_ma = p.mean_age1;
    }
  }
}

TEST_CASE("uniform plans: feasibility window and worked numbers") {
  const MixturePlan u = uniform_plan(2, 3);
  CHECK(u.sum_sq == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(u.mean_age1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(u.eps_gen == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(u.ess_gain_pct() == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(u.tv_gain_pct() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(uniform_plan(2, 1), ConfigError);  // sum_sq = 1 > 1/B
  CHECK_THROWS_AS(uniform_plan(2, 4), ConfigError);  // mean age 2.5 > B
  uniform_plan(4, 4).validate();
  uniform_plan(4, 7).validate();
}

TEST_CASE("adaptive radius from measured drift") {
  Rng rng(31);
  const GaussianPolicy cur = GaussianPolicy::initialized(3, 1, rng, 0.0, 16);
  Eigen::MatrixXd probe(3, 32);
  for (int i = 0; i < probe.size(); ++i) probe.data()[i] = rng.normal();
  Eigen::VectorXd nu(2);
  nu << 0.6, 0.4;

  SUBCASE("identical priors recover the full radius") {
    const std::vector<GaussianPolicy> priors{cur, cur};
    const std::vector<Eigen::MatrixXd> probes{probe, probe};
    CHECK(adaptive_eps_gen(cur, priors, nu, 0.2, probes) ==
          doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("large drift exhausts the budget and clamps at zero") {
    GaussianPolicy far = cur;
    Eigen::VectorXd f = far.flat();
    f.tail(1)[0] += 10.0;  // widen log_std drastically
    far.set_flat(f);
    const std::vector<GaussianPolicy> priors{far, far};
    const std::vector<Eigen::MatrixXd> probes{probe, probe};
    CHECK(adaptive_eps_gen(cur, priors, nu, 0.2, probes) == 0.0);
  }
  SUBCASE("pure on-policy mixture keeps eps regardless of priors") {
    GaussianPolicy far = cur;
    Eigen::VectorXd f = far.flat();
    f.tail(1)[0] += 5.0;
    far.set_flat(f);
    Eigen::VectorXd point(1);
    point << 1.0;
    // Age 0 is the current policy: zero drift contribution.
    const std::vector<GaussianPolicy> priors{cur};
    const std::vector<Eigen::MatrixXd> probes{probe};
    CHECK(adaptive_eps_gen(cur, priors, point, 0.2, probes) ==
          doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("mismatched inputs raise") {
    const std::vector<GaussianPolicy> priors{cur};
    const std::vector<Eigen::MatrixXd> probes;
    CHECK_THROWS_AS(adaptive_eps_gen(cur, priors, nu, 0.2, probes),
                    ConfigError);
  }
}

TEST_CASE("invalid arguments raise ConfigError") {
  CHECK_THROWS_AS(solve_mixture(0, 0.5), ConfigError);
  CHECK_THROWS_AS(solve_mixture(2, -0.1), ConfigError);
  CHECK_THROWS_AS(solve_mixture(2, 1.1), ConfigError);
  CHECK_THROWS_AS(solve_mixture(2, 0.5, 0), ConfigError);
  CHECK_THROWS_AS(solve_mixture(2, 0.5, 1024, 0.0), ConfigError);
}

}  // TEST_SUITE
