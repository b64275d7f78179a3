#include "planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace gpi {

namespace {

constexpr double kFeasTol = 1e-9;

struct Candidate {
  Eigen::VectorXd nu;
  double sum_sq = 0.0;
  double mean_age1 = 0.0;
  double objective = std::numeric_limits<double>::infinity();
  bool valid = false;
};

Candidate evaluate(const Eigen::VectorXd& nu, int B, double ktilde,
                   double ttilde) {
  Candidate c;
  c.nu = nu.cwiseMax(0.0);
  double total = c.nu.sum();
  if (total <= 0.0) return c;
  c.nu /= total;
  c.sum_sq = c.nu.squaredNorm();
  c.mean_age1 = 0.0;
  for (int i = 0; i < c.nu.size(); ++i) c.mean_age1 += c.nu[i] * (i + 1);
  if (c.sum_sq > 1.0 / B + kFeasTol) return c;
  if (c.mean_age1 > B + kFeasTol) return c;
  c.objective = ktilde * c.sum_sq + ttilde * c.mean_age1;
  c.valid = true;
  return c;
}

// Builds nu_j = a - b*j for j = 1..M and rejects negative weights.
Eigen::VectorXd waterfill(double a, double b, int M) {
  Eigen::VectorXd nu(M);
  for (int j = 1; j <= M; ++j) {
    double w = a - b * j;
    if (w < -kFeasTol) return Eigen::VectorXd();
    nu[j - 1] = std::max(0.0, w);
  }
  return nu;
}

// Minimizes ktilde * sum nu^2 + ttilde * sum nu (i+1) over the Theorem 4
// feasible set. Every KKT point has the water-filling form nu_j = a - b*j
// (j = age + 1), so we enumerate the support size and the three active-set
// cases: no size constraint active, the mean-age constraint active, and the
// sum-of-squares constraint active. Smallest support wins ties.
Eigen::VectorXd solve_scaled(int B, double ktilde, double ttilde) {
  Candidate best;
  int best_support = 0;
  const int cap = 4 * B;
  for (int M = 1; M <= cap; ++M) {
    const double S1 = M * (M + 1) / 2.0;
    const double S2 = M * (M + 1) * (2 * M + 1) / 6.0;
    std::vector<std::pair<double, double>> ab;  // (a, b)
    // Neither size constraint active: b fixed by the objective slope.
    if (ktilde > 0.0) {
      double b = ttilde / (2.0 * ktilde);
      ab.emplace_back((1.0 + b * S1) / M, b);
    }
    // Mean-age constraint active: a*S1 - b*S2 = B and a*M - b*S1 = 1.
    {
      double det = S1 * S1 - M * S2;
      if (std::abs(det) > 1e-12) {
        double b = (M * B - S1) / det;
        ab.emplace_back((1.0 + b * S1) / M, b);
      }
    }
    // Sum-of-squares constraint active: sum nu^2 = 1/B fixes |b|.
    {
      double denom = S2 - S1 * S1 / M;
      double num = 1.0 / B - 1.0 / M;
      if (denom > 1e-12 && num >= 0.0) {
        double b = std::sqrt(num / denom);
        ab.emplace_back((1.0 + b * S1) / M, b);
      }
    }
    for (const auto& [a, b] : ab) {
      Eigen::VectorXd nu = waterfill(a, b, M);
      if (nu.size() == 0) continue;
      Candidate c = evaluate(nu, B, ktilde, ttilde);
      if (!c.valid) continue;
      if (c.objective < best.objective - 1e-12 ||
          (c.objective < best.objective + 1e-12 &&
           (best_support == 0 || M < best_support))) {
        best = c;
        best_support = M;
      }
    }
  }
  if (!best.valid) {
    // The enumeration is exhaustive for this problem class; keep a plain
    // projected-gradient pass as a safety net.
    Eigen::VectorXd nu = Eigen::VectorXd::Constant(B, 1.0 / B);
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd g(B);
      for (int i = 0; i < B; ++i)
        g[i] = 2.0 * ktilde * nu[i] + ttilde * (i + 1);
      nu -= 1e-3 * g;
      nu = nu.cwiseMax(0.0);
      double s = nu.sum();
      nu = s > 0 ? Eigen::VectorXd(nu / s)
                 : Eigen::VectorXd::Constant(B, 1.0 / B);
    }
    best = evaluate(nu, B, ktilde, ttilde);
    if (!best.valid) throw NumericError("mixture solve found no feasible point");
  }
  // Trim trailing zeros so support reflects nonzero weights only.
  int m = static_cast<int>(best.nu.size());
  while (m > 1 && best.nu[m - 1] <= 0.0) --m;
  return best.nu.head(m);
}

MixturePlan finish_plan(Eigen::VectorXd nu, int B, double kappa, int n,
                        double eps) {
  MixturePlan plan;
  plan.nu = std::move(nu);
  plan.support = static_cast<int>(plan.nu.size());
  plan.B = B;
  plan.n = n;
  plan.kappa = kappa;
  plan.eps = eps;
  plan.sum_sq = plan.nu.squaredNorm();
  plan.mean_age1 = 0.0;
  for (int i = 0; i < plan.support; ++i)
    plan.mean_age1 += plan.nu[i] * (i + 1);
  plan.eps_gen = eps / plan.mean_age1;
  plan.delta_gen = delta_gen_from(plan.eps_gen);
  plan.ess = n / plan.sum_sq;
  plan.tv_total = B * plan.eps_gen / 2.0;
  plan.validate();
  return plan;
}

}  // namespace

void MixturePlan::validate() const {
  if (B < 1 || n < 1) throw NumericError("mixture plan: B and n must be >= 1");
  if (support != nu.size() || support < 1)
    throw NumericError("mixture plan: support/nu mismatch");
  if (std::abs(nu.sum() - 1.0) > kFeasTol || nu.minCoeff() < -kFeasTol)
    throw NumericError("mixture plan: nu is not a distribution");
  if (sum_sq > 1.0 / B + kFeasTol)
    throw NumericError("mixture plan: sum nu^2 exceeds 1/B");
  if (mean_age1 > B + kFeasTol)
    throw NumericError("mixture plan: mean age exceeds B");
  if (ess < B * n * (1.0 - kFeasTol))
    throw NumericError("mixture plan: effective sample size below B*n");
  if (tv_total < eps / 2.0 * (1.0 - kFeasTol))
    throw NumericError("mixture plan: total TV below on-policy eps/2");
}

double eps_gen_from(const Eigen::VectorXd& nu, double eps) {
  double mean_age1 = 0.0;
  for (int i = 0; i < nu.size(); ++i) mean_age1 += nu[i] * (i + 1);
  return eps / mean_age1;
}

double delta_gen_from(double eps_gen) { return eps_gen * eps_gen / 2.0; }

MixturePlan solve_mixture(int B, double kappa, int n, double eps) {
  if (B < 1) throw ConfigError("B must be a positive integer");
  if (kappa < 0.0 || kappa > 1.0) throw ConfigError("kappa must lie in [0,1]");
  if (n < 1) throw ConfigError("n must be a positive integer");
  if (eps <= 0.0) throw ConfigError("eps must be positive");
  if (B == 1) return onpolicy_plan(n, eps);
  Eigen::VectorXd nu1 = solve_scaled(B, 1.0, 0.0);  // best effective sample size
  Eigen::VectorXd nu0 = solve_scaled(B, 0.0, 1.0);  // best total TV size
  if (kappa >= 1.0) return finish_plan(nu1, B, kappa, n, eps);
  if (kappa <= 0.0) return finish_plan(nu0, B, kappa, n, eps);
  auto mean_age1 = [](const Eigen::VectorXd& nu) {
    double s = 0.0;
    for (int i = 0; i < nu.size(); ++i) s += nu[i] * (i + 1);
    return s;
  };
  double c_ess = nu0.squaredNorm() - nu1.squaredNorm();
  double c_tv = mean_age1(nu1) - mean_age1(nu0);
  if (c_ess <= 0.0 || c_tv <= 0.0)
    throw NumericError("degenerate scaling coefficients in mixture solve");
  Eigen::VectorXd nu = solve_scaled(B, kappa / c_ess, (1.0 - kappa) / c_tv);
  return finish_plan(nu, B, kappa, n, eps);
}

MixturePlan uniform_plan(int B, int M, int n, double eps) {
  if (M < B || M > 2 * B - 1)
    throw ConfigError("uniform plan needs B <= M <= 2B-1");
  Eigen::VectorXd nu = Eigen::VectorXd::Constant(M, 1.0 / M);
  return finish_plan(nu, B, -1.0, n, eps);
}

MixturePlan onpolicy_plan(int n, double eps) {
  Eigen::VectorXd nu(1);
  nu[0] = 1.0;
  return finish_plan(nu, 1, -1.0, n, eps);
}

double adaptive_eps_gen(const GaussianPolicy& current,
                        const std::vector<GaussianPolicy>& priors,
                        const Eigen::VectorXd& nu, double eps,
                        const std::vector<Eigen::MatrixXd>& probe_states) {
  if (probe_states.empty()) throw ConfigError("adaptive radius: no probe states");
  if (static_cast<int>(priors.size()) < nu.size() ||
      static_cast<int>(probe_states.size()) < nu.size())
    throw ConfigError("adaptive radius: need one prior and probe set per weight");
  double drift = 0.0;
  for (int i = 0; i < nu.size(); ++i) {
    if (nu[i] <= 0.0) continue;
    drift += nu[i] * GaussianPolicy::mean_tv_pinsker(current, priors[i],
                                                     probe_states[i]);
  }
  return 2.0 * std::max(0.0, eps / 2.0 - drift);
}

}  // namespace gpi
