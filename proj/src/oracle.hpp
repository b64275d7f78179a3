#ifndef GPI_ORACLE_HPP_
#define GPI_ORACLE_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "env.hpp"
#include "policy.hpp"

namespace gpi {

// Policy improvement lower-bound evaluation on a finite MDP where every term
// is an exact sum.
struct BoundReport {
  double lhs = 0.0;        // J(pi) - J(pi_k)
  double surrogate = 0.0;  // importance-weighted expected advantage term
  double penalty = 0.0;    // TV-weighted worst-case correction
  double C_const = 0.0;    // max_s |E_{a~pi}[A^{pi_k}(s,a)]|
  double rhs = 0.0;        // surrogate - penalty
  double margin = 0.0;     // lhs - rhs
  bool holds = false;      // margin >= -1e-9
};

struct PolicyValues {
  Eigen::VectorXd V;
  Eigen::MatrixXd Q;  // states x actions
  Eigen::MatrixXd A;
  double J = 0.0;  // initial_dist . V
};

// Normalized discounted state visitation d = (1-gamma) rho0 + gamma P_pi' d,
// solved directly.
Eigen::VectorXd visitation(const TabularMdp& mdp, const TabularPolicy& pi);

PolicyValues values(const TabularMdp& mdp, const TabularPolicy& pi);

// Exact per-state TV and KL between two tabular policies.
Eigen::VectorXd state_tv(const TabularPolicy& p, const TabularPolicy& q);
Eigen::VectorXd state_kl(const TabularPolicy& p, const TabularPolicy& q);

// |J(pi) - J(pi_k) - (1/(1-gamma)) E_{s~d^pi, a~pi}[A^{pi_k}]|: the
// performance-difference identity evaluated on both sides.
double performance_difference_gap(const TabularMdp& mdp,
                                  const TabularPolicy& pi,
                                  const TabularPolicy& pi_k);

// On-policy lower bound with penalty coefficient 2*gamma*C/(1-gamma)^2.
BoundReport check_bound_onpolicy(const TabularMdp& mdp,
                                 const TabularPolicy& pi,
                                 const TabularPolicy& pi_k);

// Generalized bound over a mixture of reference policies. sequence[0] is
// pi_k and sequence[i] is pi_{k-i}; nu weighs ages 0..M-1.
BoundReport check_bound_generalized(const TabularMdp& mdp,
                                    const TabularPolicy& pi,
                                    const std::vector<TabularPolicy>& sequence,
                                    const Eigen::VectorXd& nu);

// TV(d^pi, d^ref) and its bound gamma/(1-gamma) * E_{s~d^ref}[TV per state].
struct VisitationTv {
  double tv = 0.0;
  double bound = 0.0;
  bool holds = false;
};
VisitationTv visitation_tv_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                                 const TabularPolicy& pi_ref);

// Mixture penalty expectation for a policy chain whose consecutive per-state
// TVs were constructed to be eps_gen/2: must come out <= eps/2. sequence[0]
// is the candidate pi_{k+1}, sequence[1+i] is pi_{k-i}.
struct Theorem3Report {
  double penalty = 0.0;  // E_{i~nu} E_{s~d^{pi_{k-i}}}[TV(pi_{k+1}, pi_{k-i})]
  double limit = 0.0;    // eps / 2
  bool holds = false;
};
Theorem3Report check_theorem3(const TabularMdp& mdp,
                              const std::vector<TabularPolicy>& sequence,
                              const Eigen::VectorXd& nu, double eps);

// Scales base logits along a direction until every state's TV from the base
// policy equals tv_target (bisection per state).
TabularPolicy perturb_to_tv(const TabularPolicy& base,
                            const Eigen::MatrixXd& direction, double tv_target);

// Full certification suite over seeded random instances; one line per check.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};
std::vector<CheckResult> verify_bounds_suite(std::uint64_t seed,
                                             int instances = 100);

}  // namespace gpi

#endif  // GPI_ORACLE_HPP_
