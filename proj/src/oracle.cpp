#include "oracle.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "planner.hpp"
#include "rng.hpp"

namespace gpi {

namespace {

Eigen::MatrixXd policy_transition(const TabularMdp& mdp,
                                  const TabularPolicy& pi) {
  const Eigen::MatrixXd probs = pi.probs();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a)
    P += probs.col(a).asDiagonal() * mdp.transition[a];
  return P;
}

Eigen::VectorXd policy_reward(const TabularMdp& mdp, const TabularPolicy& pi) {
  return (pi.probs().array() * mdp.reward.array()).rowwise().sum().matrix();
}

}  // namespace

Eigen::VectorXd visitation(const TabularMdp& mdp, const TabularPolicy& pi) {
  mdp.validate();
  const int S = mdp.num_states;
  const double g = mdp.discount;
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(S, S) - g * policy_transition(mdp, pi).transpose();
  const Eigen::VectorXd d =
      M.fullPivLu().solve((1.0 - g) * mdp.initial_dist);
  if (!d.allFinite())
    throw NumericError("visitation solve produced non-finite entries");
  return d;
}

PolicyValues values(const TabularMdp& mdp, const TabularPolicy& pi) {
  mdp.validate();
  const int S = mdp.num_states;
  const double g = mdp.discount;
  PolicyValues out;
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(S, S) - g * policy_transition(mdp, pi);
  out.V = M.fullPivLu().solve(policy_reward(mdp, pi));
  out.Q.resize(S, mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a)
    out.Q.col(a) = mdp.reward.col(a) + g * mdp.transition[a] * out.V;
  out.A = out.Q.colwise() - out.V;
  out.J = mdp.initial_dist.dot(out.V);
  return out;
}

Eigen::VectorXd state_tv(const TabularPolicy& p, const TabularPolicy& q) {
  return 0.5 * (p.probs() - q.probs()).cwiseAbs().rowwise().sum();
}

Eigen::VectorXd state_kl(const TabularPolicy& p, const TabularPolicy& q) {
  const Eigen::MatrixXd pp = p.probs();
  const Eigen::MatrixXd qq = q.probs();
  return (pp.array() * (pp.array() / qq.array()).log())
      .rowwise()
      .sum()
      .matrix();
}

double performance_difference_gap(const TabularMdp& mdp,
                                  const TabularPolicy& pi,
                                  const TabularPolicy& pi_k) {
  const PolicyValues vk = values(mdp, pi_k);
  const PolicyValues vp = values(mdp, pi);
  const Eigen::VectorXd d = visitation(mdp, pi);
  const Eigen::VectorXd exp_adv =
      (pi.probs().array() * vk.A.array()).rowwise().sum().matrix();
  const double rhs = d.dot(exp_adv) / (1.0 - mdp.discount);
  return std::abs(vp.J - vk.J - rhs);
}

namespace {

BoundReport mixture_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                          const TabularPolicy& pi_k,
                          const std::vector<TabularPolicy>& refs,
                          const Eigen::VectorXd& nu) {
  const PolicyValues vk = values(mdp, pi_k);
  const PolicyValues vp = values(mdp, pi);
  const Eigen::VectorXd exp_adv =
      (pi.probs().array() * vk.A.array()).rowwise().sum().matrix();
  const double g = mdp.discount;

  BoundReport rep;
  rep.lhs = vp.J - vk.J;
  rep.C_const = exp_adv.cwiseAbs().maxCoeff();
  for (int i = 0; i < nu.size(); ++i) {
    if (nu[i] == 0.0) continue;
    const Eigen::VectorXd d = visitation(mdp, refs[i]);
    rep.surrogate += nu[i] * d.dot(exp_adv) / (1.0 - g);
    rep.penalty += nu[i] * 2.0 * g * rep.C_const / ((1.0 - g) * (1.0 - g)) *
                   d.dot(state_tv(pi, refs[i]));
  }
  rep.rhs = rep.surrogate - rep.penalty;
  rep.margin = rep.lhs - rep.rhs;
  rep.holds = rep.margin >= -1e-9;
  return rep;
}

}  // namespace

BoundReport check_bound_onpolicy(const TabularMdp& mdp, const TabularPolicy& pi,
                                 const TabularPolicy& pi_k) {
  Eigen::VectorXd nu(1);
  nu[0] = 1.0;
  return mixture_bound(mdp, pi, pi_k, {pi_k}, nu);
}

BoundReport check_bound_generalized(const TabularMdp& mdp,
                                    const TabularPolicy& pi,
                                    const std::vector<TabularPolicy>& sequence,
                                    const Eigen::VectorXd& nu) {
  if (static_cast<int>(sequence.size()) < nu.size())
    throw ConfigError("generalized bound: fewer policies than weights");
  if (std::abs(nu.sum() - 1.0) > 1e-9 || nu.minCoeff() < 0.0)
    throw ConfigError("generalized bound: nu is not a distribution");
  return mixture_bound(mdp, pi, sequence[0], sequence, nu);
}

VisitationTv visitation_tv_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                                 const TabularPolicy& pi_ref) {
  VisitationTv out;
  const Eigen::VectorXd dp = visitation(mdp, pi);
  const Eigen::VectorXd dr = visitation(mdp, pi_ref);
  out.tv = 0.5 * (dp - dr).cwiseAbs().sum();
  out.bound = mdp.discount / (1.0 - mdp.discount) *
              dr.dot(state_tv(pi, pi_ref));
  out.holds = out.tv <= out.bound + 1e-12;
  return out;
}

Theorem3Report check_theorem3(const TabularMdp& mdp,
                              const std::vector<TabularPolicy>& sequence,
                              const Eigen::VectorXd& nu, double eps) {
  if (static_cast<int>(sequence.size()) < nu.size() + 1)
    throw ConfigError("theorem 3 check: sequence too short for nu");
  Theorem3Report rep;
  for (int i = 0; i < nu.size(); ++i) {
    if (nu[i] == 0.0) continue;
    const Eigen::VectorXd d = visitation(mdp, sequence[1 + i]);
    rep.penalty += nu[i] * d.dot(state_tv(sequence[0], sequence[1 + i]));
  }
  rep.limit = eps / 2.0;
  rep.holds = rep.penalty <= rep.limit + 1e-9;
  return rep;
}

TabularPolicy perturb_to_tv(const TabularPolicy& base,
                            const Eigen::MatrixXd& direction,
                            double tv_target) {
  const int S = base.num_states();
  const int A = base.num_actions();
  const Eigen::MatrixXd base_probs = base.probs();
  Eigen::MatrixXd logits = base.logits();
  for (int s = 0; s < S; ++s) {
    // The softmax saturates along any fixed direction, so the supplied one
    // may cap below the target; the one-hot of the least likely action can
    // always reach TV 1 - p(a_min) >= 1 - 1/A.
    Eigen::RowVectorXd fallback = Eigen::RowVectorXd::Zero(A);
    int a_min = 0;
    base_probs.row(s).minCoeff(&a_min);
    fallback[a_min] = 1.0;

    bool placed = false;
    for (const Eigen::RowVectorXd& dir :
         {Eigen::RowVectorXd(direction.row(s)), fallback}) {
      auto tv_at = [&](double t) {
        Eigen::MatrixXd l = base.logits();
        l.row(s) += t * dir;
        return state_tv(base, TabularPolicy(l))[s];
      };
      double hi = 1.0;
      bool reachable = true;
      while (tv_at(hi) < tv_target) {
        hi *= 2.0;
        if (hi > 1e8) {
          reachable = false;
          break;
        }
      }
      if (!reachable) continue;
      double lo = 0.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (tv_at(mid) < tv_target ? lo : hi) = mid;
      }
      logits.row(s) += 0.5 * (lo + hi) * dir;
      placed = true;
      break;
    }
    if (!placed)
      throw NumericError("tv perturbation: direction cannot reach target");
  }
  return TabularPolicy(logits);
}

namespace {

TabularPolicy random_policy(int S, int A, Rng& rng, double scale) {
  Eigen::MatrixXd logits(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) logits(s, a) = scale * rng.normal();
  return TabularPolicy(logits);
}

std::string describe(const TabularMdp& mdp, std::uint64_t seed, double scale) {
  std::ostringstream os;
  os << mdp.num_states << "x" << mdp.num_actions << " seed=" << seed
     << " scale=" << scale;
  return os.str();
}

}  // namespace

std::vector<CheckResult> verify_bounds_suite(std::uint64_t seed,
                                             int instances) {
  if (instances < 1) throw ConfigError("instances must be >= 1");
  std::vector<CheckResult> results;
  auto add = [&](const std::string& name, bool pass, const std::string& bad) {
    results.push_back({name, pass, pass ? "ok" : bad});
  };
  // Perturbation scales span tight and loose bound regimes.
  const double scales[] = {0.01, 0.1, 1.0, 10.0};

  double max_pd_gap = 0.0, min_margin_on = 1e300, min_margin_gen = 1e300;
  bool lemma9_ok = true, pinsker_ok = true, tv_identity_ok = true;
  bool thm3_ok = true;
  std::string first_bad;

  for (int inst = 0; inst < instances; ++inst) {
    const std::uint64_t s = derive_seed(seed, inst);
    Rng rng(derive_seed(s, 1));
    const int S = 2 + static_cast<int>(rng.next_u64() % 7);   // up to 8
    const int A = 2 + static_cast<int>(rng.next_u64() % 3);   // up to 4
    TabularMdp mdp = make_random_tabular(S, A, derive_seed(s, 2));
    const double scale = scales[inst % 4];

    const TabularPolicy pi_k = random_policy(S, A, rng, 1.0);
    Eigen::MatrixXd dir(S, A);
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < A; ++j) dir(i, j) = scale * rng.normal();
    TabularPolicy pi(pi_k.logits() + dir);

    max_pd_gap = std::max(max_pd_gap, performance_difference_gap(mdp, pi, pi_k));
    const BoundReport on = check_bound_onpolicy(mdp, pi, pi_k);
    min_margin_on = std::min(min_margin_on, on.margin);

    std::vector<TabularPolicy> seq{pi_k, random_policy(S, A, rng, 1.0),
                                   random_policy(S, A, rng, 1.0)};
    Eigen::VectorXd nu(3);
    nu << 0.5, 0.3, 0.2;
    const BoundReport gen = check_bound_generalized(mdp, pi, seq, nu);
    min_margin_gen = std::min(min_margin_gen, gen.margin);
    if ((!on.holds || !gen.holds) && first_bad.empty())
      first_bad = describe(mdp, s, scale);

    const VisitationTv vtv = visitation_tv_bound(mdp, pi, seq[1]);
    lemma9_ok = lemma9_ok && vtv.holds;

    // Pinsker: exact TV <= sqrt(exact KL / 2) per state.
    const Eigen::VectorXd tv = state_tv(pi, pi_k);
    const Eigen::VectorXd kl = state_kl(pi, pi_k);
    for (int st = 0; st < S; ++st)
      pinsker_ok = pinsker_ok && tv[st] <= std::sqrt(kl[st] / 2.0) + 1e-12;

    // Ratio form of the one-step TV (Lemmas 5-6): half the expected absolute
    // ratio deviation under pi_{k-i} equals the exact per-state TV.
    {
      const Eigen::MatrixXd pp = pi.probs();
      const Eigen::MatrixXd pk = pi_k.probs();
      const Eigen::MatrixXd pref = seq[1].probs();
      const Eigen::VectorXd lhs =
          0.5 *
          (pref.array() * ((pp.array() - pk.array()) / pref.array()).abs())
              .rowwise()
              .sum()
              .matrix();
      tv_identity_ok =
          tv_identity_ok && (lhs - state_tv(pi, pi_k)).cwiseAbs().maxCoeff() <=
                                1e-12;
    }
  }

  // Theorem 3: chains built so every state's one-step TV is exactly eps_gen/2.
  const double eps = 0.2;
  for (int inst = 0; inst < 50; ++inst) {
    const std::uint64_t s = derive_seed(seed ^ 0x9e3779b97f4a7c15ull, inst);
    Rng rng(s);
    const int S = 2 + static_cast<int>(rng.next_u64() % 7);
    const int A = 2 + static_cast<int>(rng.next_u64() % 3);
    TabularMdp mdp = make_random_tabular(S, A, derive_seed(s, 3));
    Eigen::VectorXd nu(3);
    nu << 0.5, 0.3, 0.2;
    const double eps_gen = eps_gen_from(nu, eps);
    // sequence[0] = pi_{k+1}, then pi_k, pi_{k-1}, pi_{k-2}; consecutive
    // policies differ by exactly eps_gen/2 TV in every state.
    std::vector<TabularPolicy> chain{random_policy(S, A, rng, 1.0)};
    for (int j = 0; j < 3; ++j) {
      Eigen::MatrixXd dir(S, A);
      for (int i = 0; i < S; ++i)
        for (int k = 0; k < A; ++k) dir(i, k) = rng.normal();
      chain.push_back(perturb_to_tv(chain.back(), dir, eps_gen / 2.0));
    }
    // Oldest was built last; reverse so chain[0] is the newest policy.
    std::vector<TabularPolicy> seq(chain.rbegin(), chain.rend());
    const Theorem3Report rep = check_theorem3(mdp, seq, nu, eps);
    thm3_ok = thm3_ok && rep.holds;
  }

  std::ostringstream pd;
  pd << "max gap " << max_pd_gap;
  add("performance difference identity (Lemma 8)", max_pd_gap <= 1e-9,
      pd.str());
  std::ostringstream mo;
  mo << "min margin " << min_margin_on << " at " << first_bad;
  add("on-policy lower bound (Eq. 1)", min_margin_on >= -1e-9, mo.str());
  std::ostringstream mg;
  mg << "min margin " << min_margin_gen << " at " << first_bad;
  add("generalized lower bound (Theorem 2)", min_margin_gen >= -1e-9, mg.str());
  add("visitation TV bound (Lemma 9)", lemma9_ok, "violated");
  add("Pinsker TV <= sqrt(KL/2)", pinsker_ok, "violated");
  add("ratio-form TV identity (Lemmas 5-6)", tv_identity_ok, "violated");
  add("mixture penalty under constructed drift (Theorem 3)", thm3_ok,
      "violated");
  return results;
}

}  // namespace gpi
