#include "train.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "env.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "planner.hpp"
#include "replay.hpp"
#include "rng.hpp"
#include "updaters.hpp"

namespace gpi {

const char* kLogHeader =
    "step,update,mean_return,surrogate_before,surrogate_after,measured_tv,"
    "measured_kl,lr,lambda_star,step_scale,ess,accepted";

namespace {

// Seed streams fanned out from the master seed: 0 policy init, 1 value init,
// 2 environment sampler, 3 policy minibatch shuffles (sub-derived per
// update), 4 value minibatch shuffles (sub-derived per update).
enum SeedStream : std::uint64_t {
  kSeedPolicyInit = 0,
  kSeedValueInit = 1,
  kSeedSampler = 2,
  kSeedPolicyShuffle = 3,
  kSeedValueShuffle = 4,
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

bool RunConfig::onpolicy_algo() const {
  return algo == "ppo" || algo == "trpo" || algo == "vmpo";
}

void RunConfig::validate() const {
  static const char* algos[] = {"ppo", "geppo", "trpo", "getrpo", "vmpo",
                                "gevmpo"};
  bool ok = false;
  for (const char* a : algos) ok = ok || algo == a;
  if (!ok) throw ConfigError("unknown algo: " + algo);
  builtin_env(env);  // throws on unknown name
  if (total_steps < 1) throw ConfigError("steps must be positive");
  if (B < 1) throw ConfigError("B must be >= 1");
  if (n < 2) throw ConfigError("n must be >= 2");
  if (kappa < 0.0 || kappa > 1.0) throw ConfigError("kappa must be in [0,1]");
  if (eps <= 0.0 || eps >= 1.0) throw ConfigError("eps must be in (0,1)");
  if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in (0,1)");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must be in [0,1]");
  if (c_bar <= 0.0) throw ConfigError("c_bar must be positive");
  if (lr <= 0.0 || value_lr <= 0.0) throw ConfigError("learning rates must be positive");
  if (alpha <= 0.0) throw ConfigError("alpha must be positive");
  if (epochs < 1 || minibatches < 1 || value_epochs < 1 || value_minibatches < 1)
    throw ConfigError("epoch/minibatch counts must be positive");
  if (cg_iters < 1 || backtracks < 1) throw ConfigError("solver iteration counts must be positive");
  if (damping < 0.0) throw ConfigError("damping must be nonnegative");
  if (hidden < 1) throw ConfigError("hidden width must be positive");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "algo") algo = value;
    else if (key == "env") env = value;
    else if (key == "steps") total_steps = std::stol(value);
    else if (key == "B") B = std::stoi(value);
    else if (key == "n") n = std::stoi(value);
    else if (key == "kappa") kappa = std::stod(value);
    else if (key == "eps") eps = std::stod(value);
    else if (key == "gamma") gamma = std::stod(value);
    else if (key == "lambda") lambda = std::stod(value);
    else if (key == "c_bar") c_bar = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "lr") lr = std::stod(value);
    else if (key == "alpha") alpha = std::stod(value);
    else if (key == "epochs") epochs = std::stoi(value);
    else if (key == "minibatches") minibatches = std::stoi(value);
    else if (key == "value_epochs") value_epochs = std::stoi(value);
    else if (key == "value_minibatches") value_minibatches = std::stoi(value);
    else if (key == "value_lr") value_lr = std::stod(value);
    else if (key == "cg_iters") cg_iters = std::stoi(value);
    else if (key == "damping") damping = std::stod(value);
    else if (key == "backtracks") backtracks = std::stoi(value);
    else if (key == "hidden") hidden = std::stoi(value);
    else if (key == "adaptive_radius") adaptive_radius = value == "1" || value == "true";
    else if (key == "out") out = value;
    else throw ConfigError("unknown config key: " + key);
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad value for " + key + ": " + value);
  } catch (const std::out_of_range&) {
    throw ConfigError("value out of range for " + key + ": " + value);
  }
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::map<std::string, std::string> RunConfig::as_map() const {
  return {{"algo", algo},
          {"env", env},
          {"steps", std::to_string(total_steps)},
          {"B", std::to_string(B)},
          {"n", std::to_string(n)},
          {"kappa", fmt_double(kappa)},
          {"eps", fmt_double(eps)},
          {"gamma", fmt_double(gamma)},
          {"lambda", fmt_double(lambda)},
          {"c_bar", fmt_double(c_bar)},
          {"seed", std::to_string(seed)},
          {"lr", fmt_double(lr)},
          {"alpha", fmt_double(alpha)},
          {"epochs", std::to_string(epochs)},
          {"minibatches", std::to_string(minibatches)},
          {"value_epochs", std::to_string(value_epochs)},
          {"value_minibatches", std::to_string(value_minibatches)},
          {"value_lr", fmt_double(value_lr)},
          {"cg_iters", std::to_string(cg_iters)},
          {"damping", fmt_double(damping)},
          {"backtracks", std::to_string(backtracks)},
          {"hidden", std::to_string(hidden)},
          {"adaptive_radius", adaptive_radius ? "1" : "0"},
          {"out", out}};
}

namespace {

void write_config_snapshot(const std::string& path, const RunConfig& cfg,
                           const MixturePlan& plan) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  for (const auto& [k, v] : cfg.as_map()) f << k << " = " << v << "\n";
  f << "# derived\n";
  f << "# eps_gen = " << fmt_double(plan.eps_gen) << "\n";
  f << "# delta_gen = " << fmt_double(plan.delta_gen) << "\n";
  f << "# ess = " << fmt_double(plan.ess) << "\n";
  std::ostringstream nu;
  for (int i = 0; i < plan.nu.size(); ++i)
    nu << (i ? " " : "") << fmt_double(plan.nu[i]);
  f << "# nu = " << nu.str() << "\n";
}

}  // namespace

std::string train(const RunConfig& cfg) {
  cfg.validate();
  const bool onp = cfg.onpolicy_algo();
  const int batch_n = onp ? cfg.B * cfg.n : cfg.n;
  const MixturePlan plan = onp ? onpolicy_plan(batch_n, cfg.eps)
                               : solve_mixture(cfg.B, cfg.kappa, cfg.n, cfg.eps);
  const ContinuousEnv env = builtin_env(cfg.env);

  Rng pol_rng(derive_seed(cfg.seed, kSeedPolicyInit));
  Rng val_rng(derive_seed(cfg.seed, kSeedValueInit));
  GaussianPolicy policy = GaussianPolicy::initialized(
      env.state_dim, env.action_dim, pol_rng, 0.0, cfg.hidden);
  ValueFunction value_fn =
      ValueFunction::initialized(env.state_dim, val_rng, cfg.hidden);
  Sampler sampler(env, derive_seed(cfg.seed, kSeedSampler));
  ReplayWindow window(plan.support, batch_n);
  PpoState ppo_state(policy.param_count(), cfg.lr);
  Adam value_adam(value_fn.param_count());
  const TrpoConfig tcfg{cfg.cg_iters, cfg.damping, cfg.backtracks, 1e-6};
  const EstimatorConfig est{cfg.gamma, cfg.lambda, cfg.c_bar};

  std::ostringstream dirname;
  dirname << cfg.algo << "_" << cfg.env << "_B" << cfg.B << "_k"
          << fmt_double(cfg.kappa) << "_s" << cfg.seed;
  const std::filesystem::path dir =
      std::filesystem::path(cfg.out) / dirname.str();
  std::filesystem::create_directories(dir);
  write_config_snapshot((dir / "config.txt").string(), cfg, plan);

  std::ofstream log(dir / "log.csv");
  if (!log) throw IoError("cannot write " + (dir / "log.csv").string());
  log << kLogHeader << "\n";

  long step = 0;
  int update = 0;
  while (step < cfg.total_steps) {
    std::vector<Transition> fresh = sampler.collect(policy, batch_n);
    step += batch_n;
    window.push(policy, fresh);
    const WeightedBatch batch = assemble(window, policy, value_fn, plan, est);

    MixturePlan plan_used = plan;
    if (cfg.adaptive_radius && !onp) {
      const int slots = window.size();
      Eigen::VectorXd nu = plan.nu.head(std::min<int>(slots, plan.nu.size()));
      nu /= nu.sum();
      std::vector<GaussianPolicy> priors;
      std::vector<Eigen::MatrixXd> probes;
      for (int i = 0; i < nu.size(); ++i) {
        priors.push_back(window.snapshot(i));
        const auto& data = window.transitions(i);
        Eigen::MatrixXd X(env.state_dim, static_cast<int>(data.size()));
        for (int t = 0; t < X.cols(); ++t) X.col(t) = data[t].state;
        probes.push_back(std::move(X));
      }
      plan_used.eps_gen = adaptive_eps_gen(policy, priors, nu, cfg.eps, probes);
      plan_used.delta_gen = delta_gen_from(plan_used.eps_gen);
    }

    UpdateReport rep;
    if (cfg.algo == "ppo" || cfg.algo == "geppo") {
      const PpoConfig pcfg{cfg.epochs, cfg.minibatches, cfg.alpha,
                           derive_seed(derive_seed(cfg.seed, kSeedPolicyShuffle),
                                       update)};
      std::tie(policy, rep) = geppo_update(batch, policy, plan_used, ppo_state, pcfg);
    } else if (cfg.algo == "trpo" || cfg.algo == "getrpo") {
      std::tie(policy, rep) = getrpo_update(batch, policy, plan_used, tcfg);
    } else {
      std::tie(policy, rep) = gevmpo_update(batch, policy, plan_used, tcfg);
    }
    value_fn = fit_value(value_fn, batch.states, batch.value_targets,
                         cfg.value_epochs, cfg.value_minibatches, cfg.value_lr,
                         derive_seed(derive_seed(cfg.seed, kSeedValueShuffle),
                                     update),
                         &value_adam);
    ++update;

    log << step << "," << update << "," << fmt_double(sampler.mean_recent_return())
        << "," << fmt_double(rep.surrogate_before) << ","
        << fmt_double(rep.surrogate_after) << "," << fmt_double(rep.measured_tv)
        << "," << fmt_double(rep.measured_kl) << "," << fmt_double(rep.lr) << ","
        << fmt_double(rep.dual_temperature) << "," << fmt_double(rep.step_scale)
        << "," << fmt_double(plan.ess) << "," << (rep.accepted ? 1 : 0) << "\n";
  }
  log.flush();
  save_checkpoint((dir / "checkpoint.bin").string(), policy, value_fn);
  return dir.string();
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  f.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

void put_vec(std::ofstream& f, const Eigen::VectorXd& v) {
  put_u32(f, static_cast<std::uint32_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &v[i], 8);
    unsigned char b[8];
    for (int j = 0; j < 8; ++j) b[j] = (bits >> (8 * j)) & 0xff;
    f.write(reinterpret_cast<char*>(b), 8);
  }
}

Eigen::VectorXd get_vec(std::ifstream& f) {
  const std::uint32_t n = get_u32(f);
  Eigen::VectorXd v(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j) bits |= std::uint64_t(b[j]) << (8 * j);
    std::memcpy(&v[i], &bits, 8);
  }
  return v;
}

constexpr std::uint32_t kMagic = 0x43495047;  // "GPIC"

}  // namespace

void save_checkpoint(const std::string& path, const GaussianPolicy& policy,
                     const ValueFunction& value_fn) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  put_u32(f, kMagic);
  put_u32(f, 1);  // version
  put_u32(f, policy.obs_dim());
  put_u32(f, policy.act_dim());
  put_u32(f, policy.mlp().hidden_dim());
  put_vec(f, policy.flat());
  put_vec(f, value_fn.flat());
  if (!f) throw IoError("checkpoint write failed: " + path);
}

std::pair<GaussianPolicy, ValueFunction> load_checkpoint(
    const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  if (get_u32(f) != kMagic) throw IoError("bad checkpoint magic: " + path);
  if (get_u32(f) != 1) throw IoError("unsupported checkpoint version: " + path);
  const int obs = static_cast<int>(get_u32(f));
  const int act = static_cast<int>(get_u32(f));
  const int hidden = static_cast<int>(get_u32(f));
  GaussianPolicy policy(obs, act, hidden);
  ValueFunction value_fn(obs, hidden);
  const Eigen::VectorXd p = get_vec(f);
  const Eigen::VectorXd v = get_vec(f);
  if (!f || p.size() != policy.param_count() ||
      v.size() != value_fn.param_count())
    throw IoError("checkpoint is truncated or inconsistent: " + path);
  policy.set_flat(p);
  value_fn.set_flat(v);
  return {std::move(policy), std::move(value_fn)};
}

}  // namespace gpi
