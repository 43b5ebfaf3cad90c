#include "acre/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "acre/algos.hpp"
#include "acre/envs.hpp"
#include "acre/returns.hpp"

namespace acre {
namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

Eigen::VectorXd random_normal_vec(int n, RandomStream& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

std::vector<int> random_hidden(RandomStream& rng) {
  const int layers = rng.uniform_int(3);  // 0..2
  std::vector<int> h(layers);
  for (int& w : h) w = 1 + rng.uniform_int(6);
  return h;
}

double rel_err(const Eigen::VectorXd& g, const Eigen::VectorXd& fd) {
  const double scale = std::max({1.0, g.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff()});
  return (g - fd).cwiseAbs().maxCoeff() / scale;
}

int obs_argmax(const Eigen::VectorXd& obs) {
  int s = 0;
  obs.maxCoeff(&s);
  return s;
}

}  // namespace

GradcheckReport run_gradcheck(int cases, std::uint64_t seed) {
  GradcheckReport rep;
  rep.cases = cases;
  for (int i = 0; i < cases; ++i) {
    RandomStream rng = RandomStream::split(seed, static_cast<std::uint64_t>(i));
    const int obs_dim = 1 + rng.uniform_int(4);
    const std::vector<int> hidden = random_hidden(rng);
    const Eigen::VectorXd obs = random_normal_vec(obs_dim, rng);

    double err = 0.0;
    std::string label;
    switch (i % 6) {
      case 0:
      case 1: {  // Gaussian log_prob, both sigma parameterizations
        const bool dep = i % 6 == 1;
        const int n_act = 1 + rng.uniform_int(3);
        GaussianPolicy p = make_gaussian_policy(obs_dim, hidden, n_act, dep, rng);
        const Eigen::VectorXd act = random_normal_vec(n_act, rng);
        Tape tape;
        TapedParams tp = lift(tape, p.theta.values);
        tape.backward(log_prob(p, tp, obs, act));
        const Eigen::VectorXd g = grad_of(tape, tp);
        GaussianPolicy probe = p;
        const Eigen::VectorXd fd = finite_diff_grad(
            [&](const Eigen::VectorXd& x) {
              probe.theta.values = x;
              return log_prob(probe, obs, act);
            },
            p.theta.values);
        err = rel_err(g, fd);
        label = dep ? "gaussian log_prob (state-dep sigma)" : "gaussian log_prob";
        break;
      }
      case 2: {  // categorical log_prob
        const int n_act = 2 + rng.uniform_int(3);
        CategoricalPolicy p = make_categorical_policy(obs_dim, hidden, n_act, rng);
        const Eigen::VectorXd act = Eigen::VectorXd::Constant(1, rng.uniform_int(n_act));
        Tape tape;
        TapedParams tp = lift(tape, p.theta.values);
        tape.backward(log_prob(p, tp, obs, act));
        const Eigen::VectorXd g = grad_of(tape, tp);
        CategoricalPolicy probe = p;
        const Eigen::VectorXd fd = finite_diff_grad(
            [&](const Eigen::VectorXd& x) {
              probe.theta.values = x;
              return log_prob(probe, obs, act);
            },
            p.theta.values);
        err = rel_err(g, fd);
        label = "categorical log_prob";
        break;
      }
      case 3: {  // Gaussian entropy, state-dependent sigma
        const int n_act = 1 + rng.uniform_int(3);
        GaussianPolicy p = make_gaussian_policy(obs_dim, hidden, n_act, true, rng);
        Tape tape;
        TapedParams tp = lift(tape, p.theta.values);
        tape.backward(entropy(p, tp, obs));
        const Eigen::VectorXd g = grad_of(tape, tp);
        GaussianPolicy probe = p;
        const Eigen::VectorXd fd = finite_diff_grad(
            [&](const Eigen::VectorXd& x) {
              probe.theta.values = x;
              return entropy(probe, obs);
            },
            p.theta.values);
        err = rel_err(g, fd);
        label = "gaussian entropy";
        break;
      }
      case 4: {  // categorical entropy
        const int n_act = 2 + rng.uniform_int(3);
        CategoricalPolicy p = make_categorical_policy(obs_dim, hidden, n_act, rng);
        Tape tape;
        TapedParams tp = lift(tape, p.theta.values);
        tape.backward(entropy(p, tp, obs));
        const Eigen::VectorXd g = grad_of(tape, tp);
        CategoricalPolicy probe = p;
        const Eigen::VectorXd fd = finite_diff_grad(
            [&](const Eigen::VectorXd& x) {
              probe.theta.values = x;
              return entropy(probe, obs);
            },
            p.theta.values);
        err = rel_err(g, fd);
        label = "categorical entropy";
        break;
      }
      default: {  // value_loss through the critic
        ValueFunction vf = make_value_function(obs_dim, hidden, rng);
        const int n = 3;
        std::vector<Eigen::VectorXd> os;
        Eigen::VectorXd targets(n);
        for (int k = 0; k < n; ++k) {
          os.push_back(random_normal_vec(obs_dim, rng));
          targets[k] = rng.normal();
        }
        Tape tape;
        TapedParams tp = lift(tape, vf.phi.values);
        std::vector<Var> nodes;
        for (int k = 0; k < n; ++k) nodes.push_back(value(vf, tp, os[k]));
        tape.backward(value_loss(nodes, targets));
        const Eigen::VectorXd g = grad_of(tape, tp);
        ValueFunction probe = vf;
        const Eigen::VectorXd fd = finite_diff_grad(
            [&](const Eigen::VectorXd& x) {
              probe.phi.values = x;
              double acc = 0.0;
              for (int k = 0; k < n; ++k) {
                const double d = value(probe, os[k]) - targets[k];
                acc += d * d;
              }
              return 0.5 * acc / n;
            },
            vf.phi.values);
        err = rel_err(g, fd);
        label = "value_loss";
        break;
      }
    }
    if (err > rep.worst) {
      rep.worst = err;
      rep.worst_case = label + " (case " + std::to_string(i) + ")";
    }
  }
  return rep;
}

IdentityReport run_identity_checks(const TabularMDP& mdp) {
  IdentityReport rep;
  Eigen::MatrixXd logits(mdp.S, mdp.A);
  for (int s = 0; s < mdp.S; ++s)
    for (int a = 0; a < mdp.A; ++a) logits(s, a) = std::sin(1.0 + 2.3 * s + 1.7 * a);
  const TabularPolicy sp = softmax_policy(logits);
  rep.past_reward_softmax = verify_past_reward_identity(mdp, sp);

  RandomStream rng = RandomStream::split(11, 0);
  const CategoricalPolicy cat = make_categorical_policy(mdp.S, {4}, mdp.A, rng);
  rep.past_reward_network = verify_past_reward_identity(mdp, network_policy(cat));

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(mdp.S);
  Eigen::VectorXd wavy(mdp.S);
  for (int s = 0; s < mdp.S; ++s) wavy[s] = 5.0 * std::sin(0.7 + s);
  Eigen::VectorXd alt(mdp.S);
  for (int s = 0; s < mdp.S; ++s) alt[s] = s % 2 == 0 ? 3.0 : -3.0;
  rep.baseline_bounded = std::max({verify_baseline_invariance(mdp, sp, ones),
                                   verify_baseline_invariance(mdp, sp, wavy),
                                   verify_baseline_invariance(mdp, sp, alt)});
  rep.baseline_large = verify_baseline_invariance(mdp, sp, 1e6 * ones);
  return rep;
}

EstimatorReport measure_estimators(const TabularMDP& mdp, long episodes, std::uint64_t seed) {
  if (mdp.horizon <= 0)
    throw std::invalid_argument("measure_estimators: needs a finite-horizon MDP");
  EstimatorReport rep;
  rep.episodes = episodes;

  RandomStream init = RandomStream::split(seed, 0);
  CategoricalPolicy cat = make_categorical_policy(mdp.S, {}, mdp.A, init);
  const Policy policy = cat;
  const TabularPolicy pi = network_policy(cat);
  rep.exact = exact_policy_gradient(mdp, pi);

  const int T = mdp.horizon;
  const FiniteValues fv = finite_horizon_values(mdp, pi, T);
  const TimedBaseline baseline = [&](const Eigen::VectorXd& obs, int t) {
    return t < T ? fv.V[t][obs_argmax(obs)] : 0.0;
  };

  ChainMDPEnv env(mdp, T);
  RandomStream rng = RandomStream::split(seed, 1);
  RolloutState rs;
  TrajectoryBuffer buffer;
  buffer.gamma = mdp.gamma;

  const int dim = cat.theta.size();
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(dim), q1 = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(dim), q2 = Eigen::VectorXd::Zero(dim);
  for (long ep = 0; ep < episodes; ++ep) {
    buffer.clear();
    rollout(env, policy, nullptr, buffer, T, rng, rs);
    const Eigen::VectorXd g1 = reinforce_gradient(buffer, policy, mdp.gamma);
    const Eigen::VectorXd g2 = advantage_gradient(buffer, policy, mdp.gamma, baseline);
    s1 += g1;
    q1 += g1.cwiseProduct(g1);
    s2 += g2;
    q2 += g2.cwiseProduct(g2);
  }

  const double n = static_cast<double>(episodes);
  rep.mean = s1 / n;
  rep.var_plain = (q1 - n * rep.mean.cwiseProduct(rep.mean)) / (n - 1.0);
  rep.var_plain = rep.var_plain.cwiseMax(0.0);
  const Eigen::VectorXd mean2 = s2 / n;
  rep.var_baseline = ((q2 - n * mean2.cwiseProduct(mean2)) / (n - 1.0)).cwiseMax(0.0);
  rep.se = (rep.var_plain / n).cwiseSqrt();

  rep.max_abs_z = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double dev = std::abs(rep.mean[i] - rep.exact[i]);
    if (rep.se[i] > 0.0) {
      rep.max_abs_z = std::max(rep.max_abs_z, dev / rep.se[i]);
    } else if (dev > 0.0) {
      rep.max_abs_z = std::numeric_limits<double>::infinity();
    }
  }
  rep.baseline_strictly_lower = (rep.var_baseline.array() < rep.var_plain.array()).all();
  rep.variance_ratio = rep.var_baseline.sum() / rep.var_plain.sum();
  return rep;
}

std::vector<CheckResult> verify_gradcheck() {
  const GradcheckReport rep = run_gradcheck(100, 20250901ull);
  return {{"gradcheck: autodiff vs central differences, 100 random nets", rep.worst < 1e-4,
           "max rel err " + num(rep.worst) + " (tol 1e-4), worst at " + rep.worst_case}};
}

std::vector<CheckResult> verify_identities(const std::string& mdp_path) {
  const TabularMDP mdp = load_mdp_file(mdp_path);
  const IdentityReport rep = run_identity_checks(mdp);
  return {
      {"identities: past-reward score term vanishes (softmax policy)",
       rep.past_reward_softmax < 1e-12, num(rep.past_reward_softmax) + " (tol 1e-12)"},
      {"identities: past-reward score term vanishes (network policy)",
       rep.past_reward_network < 1e-12, num(rep.past_reward_network) + " (tol 1e-12)"},
      {"identities: baseline invariance, bounded baselines", rep.baseline_bounded < 1e-12,
       num(rep.baseline_bounded) + " (tol 1e-12)"},
      {"identities: baseline invariance, baseline 1e6", rep.baseline_large < 1e-6,
       num(rep.baseline_large) + " (tol 1e-6)"},
  };
}

std::vector<CheckResult> verify_unbiasedness(const std::string& mdp_path) {
  const TabularMDP mdp = load_mdp_file(mdp_path);
  const EstimatorReport rep = measure_estimators(mdp, 100000, 20250902ull);
  return {
      {"unbiasedness: REINFORCE mean within 3 SE of the oracle gradient", rep.max_abs_z <= 3.0,
       "max |z| " + num(rep.max_abs_z) + " over " + std::to_string(rep.episodes) + " episodes"},
      {"variance: oracle-V baseline strictly lowers every component",
       rep.baseline_strictly_lower, "variance ratio " + num(rep.variance_ratio)},
  };
}

int run_verify(const std::string& suite) {
  std::vector<CheckResult> checks;
  const std::string mdp_path = "data/mdp_2state.json";
  if (suite == "gradcheck" || suite == "all") {
    auto c = verify_gradcheck();
    checks.insert(checks.end(), c.begin(), c.end());
  }
  if (suite == "identities" || suite == "all") {
    auto c = verify_identities(mdp_path);
    checks.insert(checks.end(), c.begin(), c.end());
  }
  if (suite == "unbiasedness" || suite == "all") {
    auto c = verify_unbiasedness(mdp_path);
    checks.insert(checks.end(), c.begin(), c.end());
  }
  if (checks.empty()) {
    std::fprintf(stderr, "verify: unknown suite \"%s\" (gradcheck|identities|unbiasedness|all)\n",
                 suite.c_str());
    return 2;
  }
  bool all_pass = true;
  for (const CheckResult& c : checks) {
    std::printf("[%s] %s: %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(), c.detail.c_str());
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace acre
