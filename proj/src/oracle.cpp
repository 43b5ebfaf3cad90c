#include "acre/oracle.hpp"

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace acre {

TabularMDP load_mdp(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  TabularMDP m;
  m.S = j.at("S").get<int>();
  m.A = j.at("A").get<int>();
  m.gamma = j.at("gamma").get<double>();
  m.horizon = j.value("horizon", 0);
  m.P.assign(m.A, Eigen::MatrixXd::Zero(m.S, m.S));
  const auto& P = j.at("P");  // P[s][a][s']
  for (int s = 0; s < m.S; ++s)
    for (int a = 0; a < m.A; ++a)
      for (int s2 = 0; s2 < m.S; ++s2)
        m.P[a](s, s2) = P.at(s).at(a).at(s2).get<double>();
  m.R = Eigen::MatrixXd::Zero(m.S, m.A);
  const auto& R = j.at("R");  // R[s][a]
  for (int s = 0; s < m.S; ++s)
    for (int a = 0; a < m.A; ++a) m.R(s, a) = R.at(s).at(a).get<double>();
  m.rho0 = Eigen::VectorXd::Zero(m.S);
  const auto& rho = j.at("rho0");
  for (int s = 0; s < m.S; ++s) m.rho0[s] = rho.at(s).get<double>();
  validate_mdp(m);
  return m;
}

TabularMDP load_mdp_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_mdp_file: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return load_mdp(ss.str());
}

void validate_mdp(const TabularMDP& mdp) {
  if (mdp.S <= 0 || mdp.A <= 0) throw std::invalid_argument("mdp: S and A must be positive");
  if (mdp.gamma < 0.0 || mdp.gamma > 1.0) throw std::invalid_argument("mdp: gamma out of range");
  if (mdp.horizon == 0 && mdp.gamma >= 1.0)
    throw std::invalid_argument("mdp: infinite horizon requires gamma < 1");
  for (int a = 0; a < mdp.A; ++a)
    for (int s = 0; s < mdp.S; ++s) {
      const auto row = mdp.P[a].row(s);
      if (row.minCoeff() < 0.0 || std::abs(row.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("mdp: P[" + std::to_string(s) + "][" + std::to_string(a) +
                                    "] is not a probability vector");
    }
  if (mdp.rho0.minCoeff() < 0.0 || std::abs(mdp.rho0.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("mdp: rho0 is not a probability vector");
}

TabularPolicy tabular_policy(const Eigen::MatrixXd& probs) {
  TabularPolicy pi;
  pi.param_dim = 0;
  pi.probs = [probs](int s) { return probs.row(s).transpose().eval(); };
  pi.grad_log_prob = [](int, int) -> Eigen::VectorXd {
    throw std::logic_error("tabular_policy: probability table has no parameters");
  };
  return pi;
}

TabularPolicy softmax_policy(const Eigen::MatrixXd& logits) {
  const int S = static_cast<int>(logits.rows());
  const int A = static_cast<int>(logits.cols());
  TabularPolicy pi;
  pi.param_dim = S * A;
  auto probs_of = [logits, A](int s) {
    Eigen::ArrayXd e = (logits.row(s).array() - logits.row(s).maxCoeff()).exp();
    return (e / e.sum()).matrix().eval();
  };
  pi.probs = probs_of;
  // d log pi(a|s) / d logits(s', a') = [s'=s] ([a'=a] - pi(a'|s))
  pi.grad_log_prob = [probs_of, S, A](int s, int a) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(S * A);
    const Eigen::VectorXd p = probs_of(s);
    for (int a2 = 0; a2 < A; ++a2) g[s * A + a2] = (a2 == a ? 1.0 : 0.0) - p[a2];
    return g;
  };
  return pi;
}

TabularPolicy network_policy(const CategoricalPolicy& p) {
  const int S = p.theta.arch.input();
  TabularPolicy pi;
  pi.param_dim = p.theta.size();
  auto onehot = [S](int s) {
    Eigen::VectorXd o = Eigen::VectorXd::Zero(S);
    o[s] = 1.0;
    return o;
  };
  pi.probs = [p, onehot](int s) { return probabilities(p, onehot(s)); };
  pi.grad_log_prob = [p, onehot](int s, int a) {
    Tape tape;
    const TapedParams tp = lift(tape, p.theta.values);
    const Var lp = log_prob(p, tp, onehot(s), Eigen::VectorXd::Constant(1, a));
    tape.backward(lp);
    return grad_of(tape, tp);
  };
  return pi;
}

namespace {

// Policy-averaged transition matrix and reward vector.
void policy_kernels(const TabularMDP& mdp, const TabularPolicy& pi, Eigen::MatrixXd& P_pi,
                    Eigen::VectorXd& r_pi) {
  P_pi = Eigen::MatrixXd::Zero(mdp.S, mdp.S);
  r_pi = Eigen::VectorXd::Zero(mdp.S);
  for (int s = 0; s < mdp.S; ++s) {
    const Eigen::VectorXd p = pi.probs(s);
    for (int a = 0; a < mdp.A; ++a) {
      P_pi.row(s) += p[a] * mdp.P[a].row(s);
      r_pi[s] += p[a] * mdp.R(s, a);
    }
  }
}

void check_solvable(const TabularMDP& mdp) {
  if (mdp.S > kMaxSolveStates)
    throw std::invalid_argument("oracle: dense solves limited to S <= " +
                                std::to_string(kMaxSolveStates));
}

}  // namespace

FiniteValues finite_horizon_values(const TabularMDP& mdp, const TabularPolicy& pi, int T) {
  FiniteValues fv;
  fv.V.assign(T + 1, Eigen::VectorXd::Zero(mdp.S));
  fv.Q.assign(T, Eigen::MatrixXd::Zero(mdp.S, mdp.A));
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < mdp.S; ++s)
      for (int a = 0; a < mdp.A; ++a)
        fv.Q[t](s, a) = mdp.R(s, a) + mdp.gamma * mdp.P[a].row(s).dot(fv.V[t + 1]);
    for (int s = 0; s < mdp.S; ++s) fv.V[t][s] = pi.probs(s).dot(fv.Q[t].row(s).transpose());
  }
  return fv;
}

ExactValues exact_values(const TabularMDP& mdp, const TabularPolicy& pi) {
  check_solvable(mdp);
  if (mdp.horizon > 0) {
    const FiniteValues fv = finite_horizon_values(mdp, pi, mdp.horizon);
    return {fv.V[0], fv.Q[0]};
  }
  Eigen::MatrixXd P_pi;
  Eigen::VectorXd r_pi;
  policy_kernels(mdp, pi, P_pi, r_pi);
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(mdp.S, mdp.S) - mdp.gamma * P_pi;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  if (lu.determinant() == 0.0) throw std::runtime_error("exact_values: singular system");
  ExactValues ev;
  ev.V = lu.solve(r_pi);
  ev.Q = Eigen::MatrixXd::Zero(mdp.S, mdp.A);
  for (int s = 0; s < mdp.S; ++s)
    for (int a = 0; a < mdp.A; ++a)
      ev.Q(s, a) = mdp.R(s, a) + mdp.gamma * mdp.P[a].row(s).dot(ev.V);
  return ev;
}

double exact_objective(const TabularMDP& mdp, const TabularPolicy& pi) {
  return mdp.rho0.dot(exact_values(mdp, pi).V);
}

Eigen::VectorXd discounted_occupancy(const TabularMDP& mdp, const TabularPolicy& pi) {
  check_solvable(mdp);
  Eigen::MatrixXd P_pi;
  Eigen::VectorXd r_pi;
  policy_kernels(mdp, pi, P_pi, r_pi);
  // d = rho0 + gamma P_pi^T d
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(mdp.S, mdp.S) - mdp.gamma * P_pi.transpose();
  return M.partialPivLu().solve(mdp.rho0);
}

Eigen::VectorXd exact_policy_gradient(const TabularMDP& mdp, const TabularPolicy& pi) {
  if (pi.param_dim <= 0)
    throw std::invalid_argument("exact_policy_gradient: policy exposes no parameters");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(pi.param_dim);
  if (mdp.horizon > 0) {
    const FiniteValues fv = finite_horizon_values(mdp, pi, mdp.horizon);
    Eigen::MatrixXd P_pi;
    Eigen::VectorXd r_pi;
    policy_kernels(mdp, pi, P_pi, r_pi);
    Eigen::VectorXd mu = mdp.rho0;
    double gt = 1.0;
    for (int t = 0; t < mdp.horizon; ++t) {
      for (int s = 0; s < mdp.S; ++s) {
        if (mu[s] == 0.0) continue;
        const Eigen::VectorXd p = pi.probs(s);
        for (int a = 0; a < mdp.A; ++a)
          g += gt * mu[s] * p[a] * fv.Q[t](s, a) * pi.grad_log_prob(s, a);
      }
      mu = (P_pi.transpose() * mu).eval();
      gt *= mdp.gamma;
    }
    if (!g.allFinite()) throw std::runtime_error("exact_policy_gradient: non-finite partials");
    return g;
  }
  const ExactValues ev = exact_values(mdp, pi);
  const Eigen::VectorXd d = discounted_occupancy(mdp, pi);
  for (int s = 0; s < mdp.S; ++s) {
    const Eigen::VectorXd p = pi.probs(s);
    for (int a = 0; a < mdp.A; ++a)
      g += d[s] * p[a] * ev.Q(s, a) * pi.grad_log_prob(s, a);
  }
  if (!g.allFinite()) throw std::runtime_error("exact_policy_gradient: non-finite partials");
  return g;
}

double verify_past_reward_identity(const TabularMDP& mdp, const TabularPolicy& pi) {
  const int T = mdp.horizon;
  if (T <= 0)
    throw std::invalid_argument("verify_past_reward_identity: finite horizon required");
  double terms = 0.0;
  int support = 0;
  for (int s = 0; s < mdp.S; ++s)
    if (mdp.rho0[s] > 0.0) ++support;
  terms = support * std::pow(static_cast<double>(mdp.S) * mdp.A, T);
  if (terms > static_cast<double>(kEnumerationCap))
    throw std::invalid_argument("verify_past_reward_identity: enumeration size exceeds cap");

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(pi.param_dim);
  // DFS over (s_0, a_0, s_1, ..., a_{T-1}, s_T); the path carries its exact
  // probability, the discounted past-reward sum, and the weighted score sum.
  std::function<void(int, int, double, double, double, const Eigen::VectorXd&)> walk =
      [&](int t, int s, double prob, double past, double gt, const Eigen::VectorXd& score_sum) {
        if (t == T) {
          acc += prob * score_sum;
          return;
        }
        const Eigen::VectorXd p = pi.probs(s);
        for (int a = 0; a < mdp.A; ++a) {
          if (p[a] == 0.0) continue;
          // Past rewards strictly before t weight the score at t.
          const Eigen::VectorXd next_score = score_sum + past * pi.grad_log_prob(s, a);
          const double r = mdp.R(s, a);
          for (int s2 = 0; s2 < mdp.S; ++s2) {
            const double tp = mdp.P[a](s, s2);
            if (tp == 0.0) continue;
            walk(t + 1, s2, prob * p[a] * tp, past + gt * r, gt * mdp.gamma, next_score);
          }
        }
      };
  for (int s = 0; s < mdp.S; ++s)
    if (mdp.rho0[s] > 0.0)
      walk(0, s, mdp.rho0[s], 0.0, 1.0, Eigen::VectorXd::Zero(pi.param_dim));
  return acc.cwiseAbs().maxCoeff();
}

namespace {

// Exact advantage-form gradient with a state baseline b subtracted from Q.
Eigen::VectorXd baselined_gradient(const TabularMDP& mdp, const TabularPolicy& pi,
                                   const Eigen::VectorXd& b) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(pi.param_dim);
  if (mdp.horizon > 0) {
    const FiniteValues fv = finite_horizon_values(mdp, pi, mdp.horizon);
    Eigen::MatrixXd P_pi;
    Eigen::VectorXd r_pi;
    policy_kernels(mdp, pi, P_pi, r_pi);
    Eigen::VectorXd mu = mdp.rho0;
    double gt = 1.0;
    for (int t = 0; t < mdp.horizon; ++t) {
      for (int s = 0; s < mdp.S; ++s) {
        if (mu[s] == 0.0) continue;
        const Eigen::VectorXd p = pi.probs(s);
        for (int a = 0; a < mdp.A; ++a)
          g += gt * mu[s] * p[a] * (fv.Q[t](s, a) - b[s]) * pi.grad_log_prob(s, a);
      }
      mu = (P_pi.transpose() * mu).eval();
      gt *= mdp.gamma;
    }
    return g;
  }
  const ExactValues ev = exact_values(mdp, pi);
  const Eigen::VectorXd d = discounted_occupancy(mdp, pi);
  for (int s = 0; s < mdp.S; ++s) {
    const Eigen::VectorXd p = pi.probs(s);
    for (int a = 0; a < mdp.A; ++a)
      g += d[s] * p[a] * (ev.Q(s, a) - b[s]) * pi.grad_log_prob(s, a);
  }
  return g;
}

}  // namespace

double verify_baseline_invariance(const TabularMDP& mdp, const TabularPolicy& pi,
                                  const Eigen::VectorXd& b) {
  const Eigen::VectorXd with_b = baselined_gradient(mdp, pi, b);
  const Eigen::VectorXd without = baselined_gradient(mdp, pi, Eigen::VectorXd::Zero(mdp.S));
  return (with_b - without).cwiseAbs().maxCoeff();
}

}  // namespace acre
