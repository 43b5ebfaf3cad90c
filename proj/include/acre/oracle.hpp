#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "acre/policy.hpp"

namespace acre {

// Explicit tabular MDP. P[a] is the S x S transition matrix of action a,
// R(s, a) the expected immediate reward. horizon > 0 selects finite-horizon
// (enumeration / backward-induction) mode; horizon 0 means infinite-horizon
// discounted mode (gamma < 1 required).
struct TabularMDP {
  int S = 0;
  int A = 0;
  double gamma = 0.99;
  std::vector<Eigen::MatrixXd> P;
  Eigen::MatrixXd R;
  Eigen::VectorXd rho0;
  int horizon = 0;
};

TabularMDP load_mdp(const std::string& json_text);
TabularMDP load_mdp_file(const std::string& path);
void validate_mdp(const TabularMDP& mdp);

// Differentiable view of a tabular policy: action probabilities per state
// and, when gradients are needed, the flat score vector grad log pi(a|s).
struct TabularPolicy {
  int param_dim = 0;
  std::function<Eigen::VectorXd(int)> probs;
  std::function<Eigen::VectorXd(int, int)> grad_log_prob;
};

// Explicit probability table (no gradient support).
TabularPolicy tabular_policy(const Eigen::MatrixXd& probs);
// Softmax over an S x A logit table; scores are analytic.
TabularPolicy softmax_policy(const Eigen::MatrixXd& logits);
// A categorical network policy evaluated on one-hot state encodings; scores
// come off the autodiff tape.
TabularPolicy network_policy(const CategoricalPolicy& p);

struct ExactValues {
  Eigen::VectorXd V;  // S
  Eigen::MatrixXd Q;  // S x A
};

// Infinite-horizon: dense LU solve of (I - gamma P_pi) V = r_pi; finite
// horizon: backward induction, returning the time-0 values.
ExactValues exact_values(const TabularMDP& mdp, const TabularPolicy& pi);

// Time-dependent values for finite horizon T: V[t] for t = 0..T (V[T] = 0),
// Q[t] for t = 0..T-1.
struct FiniteValues {
  std::vector<Eigen::VectorXd> V;
  std::vector<Eigen::MatrixXd> Q;
};
FiniteValues finite_horizon_values(const TabularMDP& mdp, const TabularPolicy& pi, int T);

// J = sum_s rho0(s) V(s), by the mode the MDP's horizon selects.
double exact_objective(const TabularMDP& mdp, const TabularPolicy& pi);

// Unnormalized discounted state occupancy d(s) = sum_t gamma^t Pr(s_t = s).
Eigen::VectorXd discounted_occupancy(const TabularMDP& mdp, const TabularPolicy& pi);

// Exact grad_theta J: infinite horizon via the occupancy measure, finite
// horizon via time-indexed state distributions and Q values.
Eigen::VectorXd exact_policy_gradient(const TabularMDP& mdp, const TabularPolicy& pi);

// Exhaustively enumerates all length-T trajectories and returns the max
// absolute component of E[sum_t (sum_{t'<t} gamma^{t'} r_{t'}) grad log
// pi(a_t|s_t)], which Appendix A's identity says is 0. Refuses beyond the
// term cap.
double verify_past_reward_identity(const TabularMDP& mdp, const TabularPolicy& pi);

// Max absolute difference between the exact advantage-form gradient with
// state baseline b and with baseline 0 (Appendix B: must vanish).
double verify_baseline_invariance(const TabularMDP& mdp, const TabularPolicy& pi,
                                  const Eigen::VectorXd& b);

inline constexpr long kEnumerationCap = 10'000'000;
inline constexpr int kMaxSolveStates = 200;

}  // namespace acre
