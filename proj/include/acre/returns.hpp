#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "acre/policy.hpp"
#include "acre/tape.hpp"

namespace acre {

enum class TerminationKind { Running, BootstrapTerminal, TruncateTerminal };

// How the episode's in-buffer block ends, refining TerminationKind with the
// success/time-limit split and the mid-episode buffer cut.
enum class BoundaryKind { UnfinishedTail, TimeLimit, Success, Truncated };

struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
  double reward = 0.0;
  double logp_old = 0.0;
  TerminationKind termination = TerminationKind::Running;
  long episode = 0;
  int step = 0;  // index within the episode, persists across buffer cuts
};

// Per-episode boundary record: the observation following the block's last
// transition (post-terminal, or the running observation for an unfinished
// tail) and the value cached for it at collection time.
struct EpisodeBoundary {
  BoundaryKind kind = BoundaryKind::UnfinishedTail;
  Eigen::VectorXd final_obs;  // empty for Truncated
  double cached_value = 0.0;
};

struct TrajectoryBuffer {
  std::vector<Transition> transitions;
  std::map<long, EpisodeBoundary> boundaries;
  int horizon = 0;      // N at update time
  double gamma = 0.99;  // in [0, 1)

  int size() const { return static_cast<int>(transitions.size()); }
  void clear() {
    transitions.clear();
    boundaries.clear();
  }
};

// Contiguous [begin, end) index ranges of the buffer, one per episode block,
// in storage order.
std::vector<std::pair<int, int>> episode_segments(const TrajectoryBuffer& buffer);

// R_t = sum_{t' >= t} gamma^{t'-t} r_{t'} over one finite reward window;
// R after the window is 0.
Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, double gamma);

// Per-transition in-episode Monte Carlo returns over the whole buffer (no
// bootstrapping; the unfinished tail simply truncates at the buffer edge).
Eigen::VectorXd buffer_mc_returns(const TrajectoryBuffer& buffer);

// Q-hat = sum_{i<K} gamma^i r_{t+i}, stopping early at the episode boundary.
double k_step_truncated_q(const TrajectoryBuffer& buffer, int t, int K);

// Boundary handling for bootstrapped targets.
struct BootstrapConfig {
  // Success endings are absorbing (value 0) unless this override is set.
  bool bootstrap_success_value = false;
  // Use the values cached at collection time instead of re-evaluating the
  // stored boundary observations.
  bool use_collection_cache = false;
};

using ValueFn = std::function<double(const Eigen::VectorXd&)>;

// Q-hat = sum_{i<K} gamma^i r_{t+i} + gamma^K V(o_{t+K}). When the episode
// block ends at step t+j with j <= K, the tail value term is gamma^j times:
// V of the post-terminal observation for time-limit ends and unfinished
// tails, 0 for truncating (failure) ends, and 0 or V per config for
// success (absorbing) ends. K <= 0 means "to the buffer/episode boundary".
double k_step_bootstrap_q(const TrajectoryBuffer& buffer, int t, int K,
                          const ValueFn& vf, const BootstrapConfig& cfg = {});
double k_step_bootstrap_q(const TrajectoryBuffer& buffer, int t, int K,
                          const ValueFunction& vf, const BootstrapConfig& cfg = {});

// All bootstrapped K-step targets at once.
Eigen::VectorXd k_step_targets(const TrajectoryBuffer& buffer, int K,
                               const ValueFn& vf, const BootstrapConfig& cfg = {});

// A-hat = Q-hat - V, both treated as constants downstream.
Eigen::VectorXd advantages(const Eigen::VectorXd& qhat, const Eigen::VectorXd& values);

// Mean 0, standard deviation 1 (population form), denominator floored at
// 1e-8; an all-equal input comes back as zeros.
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv);

// 0.5 * mean((V - target)^2); targets are constants, gradient flows only
// through `values`.
Var value_loss(const std::vector<Var>& values, const Eigen::VectorXd& targets);

// One transition per line, for debugging.
void dump_jsonl(const TrajectoryBuffer& buffer, const std::string& path);

}  // namespace acre
