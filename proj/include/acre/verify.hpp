#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "acre/oracle.hpp"

namespace acre {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured value vs tolerance
};

// Autodiff vs central finite differences over random networks; covers
// Gaussian/categorical log_prob, entropies, and the critic's value_loss.
struct GradcheckReport {
  int cases = 0;
  double worst = 0.0;  // max relative error seen
  std::string worst_case;
};
GradcheckReport run_gradcheck(int cases, std::uint64_t seed);

// Exact-enumeration identities on a finite-horizon MDP: the past-reward
// score term vanishes, and action-independent baselines leave the gradient
// unchanged.
struct IdentityReport {
  double past_reward_softmax = 0.0;
  double past_reward_network = 0.0;
  double baseline_bounded = 0.0;  // worst over several bounded baselines
  double baseline_large = 0.0;    // b ~ 1e6
};
IdentityReport run_identity_checks(const TabularMDP& mdp);

// Shared measurement for the unbiasedness and variance-reduction criteria:
// the same episode set feeds both estimators.
struct EstimatorReport {
  long episodes = 0;
  Eigen::VectorXd exact;        // oracle gradient
  Eigen::VectorXd mean;         // Monte-Carlo mean of REINFORCE estimates
  Eigen::VectorXd se;           // standard error per component
  Eigen::VectorXd var_plain;    // REINFORCE per-component variance
  Eigen::VectorXd var_baseline; // oracle-V-baselined per-component variance
  double max_abs_z = 0.0;       // max |mean - exact| / se
  bool baseline_strictly_lower = false;
  double variance_ratio = 0.0;  // sum(var_baseline) / sum(var_plain)
};
EstimatorReport measure_estimators(const TabularMDP& mdp, long episodes, std::uint64_t seed);

std::vector<CheckResult> verify_gradcheck();
std::vector<CheckResult> verify_identities(const std::string& mdp_path);
std::vector<CheckResult> verify_unbiasedness(const std::string& mdp_path);

// suite: gradcheck | identities | unbiasedness | all. Prints one line per
// check; exit 0 iff all pass.
int run_verify(const std::string& suite);

}  // namespace acre
