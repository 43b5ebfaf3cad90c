#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "acre/optim.hpp"
#include "acre/policy.hpp"
#include "acre/returns.hpp"
#include "acre/tape.hpp"

namespace acre {

struct PPOConfig {
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  int epochs = 10;
  int horizon = 2048;  // rollout length N per update cycle
  double gamma = 0.99;
  double lr = 3e-4;
  bool normalize_adv = true;
  std::string value_target_mode = "kstep";  // kstep | mc
  int k_steps = 0;                          // 0: bootstrap at the buffer/episode end
  double kl_stop = 0.0;                     // epoch early-stop ceiling; 0 disables
  bool refresh_bootstrap = true;            // recompute boundary values with current phi
  bool bootstrap_success_value = false;     // success endings: bootstrap instead of 0
};

void validate(const PPOConfig& cfg);

struct UpdateReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
};

// Adam moments for the two networks; owned by the caller so they persist
// across update cycles and serialize into checkpoints.
struct OptimState {
  AdamState theta;
  AdamState phi;
};

// Plain SGD ascent on (1/M) sum_j sum_t gamma^t R_t grad log pi. Uses only
// the buffer's complete episodes; one gradient step per call.
UpdateReport reinforce_update(TrajectoryBuffer& buffer, Policy& policy, double gamma,
                              double lr);

// One Adam step each for policy and critic: the policy follows
// (1/M) sum_j sum_t gamma^t A_t grad log pi with K-step bootstrapped
// advantages, the critic descends value_loss on the same targets.
UpdateReport actor_critic_update(TrajectoryBuffer& buffer, Policy& policy,
                                 ValueFunction& vf, const PPOConfig& cfg, OptimState& opt);

// rho = exp(logp_new - logp_old), differentiable through logp_new only.
Var compute_ratio(Var logp_new, double logp_old);

// mean_t min(rho_t A_t, clip(rho_t, 1-eps, 1+eps) A_t)
Var clipped_surrogate(std::span<const Var> ratios, std::span<const double> adv, double eps);

// K_epochs full-batch steps on L = -L_clip + L_value - alpha entropy.
// logp_old stays pinned to the collection-time snapshot; targets and
// advantages are recomputed each epoch with the current phi. A non-finite
// loss or gradient rolls theta, phi, and the Adam moments back to their
// pre-update snapshots and throws. Returns one report per completed epoch.
std::vector<UpdateReport> ppo_update(TrajectoryBuffer& buffer, Policy& policy,
                                     ValueFunction& vf, const PPOConfig& cfg,
                                     OptimState& opt);

// -- estimator probes (no parameter update) --

// (1/M) sum_j sum_t gamma^t R_t grad log pi over complete episodes, the
// Eq.-(9) sample estimate.
Eigen::VectorXd reinforce_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                   double gamma);

// Same estimator with an action-independent baseline subtracted from R_t.
// The baseline sees (observation, in-episode step) so finite-horizon oracle
// values V_t(s) qualify.
using TimedBaseline = std::function<double(const Eigen::VectorXd&, int)>;
Eigen::VectorXd advantage_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                   double gamma, const TimedBaseline& baseline);

// K-step bootstrapped advantage estimator over all segments:
// (1/M) sum sum gamma^t (Qhat_K(t) - V(o_t)) grad log pi with V also the
// bootstrap function.
Eigen::VectorXd kstep_advantage_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                         double gamma, int K, const ValueFn& vf,
                                         const BootstrapConfig& bc = {});

}  // namespace acre
