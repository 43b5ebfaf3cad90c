#include "acre/algos.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace acre {
namespace {

// Segments that are whole episodes: start at in-episode step 0 and end on a
// terminal transition. Tail fragments cut by the buffer boundary are not
// valid Monte-Carlo episodes.
std::vector<std::pair<int, int>> complete_segments(const TrajectoryBuffer& buffer) {
  std::vector<std::pair<int, int>> out;
  for (auto [lo, hi] : episode_segments(buffer)) {
    const bool starts_fresh = buffer.transitions[lo].step == 0;
    const bool ends_terminal =
        buffer.transitions[hi - 1].termination != TerminationKind::Running;
    if (starts_fresh && ends_terminal) out.emplace_back(lo, hi);
  }
  return out;
}

Eigen::VectorXd segment_rewards(const TrajectoryBuffer& buffer, int lo, int hi) {
  Eigen::VectorXd r(hi - lo);
  for (int t = lo; t < hi; ++t) r[t - lo] = buffer.transitions[t].reward;
  return r;
}

double mean_plain_entropy(const Policy& policy, const TrajectoryBuffer& buffer) {
  if (entropy_is_state_independent(policy)) {
    return entropy(policy, buffer.transitions.front().obs);
  }
  double acc = 0.0;
  for (const Transition& tr : buffer.transitions) acc += entropy(policy, tr.obs);
  return acc / static_cast<double>(buffer.size());
}

// Score-weighted Monte-Carlo gradient over complete episodes:
// (1/M) sum_j sum_t gamma^t (R_t - b(o_t, t)) grad log pi. Shared by the
// REINFORCE update and the estimator probes.
Eigen::VectorXd mc_score_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                  double gamma, const TimedBaseline* baseline,
                                  double* objective_out) {
  const auto segs = complete_segments(buffer);
  if (segs.empty()) {
    throw std::invalid_argument("policy-gradient estimator: buffer holds no complete episode");
  }
  const double inv_m = 1.0 / static_cast<double>(segs.size());

  Tape tape;
  const ParamVector& theta = policy_params(policy);
  TapedParams tp = lift(tape, theta.values);
  std::vector<Var> terms;
  terms.reserve(buffer.size());
  for (auto [lo, hi] : segs) {
    const Eigen::VectorXd rets = discounted_returns(segment_rewards(buffer, lo, hi), gamma);
    for (int t = lo; t < hi; ++t) {
      const Transition& tr = buffer.transitions[t];
      const double b = baseline != nullptr ? (*baseline)(tr.obs, tr.step) : 0.0;
      const double w = std::pow(gamma, tr.step) * (rets[t - lo] - b) * inv_m;
      terms.push_back(log_prob(policy, tp, tr.obs, tr.action) * w);
    }
  }
  Var obj = sum(terms);
  if (objective_out != nullptr) *objective_out = obj.value();
  tape.backward(obj);
  return grad_of(tape, tp);
}

}  // namespace

void validate(const PPOConfig& cfg) {
  if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0))
    throw std::invalid_argument("PPOConfig: clip_eps must lie in (0,1)");
  if (cfg.entropy_coef < 0.0)
    throw std::invalid_argument("PPOConfig: entropy_coef must be nonnegative");
  if (cfg.epochs < 1) throw std::invalid_argument("PPOConfig: epochs must be >= 1");
  if (cfg.horizon < 1) throw std::invalid_argument("PPOConfig: horizon must be >= 1");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("PPOConfig: gamma must lie in [0,1)");
  if (cfg.lr <= 0.0) throw std::invalid_argument("PPOConfig: lr must be positive");
  if (cfg.value_target_mode != "kstep" && cfg.value_target_mode != "mc")
    throw std::invalid_argument("PPOConfig: value_target_mode must be \"kstep\" or \"mc\"");
  if (cfg.k_steps < 0) throw std::invalid_argument("PPOConfig: k_steps must be >= 0");
  if (cfg.kl_stop < 0.0) throw std::invalid_argument("PPOConfig: kl_stop must be >= 0");
}

UpdateReport reinforce_update(TrajectoryBuffer& buffer, Policy& policy, double gamma,
                              double lr) {
  if (buffer.transitions.empty()) throw std::invalid_argument("reinforce_update: empty buffer");
  if (lr <= 0.0) throw std::invalid_argument("reinforce_update: lr must be positive");
  double objective = 0.0;
  const Eigen::VectorXd g = mc_score_gradient(buffer, policy, gamma, nullptr, &objective);
  if (!g.allFinite()) throw std::domain_error("reinforce_update: non-finite gradient");
  policy_params(policy).values += lr * g;  // plain SGD ascent, Eq.-(9) style

  UpdateReport r;
  r.policy_loss = -objective;
  r.entropy = mean_plain_entropy(policy, buffer);
  r.mean_ratio = 1.0;
  r.grad_norm = g.norm();
  return r;
}

UpdateReport actor_critic_update(TrajectoryBuffer& buffer, Policy& policy,
                                 ValueFunction& vf, const PPOConfig& cfg, OptimState& opt) {
  validate(cfg);
  if (buffer.transitions.empty())
    throw std::invalid_argument("actor_critic_update: empty buffer");
  const int n = buffer.size();
  const ValueFn vfn = [&vf](const Eigen::VectorXd& o) { return value(vf, o); };
  const BootstrapConfig bc{cfg.bootstrap_success_value, !cfg.refresh_bootstrap};
  const Eigen::VectorXd qhat = k_step_targets(buffer, cfg.k_steps, vfn, bc);
  Eigen::VectorXd vals(n);
  for (int i = 0; i < n; ++i) vals[i] = value(vf, buffer.transitions[i].obs);
  const Eigen::VectorXd adv = advantages(qhat, vals);
  const double inv_m = 1.0 / static_cast<double>(episode_segments(buffer).size());

  ParamVector& theta = policy_params(policy);
  const Eigen::VectorXd theta0 = theta.values, phi0 = vf.phi.values;
  const AdamState opt_theta0 = opt.theta, opt_phi0 = opt.phi;
  try {
    Tape tape;
    TapedParams tp = lift(tape, theta.values);
    TapedParams pp = lift(tape, vf.phi.values);
    std::vector<Var> terms;
    terms.reserve(n);
    std::vector<Var> vnodes;
    vnodes.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Transition& tr = buffer.transitions[i];
      const double w = std::pow(cfg.gamma, tr.step) * adv[i] * inv_m;
      terms.push_back(log_prob(policy, tp, tr.obs, tr.action) * w);
      vnodes.push_back(value(vf, pp, tr.obs));
    }
    Var obj = sum(terms);
    Var vloss = value_loss(vnodes, qhat);
    Var total = vloss - obj;  // descend the critic loss, ascend the estimator
    if (!std::isfinite(total.value()))
      throw std::domain_error("actor_critic_update: non-finite loss");
    tape.backward(total);
    const Eigen::VectorXd gt = grad_of(tape, tp);
    const Eigen::VectorXd gp = grad_of(tape, pp);
    adam_step(theta.values, gt, opt.theta);
    adam_step(vf.phi.values, gp, opt.phi);

    UpdateReport r;
    r.policy_loss = -obj.value();
    r.value_loss = vloss.value();
    r.entropy = mean_plain_entropy(policy, buffer);
    r.mean_ratio = 1.0;
    r.grad_norm = std::sqrt(gt.squaredNorm() + gp.squaredNorm());
    return r;
  } catch (...) {
    theta.values = theta0;
    vf.phi.values = phi0;
    opt.theta = opt_theta0;
    opt.phi = opt_phi0;
    throw;
  }
}

Var compute_ratio(Var logp_new, double logp_old) {
  if (!std::isfinite(logp_new.value()) || !std::isfinite(logp_old))
    throw std::domain_error("compute_ratio: non-finite log-probability");
  return exp(logp_new - logp_old);
}

Var clipped_surrogate(std::span<const Var> ratios, std::span<const double> adv, double eps) {
  if (ratios.size() != adv.size())
    throw std::invalid_argument("clipped_surrogate: ratio/advantage length mismatch");
  if (ratios.empty()) throw std::invalid_argument("clipped_surrogate: empty input");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("clipped_surrogate: eps must lie in (0,1)");
  std::vector<Var> terms;
  terms.reserve(ratios.size());
  for (size_t i = 0; i < ratios.size(); ++i) {
    terms.push_back(min(ratios[i] * adv[i], clip(ratios[i], 1.0 - eps, 1.0 + eps) * adv[i]));
  }
  return mean(terms);
}

std::vector<UpdateReport> ppo_update(TrajectoryBuffer& buffer, Policy& policy,
                                     ValueFunction& vf, const PPOConfig& cfg,
                                     OptimState& opt) {
  validate(cfg);
  if (buffer.transitions.empty()) throw std::invalid_argument("ppo_update: empty buffer");
  const int n = buffer.size();
  ParamVector& theta = policy_params(policy);
  const Eigen::VectorXd theta0 = theta.values, phi0 = vf.phi.values;
  const AdamState opt_theta0 = opt.theta, opt_phi0 = opt.phi;

  std::vector<UpdateReport> reports;
  reports.reserve(cfg.epochs);
  Tape tape;  // reused across epochs, clear() keeps the node storage
  try {
    for (int k = 0; k < cfg.epochs; ++k) {
      // Targets and advantages are refreshed with the epoch's phi; log-prob
      // snapshots in the buffer stay fixed for every epoch.
      const ValueFn vfn = [&vf](const Eigen::VectorXd& o) { return value(vf, o); };
      const BootstrapConfig bc{cfg.bootstrap_success_value, !cfg.refresh_bootstrap};
      const Eigen::VectorXd targets = cfg.value_target_mode == "mc"
                                          ? buffer_mc_returns(buffer)
                                          : k_step_targets(buffer, cfg.k_steps, vfn, bc);
      Eigen::VectorXd vals(n);
      for (int i = 0; i < n; ++i) vals[i] = value(vf, buffer.transitions[i].obs);
      Eigen::VectorXd adv = advantages(targets, vals);
      if (cfg.normalize_adv && n >= 2) adv = normalize_advantages(adv);

      tape.clear();
      TapedParams tp = lift(tape, theta.values);
      TapedParams pp = lift(tape, vf.phi.values);
      std::vector<Var> ratios;
      ratios.reserve(n);
      std::vector<Var> vnodes;
      vnodes.reserve(n);
      double kl_sum = 0.0, ratio_sum = 0.0;
      int clipped = 0;
      for (int i = 0; i < n; ++i) {
        const Transition& tr = buffer.transitions[i];
        Var lp = log_prob(policy, tp, tr.obs, tr.action);
        Var rho = compute_ratio(lp, tr.logp_old);
        kl_sum += tr.logp_old - lp.value();
        ratio_sum += rho.value();
        if (rho.value() < 1.0 - cfg.clip_eps || rho.value() > 1.0 + cfg.clip_eps) ++clipped;
        ratios.push_back(rho);
        vnodes.push_back(value(vf, pp, tr.obs));
      }
      Var lclip = clipped_surrogate(ratios, std::span<const double>(adv.data(), n), cfg.clip_eps);
      Var vloss = value_loss(vnodes, targets);
      Var ent = entropy_is_state_independent(policy)
                    ? entropy(policy, tp, buffer.transitions.front().obs)
                    : [&] {
                        std::vector<Var> es;
                        es.reserve(n);
                        for (int i = 0; i < n; ++i)
                          es.push_back(entropy(policy, tp, buffer.transitions[i].obs));
                        return mean(es);
                      }();
      Var total = vloss - lclip - ent * cfg.entropy_coef;
      if (!std::isfinite(total.value()))
        throw std::domain_error("ppo_update: non-finite loss at epoch " + std::to_string(k));
      tape.backward(total);
      const Eigen::VectorXd gt = grad_of(tape, tp);
      const Eigen::VectorXd gp = grad_of(tape, pp);
      adam_step(theta.values, gt, opt.theta);
      adam_step(vf.phi.values, gp, opt.phi);

      UpdateReport r;
      r.policy_loss = -lclip.value();
      r.value_loss = vloss.value();
      r.entropy = ent.value();
      r.mean_ratio = ratio_sum / n;
      r.clip_fraction = static_cast<double>(clipped) / n;
      r.approx_kl = kl_sum / n;
      r.grad_norm = std::sqrt(gt.squaredNorm() + gp.squaredNorm());
      reports.push_back(r);
      // The exceeding epoch already stepped; later epochs are skipped.
      if (cfg.kl_stop > 0.0 && r.approx_kl > cfg.kl_stop) break;
    }
  } catch (...) {
    theta.values = theta0;
    vf.phi.values = phi0;
    opt.theta = opt_theta0;
    opt.phi = opt_phi0;
    throw;
  }
  return reports;
}

Eigen::VectorXd reinforce_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                   double gamma) {
  return mc_score_gradient(buffer, policy, gamma, nullptr, nullptr);
}

Eigen::VectorXd advantage_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                   double gamma, const TimedBaseline& baseline) {
  return mc_score_gradient(buffer, policy, gamma, &baseline, nullptr);
}

Eigen::VectorXd kstep_advantage_gradient(const TrajectoryBuffer& buffer, const Policy& policy,
                                         double gamma, int K, const ValueFn& vf,
                                         const BootstrapConfig& bc) {
  if (buffer.transitions.empty())
    throw std::invalid_argument("kstep_advantage_gradient: empty buffer");
  if (K < 1) throw std::invalid_argument("kstep_advantage_gradient: K must be >= 1");
  const int n = buffer.size();
  const double inv_m = 1.0 / static_cast<double>(episode_segments(buffer).size());
  Tape tape;
  TapedParams tp = lift(tape, policy_params(policy).values);
  std::vector<Var> terms;
  terms.reserve(n);
  for (int t = 0; t < n; ++t) {
    const Transition& tr = buffer.transitions[t];
    const double qhat = k_step_bootstrap_q(buffer, t, K, vf, bc);
    const double w = std::pow(gamma, tr.step) * (qhat - vf(tr.obs)) * inv_m;
    terms.push_back(log_prob(policy, tp, tr.obs, tr.action) * w);
  }
  Var obj = sum(terms);
  tape.backward(obj);
  return grad_of(tape, tp);
}

}  // namespace acre
