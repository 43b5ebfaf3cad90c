#include "acre/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "acre/checkpoint.hpp"
#include "acre/metrics.hpp"

namespace acre {
namespace {

// ACRE_LOG: quiet | info (default) | debug
int log_level() {
  static const int lvl = [] {
    const char* e = std::getenv("ACRE_LOG");
    if (e == nullptr) return 1;
    const std::string s = e;
    if (s == "quiet") return 0;
    if (s == "debug") return 2;
    return 1;
  }();
  return lvl;
}

void window_stats(const std::deque<EpisodeStat>& recent, double* mean_ret, double* succ) {
  if (recent.empty()) {
    *mean_ret = 0.0;
    *succ = 0.0;
    return;
  }
  double r = 0.0, s = 0.0;
  for (const EpisodeStat& e : recent) {
    r += e.ret;
    s += e.success ? 1.0 : 0.0;
  }
  *mean_ret = r / static_cast<double>(recent.size());
  *succ = s / static_cast<double>(recent.size());
}

}  // namespace

TrainerState make_trainer(const RunConfig& cfg) {
  TrainerState st;
  st.cfg = cfg;
  for (int w = 0; w < cfg.workers; ++w) {
    st.envs.push_back(make_env(cfg.env));
    st.streams.push_back(RandomStream::split(cfg.seed, 1 + static_cast<std::uint64_t>(w)));
    RolloutState rs;
    rs.next_episode_id = w;
    rs.episode_id_stride = cfg.workers;
    st.rollouts.push_back(std::move(rs));
  }
  const EnvSpec& spec = st.envs[0]->spec();

  RandomStream init = RandomStream::split(cfg.seed, 0);
  if (spec.num_actions > 0) {
    st.policy = make_categorical_policy(spec.obs_dim, cfg.hidden, spec.num_actions, init);
  } else {
    st.policy =
        make_gaussian_policy(spec.obs_dim, cfg.hidden, spec.action_dim, cfg.state_dep_sigma, init);
  }
  st.vf = make_value_function(spec.obs_dim, cfg.hidden, init);
  st.opt.theta = make_adam(static_cast<int>(policy_params(st.policy).values.size()), cfg.ppo.lr);
  st.opt.phi = make_adam(static_cast<int>(st.vf.phi.values.size()), cfg.ppo.lr);
  return st;
}

int run_training(const RunConfig& cfg, const std::string& resume_ckpt) {
  TrainerState st = resume_ckpt.empty() ? make_trainer(cfg) : resume_checkpoint(cfg, resume_ckpt);

  MetricsWriter mw;
  if (!resume_ckpt.empty() && std::filesystem::exists(cfg.metrics_path)) {
    mw.open_append(cfg.metrics_path);
  } else {
    mw.open_fresh(cfg.metrics_path);
  }

  const int per_worker = cfg.ppo.horizon / cfg.workers;
  TrajectoryBuffer buffer;
  buffer.gamma = cfg.ppo.gamma;
  buffer.horizon = cfg.ppo.horizon;

  while (st.env_steps < cfg.total_steps) {
    const double progress =
        cfg.total_steps > 0 ? static_cast<double>(st.env_steps) / static_cast<double>(cfg.total_steps)
                            : 1.0;
    MetricsRow row;
    try {
      buffer.clear();
      std::vector<EpisodeStat> stats;
      for (int w = 0; w < cfg.workers; ++w) {
        st.envs[w]->set_progress(progress);
        auto s = rollout(*st.envs[w], st.policy, &st.vf, buffer, per_worker, st.streams[w],
                         st.rollouts[w]);
        stats.insert(stats.end(), s.begin(), s.end());
      }
      st.env_steps += cfg.ppo.horizon;

      UpdateReport first, last;
      if (cfg.algo == "reinforce") {
        first = last = reinforce_update(buffer, st.policy, cfg.ppo.gamma, cfg.ppo.lr);
      } else if (cfg.algo == "a2c") {
        first = last = actor_critic_update(buffer, st.policy, st.vf, cfg.ppo, st.opt);
      } else {
        const std::vector<UpdateReport> reports =
            ppo_update(buffer, st.policy, st.vf, cfg.ppo, st.opt);
        first = reports.front();
        last = reports.back();
      }
      ++st.updates;

      for (const EpisodeStat& e : stats) {
        st.recent.push_back(e);
        ++st.episodes_done;
        while (st.recent.size() > 100) st.recent.pop_front();
      }
      row.step = st.env_steps;
      row.episodes = st.episodes_done;
      window_stats(st.recent, &row.mean_return, &row.success_rate);
      row.policy_loss = last.policy_loss;
      row.value_loss = last.value_loss;
      row.entropy = last.entropy;
      row.ratio_epoch0 = first.mean_ratio;
      row.clip_fraction = last.clip_fraction;
      row.approx_kl = last.approx_kl;
      row.grad_norm = last.grad_norm;
    } catch (const std::exception& e) {
      // updates roll themselves back, so what we save is the last good state
      std::fprintf(stderr, "[train] aborting: %s\n", e.what());
      save_checkpoint(st, cfg.checkpoint_path);
      return 1;
    }
    mw.write_row(row);

    if (cfg.checkpoint_interval > 0) {
      const long prev = st.env_steps - cfg.ppo.horizon;
      if (st.env_steps / cfg.checkpoint_interval > prev / cfg.checkpoint_interval)
        save_checkpoint(st, cfg.checkpoint_path);
    }
    if (log_level() >= 1) {
      std::fprintf(stderr, "[train] step %ld/%ld updates %ld episodes %ld return %.3f success %.2f\n",
                   st.env_steps, cfg.total_steps, st.updates, st.episodes_done, row.mean_return,
                   row.success_rate);
    }
  }

  save_checkpoint(st, cfg.checkpoint_path);
  mw.flush();
  if (log_level() >= 1) {
    std::fprintf(stderr, "[train] finished at step %ld; checkpoint %s, metrics %s\n", st.env_steps,
                 cfg.checkpoint_path.c_str(), cfg.metrics_path.c_str());
  }
  return 0;
}

EvalSummary evaluate(TrainerState& st, int episodes, bool deterministic) {
  EvalSummary sum;
  if (episodes <= 0) return sum;
  Environment& env = *st.envs[0];
  RandomStream rng = RandomStream::split(st.cfg.seed, kEvalStreamIndex);
  env.attach_rng(rng);
  env.set_progress(1.0);

  std::vector<double> returns;
  returns.reserve(episodes);
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd obs = env.reset(rng);
    double ret = 0.0;
    StepResult sr;
    do {
      const Eigen::VectorXd action = deterministic
                                         ? deterministic_action(st.policy, obs)
                                         : sample_action(st.policy, obs, rng).action;
      sr = env.step(action);
      ret += sr.reward;
      obs = sr.obs;
    } while (sr.kind == TerminationKind::Running);
    returns.push_back(ret);
    if (sr.success) ++successes;
  }

  sum.episodes = episodes;
  double m = 0.0;
  for (double r : returns) m += r;
  m /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - m) * (r - m);
  sum.mean_return = m;
  sum.sd_return = episodes > 1 ? std::sqrt(var / (episodes - 1)) : 0.0;
  sum.success_rate = static_cast<double>(successes) / episodes;
  return sum;
}

int run_eval(const std::string& ckpt_path, int episodes, bool deterministic,
             const std::string& summary_path) {
  TrainerState st = load_checkpoint(ckpt_path);
  const EvalSummary sum = evaluate(st, episodes, deterministic);

  nlohmann::json j = {{"episodes", sum.episodes},
                      {"mean_return", sum.mean_return},
                      {"sd_return", sum.sd_return},
                      {"success_rate", sum.success_rate},
                      {"deterministic", deterministic}};
  std::ofstream out(summary_path, std::ios::out | std::ios::trunc);
  if (!out) throw std::runtime_error("eval: cannot open " + summary_path);
  out << j.dump(2) << "\n";

  std::printf("episodes %d mean_return %s sd_return %s success_rate %s\n", sum.episodes,
              format_double(sum.mean_return).c_str(), format_double(sum.sd_return).c_str(),
              format_double(sum.success_rate).c_str());
  return 0;
}

}  // namespace acre
