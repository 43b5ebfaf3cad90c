#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "acre/algos.hpp"
#include "acre/config.hpp"
#include "acre/envs.hpp"

namespace acre {

// Everything a run owns; checkpoints are a faithful serialization of this,
// which is what makes single-worker resume bit-exact.
struct TrainerState {
  RunConfig cfg;
  std::vector<std::unique_ptr<Environment>> envs;  // one per worker
  std::vector<RandomStream> streams;               // one per worker
  std::vector<RolloutState> rollouts;              // one per worker
  Policy policy;
  ValueFunction vf;
  OptimState opt;
  long env_steps = 0;  // decision steps consumed
  long updates = 0;
  long episodes_done = 0;
  std::deque<EpisodeStat> recent;  // last <=100 finished episodes
};

// Stream split layout under the root seed: 0 = parameter init, 1+w = worker
// w's sampling stream, kEvalStreamIndex = evaluation.
inline constexpr std::uint64_t kEvalStreamIndex = 1u << 20;

TrainerState make_trainer(const RunConfig& cfg);

// Algorithm 1/2: rollout N steps, one update, repeat until the budget.
// Writes the metrics CSV and checkpoints. resume_ckpt, when nonempty, loads
// that checkpoint and appends to the existing metrics file. Returns the
// process exit code.
int run_training(const RunConfig& cfg, const std::string& resume_ckpt = "");

struct EvalSummary {
  int episodes = 0;
  double mean_return = 0.0;
  double sd_return = 0.0;
  double success_rate = 0.0;
};

EvalSummary evaluate(TrainerState& st, int episodes, bool deterministic);

int run_eval(const std::string& ckpt_path, int episodes, bool deterministic,
             const std::string& summary_path);

}  // namespace acre
