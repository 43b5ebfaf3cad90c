#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "acre/algos.hpp"

namespace acre {

// One run, one document. Every hyperparameter is explicit in to_json so that
// parse -> serialize -> parse is the identity on the normalized form.
struct RunConfig {
  nlohmann::json env;  // forwarded to make_env
  std::string algo = "ppo";  // reinforce | a2c | ppo
  PPOConfig ppo;
  std::vector<int> hidden{64, 64};
  bool state_dep_sigma = false;
  std::uint64_t seed = 0;
  long total_steps = 0;          // decision-step budget
  long checkpoint_interval = 0;  // steps between periodic saves; 0 = final only
  int workers = 1;
  std::string metrics_path = "metrics.csv";
  std::string checkpoint_path = "checkpoint.json";
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace acre
