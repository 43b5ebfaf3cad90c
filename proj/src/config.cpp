#include "acre/config.hpp"

#include <fstream>
#include <stdexcept>

#include "acre/jsonio.hpp"

namespace acre {

RunConfig parse_run_config(const nlohmann::json& j) {
  require_allowed_keys(j,
                       {"env", "algo", "ppo", "network", "seed", "total_steps",
                        "checkpoint_interval", "workers", "metrics_path", "checkpoint_path"},
                       "config");
  RunConfig cfg;
  if (!j.contains("env")) throw std::invalid_argument("config: missing \"env\"");
  cfg.env = j.at("env");
  if (!cfg.env.is_object() || !cfg.env.contains("name"))
    throw std::invalid_argument("config: env must be an object with a \"name\"");

  cfg.algo = json_get<std::string>(j, "algo", cfg.algo);
  if (cfg.algo != "reinforce" && cfg.algo != "a2c" && cfg.algo != "ppo")
    throw std::invalid_argument("config: algo must be \"reinforce\", \"a2c\" or \"ppo\"");

  if (j.contains("ppo")) {
    const nlohmann::json& p = j.at("ppo");
    require_allowed_keys(p,
                         {"clip_eps", "entropy_coef", "epochs", "horizon", "gamma", "lr",
                          "normalize_adv", "value_target_mode", "k_steps", "kl_stop",
                          "refresh_bootstrap", "bootstrap_success_value"},
                         "config.ppo");
    cfg.ppo.clip_eps = json_get(p, "clip_eps", cfg.ppo.clip_eps);
    cfg.ppo.entropy_coef = json_get(p, "entropy_coef", cfg.ppo.entropy_coef);
    cfg.ppo.epochs = json_get(p, "epochs", cfg.ppo.epochs);
    cfg.ppo.horizon = json_get(p, "horizon", cfg.ppo.horizon);
    cfg.ppo.gamma = json_get(p, "gamma", cfg.ppo.gamma);
    cfg.ppo.lr = json_get(p, "lr", cfg.ppo.lr);
    cfg.ppo.normalize_adv = json_get(p, "normalize_adv", cfg.ppo.normalize_adv);
    cfg.ppo.value_target_mode = json_get(p, "value_target_mode", cfg.ppo.value_target_mode);
    cfg.ppo.k_steps = json_get(p, "k_steps", cfg.ppo.k_steps);
    cfg.ppo.kl_stop = json_get(p, "kl_stop", cfg.ppo.kl_stop);
    cfg.ppo.refresh_bootstrap = json_get(p, "refresh_bootstrap", cfg.ppo.refresh_bootstrap);
    cfg.ppo.bootstrap_success_value =
        json_get(p, "bootstrap_success_value", cfg.ppo.bootstrap_success_value);
  }
  validate(cfg.ppo);

  if (j.contains("network")) {
    const nlohmann::json& n = j.at("network");
    require_allowed_keys(n, {"hidden", "state_dep_sigma"}, "config.network");
    if (n.contains("hidden")) {
      cfg.hidden.clear();
      for (const auto& h : n.at("hidden")) cfg.hidden.push_back(h.get<int>());
    }
    cfg.state_dep_sigma = json_get(n, "state_dep_sigma", cfg.state_dep_sigma);
  }
  for (int h : cfg.hidden) {
    if (h < 1) throw std::invalid_argument("config.network: hidden widths must be >= 1");
  }

  cfg.seed = json_get<std::uint64_t>(j, "seed", cfg.seed);
  cfg.total_steps = json_get<long>(j, "total_steps", cfg.total_steps);
  if (cfg.total_steps < 0) throw std::invalid_argument("config: total_steps must be >= 0");
  cfg.checkpoint_interval = json_get<long>(j, "checkpoint_interval", cfg.checkpoint_interval);
  if (cfg.checkpoint_interval < 0)
    throw std::invalid_argument("config: checkpoint_interval must be >= 0");
  cfg.workers = json_get<int>(j, "workers", cfg.workers);
  if (cfg.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
  if (cfg.ppo.horizon % cfg.workers != 0)
    throw std::invalid_argument("config: ppo.horizon must divide evenly across workers");
  cfg.metrics_path = json_get<std::string>(j, "metrics_path", cfg.metrics_path);
  cfg.checkpoint_path = json_get<std::string>(j, "checkpoint_path", cfg.checkpoint_path);
  if (cfg.metrics_path.empty() || cfg.checkpoint_path.empty())
    throw std::invalid_argument("config: metrics_path and checkpoint_path must be nonempty");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {{"env", cfg.env},
          {"algo", cfg.algo},
          {"ppo",
           {{"clip_eps", cfg.ppo.clip_eps},
            {"entropy_coef", cfg.ppo.entropy_coef},
            {"epochs", cfg.ppo.epochs},
            {"horizon", cfg.ppo.horizon},
            {"gamma", cfg.ppo.gamma},
            {"lr", cfg.ppo.lr},
            {"normalize_adv", cfg.ppo.normalize_adv},
            {"value_target_mode", cfg.ppo.value_target_mode},
            {"k_steps", cfg.ppo.k_steps},
            {"kl_stop", cfg.ppo.kl_stop},
            {"refresh_bootstrap", cfg.ppo.refresh_bootstrap},
            {"bootstrap_success_value", cfg.ppo.bootstrap_success_value}}},
          {"network", {{"hidden", cfg.hidden}, {"state_dep_sigma", cfg.state_dep_sigma}}},
          {"seed", cfg.seed},
          {"total_steps", cfg.total_steps},
          {"checkpoint_interval", cfg.checkpoint_interval},
          {"workers", cfg.workers},
          {"metrics_path", cfg.metrics_path},
          {"checkpoint_path", cfg.checkpoint_path}};
}

}  // namespace acre
