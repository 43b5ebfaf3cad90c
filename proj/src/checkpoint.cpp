#include "acre/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "acre/jsonio.hpp"

namespace acre {
namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (int i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

nlohmann::json adam_json(const AdamState& a) {
  return {{"m", vec_json(a.m)},     {"v", vec_json(a.v)},       {"step", a.step},
          {"lr", a.lr},             {"beta1", a.beta1},         {"beta2", a.beta2},
          {"eps", a.eps}};
}

AdamState adam_from(const nlohmann::json& j) {
  require_allowed_keys(j, {"m", "v", "step", "lr", "beta1", "beta2", "eps"}, "checkpoint.optim");
  AdamState a;
  a.m = vec_from(j.at("m"));
  a.v = vec_from(j.at("v"));
  a.step = j.at("step").get<long>();
  a.lr = j.at("lr").get<double>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.eps = j.at("eps").get<double>();
  if (a.m.size() != a.v.size()) throw std::invalid_argument("checkpoint: optimizer m/v size mismatch");
  return a;
}

nlohmann::json params_json(const ParamVector& p) {
  return {{"sizes", p.arch.sizes}, {"extra", p.extra}, {"values", vec_json(p.values)}};
}

ParamVector params_from(const nlohmann::json& j, const std::string& where) {
  require_allowed_keys(j, {"sizes", "extra", "values"}, where);
  ParamVector p;
  p.arch.sizes = j.at("sizes").get<std::vector<int>>();
  p.extra = j.at("extra").get<int>();
  p.values = vec_from(j.at("values"));
  const int expect = mlp_param_count(p.arch) + p.extra;
  if (p.values.size() != expect) {
    throw std::invalid_argument(where + ": parameter count " + std::to_string(p.values.size()) +
                                " does not fit the declared layout (" + std::to_string(expect) + ")");
  }
  return p;
}

}  // namespace

nlohmann::json checkpoint_json(const TrainerState& st) {
  nlohmann::json policy_j;
  if (const auto* g = std::get_if<GaussianPolicy>(&st.policy)) {
    policy_j = {{"kind", "gaussian"},
                {"n_actions", g->n_actions},
                {"state_dep_sigma", g->state_dep_sigma},
                {"params", params_json(g->theta)}};
  } else {
    const auto& c = std::get<CategoricalPolicy>(st.policy);
    policy_j = {{"kind", "categorical"},
                {"n_actions", c.n_actions},
                {"params", params_json(c.theta)}};
  }

  nlohmann::json workers = nlohmann::json::array();
  for (size_t w = 0; w < st.envs.size(); ++w) {
    workers.push_back({{"stream", st.streams[w].state()},
                       {"env", st.envs[w]->state_json()},
                       {"rollout", st.rollouts[w].to_json()}});
  }

  nlohmann::json recent = nlohmann::json::array();
  for (const EpisodeStat& e : st.recent) {
    recent.push_back({{"id", e.id}, {"ret", e.ret}, {"len", e.length}, {"success", e.success}});
  }

  return {{"version", kCheckpointVersion},
          {"config", to_json(st.cfg)},
          {"env_steps", st.env_steps},
          {"updates", st.updates},
          {"episodes_done", st.episodes_done},
          {"policy", policy_j},
          {"value", params_json(st.vf.phi)},
          {"optim", {{"theta", adam_json(st.opt.theta)}, {"phi", adam_json(st.opt.phi)}}},
          {"workers", workers},
          {"recent_episodes", recent}};
}

void save_checkpoint(const TrainerState& st, const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp);
    out << checkpoint_json(st).dump(2) << "\n";
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("checkpoint: cannot rename " + tmp + " to " + path);
}

TrainerState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("checkpoint: " + path + " is not valid JSON: " + e.what());
  }
  require_allowed_keys(j,
                       {"version", "config", "env_steps", "updates", "episodes_done", "policy",
                        "value", "optim", "workers", "recent_episodes"},
                       "checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument("checkpoint: unsupported version");

  TrainerState st;
  st.cfg = parse_run_config(j.at("config"));
  st.env_steps = j.at("env_steps").get<long>();
  st.updates = j.at("updates").get<long>();
  st.episodes_done = j.at("episodes_done").get<long>();

  const nlohmann::json& pj = j.at("policy");
  const std::string kind = pj.at("kind").get<std::string>();
  if (kind == "gaussian") {
    require_allowed_keys(pj, {"kind", "n_actions", "state_dep_sigma", "params"}, "checkpoint.policy");
    GaussianPolicy g;
    g.n_actions = pj.at("n_actions").get<int>();
    g.state_dep_sigma = pj.at("state_dep_sigma").get<bool>();
    g.theta = params_from(pj.at("params"), "checkpoint.policy.params");
    st.policy = std::move(g);
  } else if (kind == "categorical") {
    require_allowed_keys(pj, {"kind", "n_actions", "params"}, "checkpoint.policy");
    CategoricalPolicy c;
    c.n_actions = pj.at("n_actions").get<int>();
    c.theta = params_from(pj.at("params"), "checkpoint.policy.params");
    st.policy = std::move(c);
  } else {
    throw std::invalid_argument("checkpoint: unknown policy kind \"" + kind + "\"");
  }
  st.vf.phi = params_from(j.at("value"), "checkpoint.value");

  const nlohmann::json& oj = j.at("optim");
  require_allowed_keys(oj, {"theta", "phi"}, "checkpoint.optim");
  st.opt.theta = adam_from(oj.at("theta"));
  st.opt.phi = adam_from(oj.at("phi"));
  if (st.opt.theta.m.size() != policy_params(st.policy).values.size())
    throw std::invalid_argument("checkpoint: policy optimizer size mismatch");
  if (st.opt.phi.m.size() != st.vf.phi.values.size())
    throw std::invalid_argument("checkpoint: value optimizer size mismatch");

  const nlohmann::json& wj = j.at("workers");
  if (static_cast<int>(wj.size()) != st.cfg.workers)
    throw std::invalid_argument("checkpoint: worker count mismatch with config");
  for (const auto& w : wj) {
    require_allowed_keys(w, {"stream", "env", "rollout"}, "checkpoint.workers");
    auto env = make_env(st.cfg.env);
    env->set_state(w.at("env"));
    RandomStream rs(0);
    rs.set_state(w.at("stream").get<std::string>());
    st.envs.push_back(std::move(env));
    st.streams.push_back(std::move(rs));
    st.rollouts.push_back(RolloutState::from_json(w.at("rollout")));
  }
  // env/checkpoint coherence: the rebuilt env must feed the saved networks
  const int obs_dim = st.envs[0]->spec().obs_dim;
  if (policy_params(st.policy).arch.input() != obs_dim || st.vf.phi.arch.input() != obs_dim)
    throw std::invalid_argument("checkpoint: env observation width does not match the networks");

  for (const auto& e : j.at("recent_episodes")) {
    require_allowed_keys(e, {"id", "ret", "len", "success"}, "checkpoint.recent_episodes");
    st.recent.push_back({e.at("id").get<long>(), e.at("ret").get<double>(),
                         e.at("len").get<int>(), e.at("success").get<bool>()});
  }
  return st;
}

TrainerState resume_checkpoint(const RunConfig& new_cfg, const std::string& path) {
  TrainerState st = load_checkpoint(path);
  nlohmann::json a = to_json(st.cfg);
  nlohmann::json b = to_json(new_cfg);
  // budget and output locations may change across a resume; nothing else may
  for (const char* k : {"total_steps", "metrics_path", "checkpoint_path", "checkpoint_interval"}) {
    a.erase(k);
    b.erase(k);
  }
  if (a != b)
    throw std::invalid_argument("resume: config differs from the checkpoint beyond budget/paths");
  st.cfg = new_cfg;
  return st;
}

}  // namespace acre
