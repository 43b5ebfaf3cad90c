#include "acre/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "acre/jsonio.hpp"

namespace acre {
namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd clamp_unit(const Eigen::VectorXd& a) {
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (int i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

// Walk the CDF; the last index absorbs rounding residue.
int sample_index(const Eigen::VectorXd& probs, RandomStream& rng) {
  const double u = rng.uniform();
  double cdf = 0.0;
  for (int i = 0; i < probs.size() - 1; ++i) {
    cdf += probs[i];
    if (u < cdf) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

StepResult Environment::step(const Eigen::VectorXd& action) {
  StepResult r = apply_action_repeat(*this, action, spec().action_repeat);
  ++decision_steps_;
  if (r.kind == TerminationKind::Running && decision_steps_ >= spec().max_episode_steps) {
    r.kind = TerminationKind::BootstrapTerminal;  // time limit, not a success
  }
  return r;
}

StepResult apply_action_repeat(Environment& env, const Eigen::VectorXd& action, int repeat) {
  if (repeat < 1) throw std::invalid_argument("apply_action_repeat: repeat must be >= 1");
  StepResult out;
  double total = 0.0;
  for (int i = 0; i < repeat; ++i) {
    out = env.substep(action);
    total += out.reward;
    if (out.kind != TerminationKind::Running) break;
  }
  out.reward = total;
  return out;
}

double dense_goal_reward(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref, double k) {
  if (k <= 0.0) throw std::invalid_argument("dense_goal_reward: k must be positive");
  return std::exp(-k * (x_ref - x).squaredNorm());
}

double sparse_goal_reward(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref,
                          double eps_goal) {
  if (eps_goal <= 0.0) throw std::invalid_argument("sparse_goal_reward: eps_goal must be positive");
  return (x_ref - x).squaredNorm() < eps_goal * eps_goal ? 1.0 : 0.0;
}

Eigen::Vector2d egocentric_transform(const Eigen::Vector2d& goal,
                                     const Eigen::Vector2d& agent_pos, double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  const Eigen::Vector2d d = goal - agent_pos;
  // rotate by -heading
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

// ---- point mass ----

PointMassNavEnv::PointMassNavEnv(const PointMassConfig& cfg) : cfg_(cfg) {
  if (cfg.arena_half <= 0) throw std::invalid_argument("pointmass: arena_half must be positive");
  if (cfg.goal_radius <= 0 || cfg.goal_radius >= cfg.arena_half)
    throw std::invalid_argument("pointmass: goal_radius must lie in (0, arena_half)");
  if (cfg.reward_k <= 0) throw std::invalid_argument("pointmass: reward_k must be positive");
  if (cfg.accel_max <= 0) throw std::invalid_argument("pointmass: accel_max must be positive");
  if (cfg.dt_phys <= 0) throw std::invalid_argument("pointmass: dt_phys must be positive");
  if (cfg.action_repeat < 1) throw std::invalid_argument("pointmass: action_repeat must be >= 1");
  if (cfg.max_episode_steps < 1)
    throw std::invalid_argument("pointmass: max_episode_steps must be >= 1");
  spec_.obs_dim = 4;
  spec_.action_dim = 2;
  spec_.num_actions = 0;
  spec_.action_low = Eigen::Vector2d(-cfg.accel_max, -cfg.accel_max);
  spec_.action_high = Eigen::Vector2d(cfg.accel_max, cfg.accel_max);
  spec_.dt_phys = cfg.dt_phys;
  spec_.action_repeat = cfg.action_repeat;
  spec_.max_episode_steps = cfg.max_episode_steps;
}

Eigen::VectorXd PointMassNavEnv::observe() const {
  Eigen::VectorXd o(4);
  if (cfg_.egocentric) {
    // Heading follows the velocity; below a tiny speed there is no heading
    // and the body frame degenerates to the world frame.
    const double speed = vel_.norm();
    const double h = speed < 1e-9 ? 0.0 : std::atan2(vel_.y(), vel_.x());
    const Eigen::Vector2d vb = egocentric_transform(pos_ + vel_, pos_, h);
    const Eigen::Vector2d gb = egocentric_transform(goal_, pos_, h);
    o << vb.x(), vb.y(), gb.x(), gb.y();
  } else {
    o << vel_.x(), vel_.y(), goal_.x() - pos_.x(), goal_.y() - pos_.y();
  }
  return o;
}

Eigen::VectorXd PointMassNavEnv::reset(RandomStream& rng) {
  decision_steps_ = 0;
  const double h = cfg_.arena_half;
  pos_ = {rng.uniform(-h, h), rng.uniform(-h, h)};
  vel_ = {0.0, 0.0};

  // Goals live inside a 0.9 margin so the goal ball never pokes out of the
  // arena. Spawn distance stays above twice the goal radius so the first
  // decision matters; the curriculum caps it early in training.
  const double box = 0.9 * h;
  const double d_full = 2.0 * std::sqrt(2.0) * h;  // no constraint
  const double cap =
      cfg_.curriculum
          ? cfg_.curriculum_start + std::clamp(progress_, 0.0, 1.0) * (d_full - cfg_.curriculum_start)
          : d_full;
  const double lo = 2.0 * cfg_.goal_radius;
  bool placed = false;
  for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
    const Eigen::Vector2d cand(rng.uniform(-box, box), rng.uniform(-box, box));
    const double d = (cand - pos_).norm();
    if (d > lo && d <= cap) {
      goal_ = cand;
      placed = true;
    }
  }
  if (!placed) {
    // Deterministic fallback: step from the start toward the arena center,
    // which never exits the goal box.
    Eigen::Vector2d dir = -pos_;
    if (dir.norm() < 1e-12) dir = {1.0, 0.0};
    dir.normalize();
    goal_ = pos_ + std::max(1.05 * cfg_.goal_radius, std::min(lo, cap)) * dir;
  }
  return observe();
}

StepResult PointMassNavEnv::substep(const Eigen::VectorXd& action) {
  if (action.size() != 2) throw std::invalid_argument("pointmass: action must have 2 components");
  const Eigen::Vector2d a = clamp_unit(action).head<2>() * cfg_.accel_max;
  // explicit Euler: position advances with the pre-update velocity
  pos_ += vel_ * cfg_.dt_phys;
  vel_ += a * cfg_.dt_phys;

  StepResult r;
  r.obs = observe();
  const double h = cfg_.arena_half;
  if (std::abs(pos_.x()) > h || std::abs(pos_.y()) > h) {
    // Leaving the arena truncates with reward 0: a negative penalty would
    // teach early exits, and bootstrapping would reward escape attempts.
    r.reward = 0.0;
    r.kind = TerminationKind::TruncateTerminal;
    return r;
  }
  const bool in_goal = (goal_ - pos_).squaredNorm() < cfg_.goal_radius * cfg_.goal_radius;
  r.reward = cfg_.sparse ? (in_goal ? 1.0 : 0.0) : dense_goal_reward(pos_, goal_, cfg_.reward_k);
  if (in_goal) {
    r.kind = TerminationKind::BootstrapTerminal;
    r.success = true;
  }
  return r;
}

nlohmann::json PointMassNavEnv::state_json() const {
  return {{"pos", vec_to_json(pos_)},
          {"vel", vec_to_json(vel_)},
          {"goal", vec_to_json(goal_)},
          {"decision_steps", decision_steps_},
          {"progress", progress_}};
}

void PointMassNavEnv::set_state(const nlohmann::json& j) {
  require_allowed_keys(j, {"pos", "vel", "goal", "decision_steps", "progress"}, "pointmass state");
  pos_ = vec_from_json(j.at("pos")).head<2>();
  vel_ = vec_from_json(j.at("vel")).head<2>();
  goal_ = vec_from_json(j.at("goal")).head<2>();
  decision_steps_ = j.at("decision_steps").get<int>();
  progress_ = j.at("progress").get<double>();
}

// ---- pendulum ----

PendulumEnv::PendulumEnv(const PendulumConfig& cfg) : cfg_(cfg) {
  if (cfg.torque_max <= 0) throw std::invalid_argument("pendulum: torque_max must be positive");
  if (cfg.gravity <= 0 || cfg.mass <= 0 || cfg.length <= 0)
    throw std::invalid_argument("pendulum: gravity, mass, length must be positive");
  if (cfg.dt_phys <= 0) throw std::invalid_argument("pendulum: dt_phys must be positive");
  if (cfg.action_repeat < 1) throw std::invalid_argument("pendulum: action_repeat must be >= 1");
  if (cfg.max_episode_steps < 1)
    throw std::invalid_argument("pendulum: max_episode_steps must be >= 1");
  if (cfg.reward_k <= 0) throw std::invalid_argument("pendulum: reward_k must be positive");
  spec_.obs_dim = cfg.partial ? 2 : 3;
  spec_.action_dim = 1;
  spec_.num_actions = 0;
  spec_.action_low = Eigen::VectorXd::Constant(1, -cfg.torque_max);
  spec_.action_high = Eigen::VectorXd::Constant(1, cfg.torque_max);
  spec_.dt_phys = cfg.dt_phys;
  spec_.action_repeat = cfg.action_repeat;
  spec_.max_episode_steps = cfg.max_episode_steps;
}

Eigen::VectorXd PendulumEnv::observe() const {
  Eigen::VectorXd o(spec_.obs_dim);
  if (cfg_.partial) {
    o << std::sin(angle_), std::cos(angle_);
  } else {
    o << std::sin(angle_), std::cos(angle_), omega_;
  }
  return o;
}

Eigen::VectorXd PendulumEnv::reset(RandomStream& rng) {
  decision_steps_ = 0;
  angle_ = rng.uniform(-kPi, kPi);
  omega_ = rng.uniform(-1.0, 1.0);
  return observe();
}

StepResult PendulumEnv::substep(const Eigen::VectorXd& action) {
  if (action.size() != 1) throw std::invalid_argument("pendulum: action must have 1 component");
  const double tau = std::clamp(action[0], -1.0, 1.0) * cfg_.torque_max;
  const double accel =
      -(cfg_.gravity / cfg_.length) * std::sin(angle_) + tau / (cfg_.mass * cfg_.length * cfg_.length);
  // semi-implicit Euler: velocity first, then the angle with the new velocity
  omega_ += cfg_.dt_phys * accel;
  angle_ += cfg_.dt_phys * omega_;

  StepResult r;
  r.obs = observe();
  // upright pose (angle measured from the downward vertical) is (sin, cos) = (0, -1)
  Eigen::Vector2d tip(std::sin(angle_), std::cos(angle_));
  r.reward = dense_goal_reward(tip, Eigen::Vector2d(0.0, -1.0), cfg_.reward_k);
  return r;
}

double PendulumEnv::energy() const {
  const double v = cfg_.length * omega_;
  return 0.5 * cfg_.mass * v * v + cfg_.mass * cfg_.gravity * cfg_.length * (1.0 - std::cos(angle_));
}

void PendulumEnv::set_physical_state(double angle, double omega) {
  angle_ = angle;
  omega_ = omega;
}

nlohmann::json PendulumEnv::state_json() const {
  return {{"angle", angle_}, {"omega", omega_}, {"decision_steps", decision_steps_}};
}

void PendulumEnv::set_state(const nlohmann::json& j) {
  require_allowed_keys(j, {"angle", "omega", "decision_steps"}, "pendulum state");
  angle_ = j.at("angle").get<double>();
  omega_ = j.at("omega").get<double>();
  decision_steps_ = j.at("decision_steps").get<int>();
}

// ---- chain MDP ----

ChainMDPEnv::ChainMDPEnv(TabularMDP mdp, int max_episode_steps) : mdp_(std::move(mdp)) {
  validate_mdp(mdp_);
  if (max_episode_steps < 1) throw std::invalid_argument("chain: max_episode_steps must be >= 1");
  spec_.obs_dim = mdp_.S;
  spec_.action_dim = 0;
  spec_.num_actions = mdp_.A;
  spec_.dt_phys = 1.0;
  spec_.action_repeat = 1;
  spec_.max_episode_steps = max_episode_steps;
}

Eigen::VectorXd ChainMDPEnv::reset(RandomStream& rng) {
  rng_ = &rng;
  decision_steps_ = 0;
  state_ = sample_index(mdp_.rho0, rng);
  return Eigen::VectorXd::Unit(mdp_.S, state_);
}

StepResult ChainMDPEnv::substep(const Eigen::VectorXd& action) {
  if (rng_ == nullptr)
    throw std::logic_error("chain: stepped without an attached random stream");
  if (action.size() != 1) throw std::invalid_argument("chain: action must have 1 component");
  const int a = static_cast<int>(std::lround(action[0]));
  if (a < 0 || a >= mdp_.A) {
    throw std::invalid_argument("chain: action index " + std::to_string(a) + " outside [0, " +
                                std::to_string(mdp_.A) + ")");
  }
  StepResult r;
  r.reward = mdp_.R(state_, a);
  state_ = sample_index(mdp_.P[a].row(state_).transpose(), *rng_);
  r.obs = Eigen::VectorXd::Unit(mdp_.S, state_);
  return r;
}

nlohmann::json ChainMDPEnv::state_json() const {
  return {{"state", state_}, {"decision_steps", decision_steps_}};
}

void ChainMDPEnv::set_state(const nlohmann::json& j) {
  require_allowed_keys(j, {"state", "decision_steps"}, "chain state");
  state_ = j.at("state").get<int>();
  if (state_ < 0 || state_ >= mdp_.S) throw std::invalid_argument("chain state: index out of range");
  decision_steps_ = j.at("decision_steps").get<int>();
}

// ---- factory ----

std::unique_ptr<Environment> make_env(const nlohmann::json& env_config) {
  if (!env_config.is_object() || !env_config.contains("name"))
    throw std::invalid_argument("env config: missing \"name\"");
  const std::string name = env_config.at("name").get<std::string>();
  if (name == "pointmass") {
    require_allowed_keys(env_config,
                         {"name", "arena_half", "goal_radius", "reward_k", "accel_max", "dt_phys",
                          "action_repeat", "max_episode_steps", "reward", "frame", "curriculum",
                          "curriculum_start"},
                         "env config (pointmass)");
    PointMassConfig c;
    c.arena_half = json_get(env_config, "arena_half", c.arena_half);
    c.goal_radius = json_get(env_config, "goal_radius", c.goal_radius);
    c.reward_k = json_get(env_config, "reward_k", c.reward_k);
    c.accel_max = json_get(env_config, "accel_max", c.accel_max);
    c.dt_phys = json_get(env_config, "dt_phys", c.dt_phys);
    c.action_repeat = json_get(env_config, "action_repeat", c.action_repeat);
    c.max_episode_steps = json_get(env_config, "max_episode_steps", c.max_episode_steps);
    const std::string reward = json_get<std::string>(env_config, "reward", "dense");
    if (reward != "dense" && reward != "sparse")
      throw std::invalid_argument("env config: reward must be \"dense\" or \"sparse\"");
    c.sparse = reward == "sparse";
    const std::string frame = json_get<std::string>(env_config, "frame", "world");
    if (frame != "world" && frame != "egocentric")
      throw std::invalid_argument("env config: frame must be \"world\" or \"egocentric\"");
    c.egocentric = frame == "egocentric";
    c.curriculum = json_get(env_config, "curriculum", c.curriculum);
    c.curriculum_start = json_get(env_config, "curriculum_start", c.curriculum_start);
    return std::make_unique<PointMassNavEnv>(c);
  }
  if (name == "pendulum") {
    require_allowed_keys(env_config,
                         {"name", "torque_max", "gravity", "mass", "length", "dt_phys",
                          "action_repeat", "max_episode_steps", "observability", "reward_k"},
                         "env config (pendulum)");
    PendulumConfig c;
    c.torque_max = json_get(env_config, "torque_max", c.torque_max);
    c.gravity = json_get(env_config, "gravity", c.gravity);
    c.mass = json_get(env_config, "mass", c.mass);
    c.length = json_get(env_config, "length", c.length);
    c.dt_phys = json_get(env_config, "dt_phys", c.dt_phys);
    c.action_repeat = json_get(env_config, "action_repeat", c.action_repeat);
    c.max_episode_steps = json_get(env_config, "max_episode_steps", c.max_episode_steps);
    const std::string obs = json_get<std::string>(env_config, "observability", "full");
    if (obs != "full" && obs != "partial")
      throw std::invalid_argument("env config: observability must be \"full\" or \"partial\"");
    c.partial = obs == "partial";
    c.reward_k = json_get(env_config, "reward_k", c.reward_k);
    return std::make_unique<PendulumEnv>(c);
  }
  if (name == "chain") {
    require_allowed_keys(env_config, {"name", "mdp_file", "mdp", "max_episode_steps"},
                         "env config (chain)");
    TabularMDP mdp;
    if (env_config.contains("mdp")) {
      mdp = load_mdp(env_config.at("mdp").dump());
    } else if (env_config.contains("mdp_file")) {
      mdp = load_mdp_file(env_config.at("mdp_file").get<std::string>());
    } else {
      throw std::invalid_argument("env config (chain): needs \"mdp\" or \"mdp_file\"");
    }
    const int steps = json_get(env_config, "max_episode_steps", 50);
    return std::make_unique<ChainMDPEnv>(std::move(mdp), steps);
  }
  throw std::invalid_argument("env config: unknown env \"" + name + "\"");
}

// ---- rollout ----

nlohmann::json RolloutState::to_json() const {
  return {{"next_episode_id", next_episode_id},
          {"episode_id_stride", episode_id_stride},
          {"episode_id", episode_id},
          {"step_in_episode", step_in_episode},
          {"episode_return", episode_return},
          {"need_reset", need_reset},
          {"obs", vec_to_json(obs)}};
}

RolloutState RolloutState::from_json(const nlohmann::json& j) {
  require_allowed_keys(j,
                       {"next_episode_id", "episode_id_stride", "episode_id", "step_in_episode",
                        "episode_return", "need_reset", "obs"},
                       "rollout state");
  RolloutState rs;
  rs.next_episode_id = j.at("next_episode_id").get<long>();
  rs.episode_id_stride = j.at("episode_id_stride").get<long>();
  rs.episode_id = j.at("episode_id").get<long>();
  rs.step_in_episode = j.at("step_in_episode").get<int>();
  rs.episode_return = j.at("episode_return").get<double>();
  rs.need_reset = j.at("need_reset").get<bool>();
  rs.obs = vec_from_json(j.at("obs"));
  return rs;
}

namespace {

[[noreturn]] void rollout_abort(const char* what, long episode, int step) {
  std::ostringstream os;
  os << "rollout: non-finite " << what << " in episode " << episode << " at step " << step;
  throw std::domain_error(os.str());
}

}  // namespace

std::vector<EpisodeStat> rollout(Environment& env, const Policy& policy,
                                 const ValueFunction* vf, TrajectoryBuffer& buffer, int N,
                                 RandomStream& rng, RolloutState& rs) {
  if (N < 1) throw std::invalid_argument("rollout: N must be >= 1");
  env.attach_rng(rng);
  std::vector<EpisodeStat> stats;
  for (int n = 0; n < N; ++n) {
    if (rs.need_reset) {
      rs.obs = env.reset(rng);
      rs.episode_id = rs.next_episode_id;
      rs.next_episode_id += rs.episode_id_stride;
      rs.step_in_episode = 0;
      rs.episode_return = 0.0;
      rs.need_reset = false;
      if (!rs.obs.allFinite()) rollout_abort("observation", rs.episode_id, 0);
    }

    ActionSample as = sample_action(policy, rs.obs, rng);
    StepResult sr = env.step(as.action);
    if (!sr.obs.allFinite()) rollout_abort("observation", rs.episode_id, rs.step_in_episode);
    if (!std::isfinite(sr.reward)) rollout_abort("reward", rs.episode_id, rs.step_in_episode);

    Transition tr;
    tr.obs = rs.obs;
    tr.action = as.action;
    tr.reward = sr.reward;
    tr.logp_old = as.log_prob;
    tr.termination = sr.kind;
    tr.episode = rs.episode_id;
    tr.step = rs.step_in_episode;
    buffer.transitions.push_back(std::move(tr));

    rs.episode_return += sr.reward;
    ++rs.step_in_episode;

    if (sr.kind != TerminationKind::Running) {
      EpisodeBoundary eb;
      eb.kind = sr.kind == TerminationKind::TruncateTerminal ? BoundaryKind::Truncated
                : sr.success                                 ? BoundaryKind::Success
                                                             : BoundaryKind::TimeLimit;
      eb.final_obs = sr.obs;
      eb.cached_value = vf != nullptr ? value(*vf, sr.obs) : 0.0;
      buffer.boundaries[rs.episode_id] = std::move(eb);
      stats.push_back({rs.episode_id, rs.episode_return, rs.step_in_episode, sr.success});
      rs.need_reset = true;
    } else {
      rs.obs = sr.obs;
    }
  }
  if (!rs.need_reset) {
    // Buffer ends mid-episode: record the next observation and its value so
    // targets can bootstrap past the cut.
    EpisodeBoundary eb;
    eb.kind = BoundaryKind::UnfinishedTail;
    eb.final_obs = rs.obs;
    eb.cached_value = vf != nullptr ? value(*vf, rs.obs) : 0.0;
    buffer.boundaries[rs.episode_id] = std::move(eb);
  }
  return stats;
}

std::vector<EpisodeStat> rollout(Environment& env, const Policy& policy,
                                 const ValueFunction* vf, TrajectoryBuffer& buffer, int N,
                                 RandomStream& rng) {
  RolloutState rs;
  return rollout(env, policy, vf, buffer, N, rng, rs);
}

}  // namespace acre
