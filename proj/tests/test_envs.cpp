#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "acre/envs.hpp"

using namespace acre;

namespace {

constexpr double kPi = 3.14159265358979323846;

PointMassConfig pm_defaults() { return PointMassConfig{}; }

void place(PointMassNavEnv& env, double px, double py, double vx, double vy, double gx,
           double gy, int steps = 0) {
  env.set_state({{"pos", {px, py}},
                 {"vel", {vx, vy}},
                 {"goal", {gx, gy}},
                 {"decision_steps", steps},
                 {"progress", 0.0}});
}

Eigen::Vector2d rot90(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

// Minimal discrete env that emits a NaN reward (or observation) on a chosen
// step, for exercising the rollout abort path.
class PoisonEnv final : public Environment {
 public:
  PoisonEnv(int poison_step, bool poison_obs) : poison_step_(poison_step), poison_obs_(poison_obs) {
    spec_.obs_dim = 1;
    spec_.num_actions = 2;
    spec_.action_repeat = 1;
    spec_.max_episode_steps = 100;
  }
  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "poison"; }
  Eigen::VectorXd reset(RandomStream&) override {
    t_ = 0;
    decision_steps_ = 0;
    return Eigen::VectorXd::Zero(1);
  }
  StepResult substep(const Eigen::VectorXd&) override {
    StepResult r;
    r.obs = Eigen::VectorXd::Zero(1);
    r.reward = 1.0;
    if (++t_ == poison_step_) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      if (poison_obs_)
        r.obs[0] = nan;
      else
        r.reward = nan;
    }
    return r;
  }
  nlohmann::json state_json() const override { return {{"t", t_}}; }
  void set_state(const nlohmann::json& j) override { t_ = j.at("t").get<int>(); }

 private:
  EnvSpec spec_;
  int t_ = 0;
  int poison_step_ = 0;
  bool poison_obs_ = false;
};

}  // namespace

TEST_CASE("reward shapes") {
  const Eigen::Vector2d x(0.3, -0.1), g(0.5, 0.2);
  const double d2 = (g - x).squaredNorm();
  CHECK(dense_goal_reward(x, g, 2.0) == doctest::Approx(std::exp(-2.0 * d2)).epsilon(1e-15));
  CHECK(dense_goal_reward(g, g, 2.0) == 1.0);
  CHECK_THROWS_AS(dense_goal_reward(x, g, 0.0), std::invalid_argument);

  const double eps = std::sqrt(d2);
  CHECK(sparse_goal_reward(x, g, eps) == 0.0);  // boundary is strict
  CHECK(sparse_goal_reward(x, g, eps * 1.0000001) == 1.0);
  CHECK(sparse_goal_reward(x, g, eps * 0.9999999) == 0.0);
  CHECK_THROWS_AS(sparse_goal_reward(x, g, -1.0), std::invalid_argument);
}

TEST_CASE("egocentric transform") {
  // heading 0 is a plain difference
  const Eigen::Vector2d g(1.5, -0.5), p(0.5, 0.5);
  CHECK((egocentric_transform(g, p, 0.0) - Eigen::Vector2d(1.0, -1.0)).norm() < 1e-15);
  // goal at the agent vanishes regardless of heading
  CHECK(egocentric_transform(p, p, 1.234).norm() == 0.0);
  // facing +y, a goal straight ahead is at (+d, 0) in the body frame
  CHECK((egocentric_transform(Eigen::Vector2d(0.0, 2.0), Eigen::Vector2d(0.0, 0.0), kPi / 2) -
         Eigen::Vector2d(2.0, 0.0))
            .norm() < 1e-15);
  // invariance under a rigid transform applied to both poses
  const double phi = 0.7;
  const Eigen::Vector2d t(0.3, -1.1);
  const double c = std::cos(phi), s = std::sin(phi);
  auto rigid = [&](const Eigen::Vector2d& v) {
    return Eigen::Vector2d(c * v.x() - s * v.y() + t.x(), s * v.x() + c * v.y() + t.y());
  };
  const Eigen::Vector2d a = egocentric_transform(g, p, 0.4);
  const Eigen::Vector2d b = egocentric_transform(rigid(g), rigid(p), 0.4 + phi);
  CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("point mass explicit Euler substep") {
  PointMassNavEnv env(pm_defaults());
  place(env, 0.1, -0.2, 0.05, 0.0, 0.5, 0.5);
  // action clamps to [-1, 1] before the accel_max scale
  const StepResult r = env.substep((Eigen::VectorXd(2) << 2.0, -0.5).finished());
  const Eigen::Vector2d pos(0.1 + 0.05 * 0.01, -0.2);  // position uses the old velocity
  const Eigen::Vector2d vel(0.05 + 1.0 * 0.01, 0.0 - 0.5 * 0.01);
  CHECK((env.position() - pos).norm() < 1e-15);
  CHECK((env.velocity() - vel).norm() < 1e-15);
  CHECK(r.kind == TerminationKind::Running);
  CHECK(r.reward ==
        doctest::Approx(std::exp(-(Eigen::Vector2d(0.5, 0.5) - pos).squaredNorm())).epsilon(1e-15));
  // world-frame observation: velocity then goal offset
  CHECK((r.obs.head<2>() - vel).norm() < 1e-15);
  CHECK((r.obs.tail<2>() - (Eigen::Vector2d(0.5, 0.5) - pos)).norm() < 1e-15);
}

TEST_CASE("decision step sums substep rewards") {
  PointMassNavEnv env(pm_defaults()), twin(pm_defaults());
  place(env, -0.3, 0.2, 0.1, -0.1, 0.6, 0.6);
  place(twin, -0.3, 0.2, 0.1, -0.1, 0.6, 0.6);
  const Eigen::VectorXd a = (Eigen::VectorXd(2) << 0.4, 0.9).finished();
  const StepResult r = env.step(a);
  double total = 0.0;
  StepResult last;
  for (int i = 0; i < 5; ++i) {
    last = twin.substep(a);
    total += last.reward;
  }
  CHECK(r.reward == total);
  CHECK((r.obs - last.obs).norm() == 0.0);
  CHECK((env.position() - twin.position()).norm() == 0.0);
}

TEST_CASE("point mass terminations") {
  SUBCASE("goal entry is a bootstrap-terminal success") {
    PointMassNavEnv env(pm_defaults());
    place(env, 0.0, 0.0, 1.0, 0.0, 0.05, 0.0);
    const StepResult r = env.substep(Eigen::VectorXd::Zero(2));
    CHECK(r.kind == TerminationKind::BootstrapTerminal);
    CHECK(r.success);
    CHECK(r.reward > 0.9);  // dense reward near the goal
  }
  SUBCASE("sparse variant pays 1 inside the goal ball") {
    PointMassConfig c = pm_defaults();
    c.sparse = true;
    PointMassNavEnv env(c);
    place(env, 0.0, 0.0, 1.0, 0.0, 0.05, 0.0);
    StepResult r = env.substep(Eigen::VectorXd::Zero(2));
    CHECK(r.reward == 1.0);
    CHECK(r.success);
    place(env, 0.0, 0.0, 0.0, 0.0, 0.9, 0.9);
    r = env.substep(Eigen::VectorXd::Zero(2));
    CHECK(r.reward == 0.0);
    CHECK(r.kind == TerminationKind::Running);
  }
  SUBCASE("leaving the arena truncates with zero reward on that substep") {
    PointMassNavEnv env(pm_defaults());
    place(env, 0.9999, 0.0, 5.0, 0.0, -0.5, 0.0);
    const StepResult r = env.step(Eigen::VectorXd::Zero(2));
    CHECK(r.kind == TerminationKind::TruncateTerminal);
    CHECK(!r.success);
    CHECK(r.reward == 0.0);  // first substep already exits
    CHECK(std::abs(env.position().x()) > 1.0);
  }
  SUBCASE("time limit becomes a bootstrap terminal without success") {
    PointMassConfig c = pm_defaults();
    c.max_episode_steps = 3;
    PointMassNavEnv env(c);
    RandomStream rng(5);
    env.reset(rng);
    place(env, 0.0, 0.0, 0.0, 0.0, 0.8, 0.8);
    StepResult r;
    for (int i = 0; i < 3; ++i) {
      r = env.step(Eigen::VectorXd::Zero(2));
      if (i < 2) CHECK(r.kind == TerminationKind::Running);
    }
    CHECK(r.kind == TerminationKind::BootstrapTerminal);
    CHECK(!r.success);
  }
  SUBCASE("goal on the last allowed step still counts as success") {
    PointMassConfig c = pm_defaults();
    c.max_episode_steps = 1;
    PointMassNavEnv env(c);
    RandomStream rng(6);
    env.reset(rng);
    place(env, 0.0, 0.0, 1.0, 0.0, 0.05, 0.0);
    const StepResult r = env.step(Eigen::VectorXd::Zero(2));
    CHECK(r.kind == TerminationKind::BootstrapTerminal);
    CHECK(r.success);
  }
}

TEST_CASE("action repeat stops on termination") {
  PointMassNavEnv env(pm_defaults()), twin(pm_defaults());
  // moving at 1.0 toward a goal 0.025 away with radius 0.1: the second
  // substep enters the ball, so only two substeps' rewards accumulate
  place(env, 0.0, 0.0, 1.0, 0.0, 0.115, 0.0);
  place(twin, 0.0, 0.0, 1.0, 0.0, 0.115, 0.0);
  const StepResult r = apply_action_repeat(env, Eigen::VectorXd::Zero(2), 5);
  const StepResult s1 = twin.substep(Eigen::VectorXd::Zero(2));
  const StepResult s2 = twin.substep(Eigen::VectorXd::Zero(2));
  CHECK(s1.kind == TerminationKind::Running);
  CHECK(s2.kind == TerminationKind::BootstrapTerminal);
  CHECK(r.reward == s1.reward + s2.reward);
  CHECK(r.success);
  CHECK_THROWS_AS(apply_action_repeat(env, Eigen::VectorXd::Zero(2), 0), std::invalid_argument);
}

TEST_CASE("egocentric observations") {
  PointMassConfig c = pm_defaults();
  c.egocentric = true;
  PointMassNavEnv env(c);
  // facing +y at speed 2: body frame puts the velocity at (+2, 0) and swaps
  // the goal offset axes
  place(env, 0.2, 0.1, 0.0, 2.0, 0.2, 0.6);
  StepResult r = env.substep(Eigen::VectorXd::Zero(2));
  const double h = kPi / 2;
  const Eigen::Vector2d vb =
      egocentric_transform(env.position() + env.velocity(), env.position(), h);
  const Eigen::Vector2d gb = egocentric_transform(env.goal(), env.position(), h);
  CHECK((r.obs.head<2>() - vb).norm() < 1e-12);
  CHECK((r.obs.tail<2>() - gb).norm() < 1e-12);

  // a 90 degree world rotation of the whole scene leaves the obs unchanged
  PointMassNavEnv rotated(c);
  const Eigen::Vector2d p0(0.3, -0.2), v0(0.4, 0.5), g0(-0.1, 0.6);
  const Eigen::Vector2d p1 = rot90(p0), v1 = rot90(v0), g1 = rot90(g0);
  place(env, p0.x(), p0.y(), v0.x(), v0.y(), g0.x(), g0.y());
  place(rotated, p1.x(), p1.y(), v1.x(), v1.y(), g1.x(), g1.y());
  const Eigen::VectorXd o0 = env.substep(Eigen::VectorXd::Zero(2)).obs;
  const Eigen::VectorXd o1 = rotated.substep(Eigen::VectorXd::Zero(2)).obs;
  CHECK((o0 - o1).cwiseAbs().maxCoeff() < 1e-12);

  // at rest there is no heading and the body frame is the world frame
  place(env, 0.1, 0.1, 0.0, 0.0, 0.5, 0.3);
  r = env.substep(Eigen::VectorXd::Zero(2));
  CHECK((r.obs.tail<2>() - Eigen::Vector2d(0.4, 0.2)).norm() < 1e-12);
}

TEST_CASE("curriculum caps the spawn distance early") {
  PointMassConfig c = pm_defaults();
  c.curriculum = true;
  c.curriculum_start = 0.25;
  PointMassNavEnv env(c);
  RandomStream rng(17);
  env.set_progress(0.0);
  for (int i = 0; i < 200; ++i) {
    env.reset(rng);
    CHECK((env.goal() - env.position()).norm() <= 0.25 + 1e-12);
  }
  env.set_progress(1.0);
  double dmax = 0.0;
  for (int i = 0; i < 200; ++i) {
    env.reset(rng);
    dmax = std::max(dmax, (env.goal() - env.position()).norm());
  }
  CHECK(dmax > 0.5);  // cap released
}

TEST_CASE("point mass state round trip and key checks") {
  PointMassNavEnv env(pm_defaults());
  place(env, 0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 7);
  const nlohmann::json j = env.state_json();
  PointMassNavEnv other(pm_defaults());
  other.set_state(j);
  CHECK(other.state_json() == j);
  nlohmann::json bad = j;
  bad["velocity"] = 1;
  CHECK_THROWS_AS(other.set_state(bad), std::invalid_argument);
}

TEST_CASE("pendulum semi-implicit Euler substep") {
  PendulumConfig c;
  PendulumEnv env(c);
  env.set_physical_state(0.3, -0.1);
  const StepResult r = env.substep(Eigen::VectorXd::Constant(1, 0.25));
  const double tau = 0.25 * c.torque_max;
  const double accel =
      -(c.gravity / c.length) * std::sin(0.3) + tau / (c.mass * c.length * c.length);
  const double omega = -0.1 + c.dt_phys * accel;
  const double angle = 0.3 + c.dt_phys * omega;  // updated velocity moves the angle
  CHECK(env.angular_velocity() == doctest::Approx(omega).epsilon(1e-15));
  CHECK(env.angle() == doctest::Approx(angle).epsilon(1e-15));
  REQUIRE(r.obs.size() == 3);
  CHECK(r.obs[0] == doctest::Approx(std::sin(angle)).epsilon(1e-15));
  CHECK(r.obs[1] == doctest::Approx(std::cos(angle)).epsilon(1e-15));
  CHECK(r.obs[2] == doctest::Approx(omega).epsilon(1e-15));
  const double d2 = std::pow(std::sin(angle), 2) + std::pow(std::cos(angle) + 1.0, 2);
  CHECK(r.reward == doctest::Approx(std::exp(-c.reward_k * d2)).epsilon(1e-14));
  CHECK(r.kind == TerminationKind::Running);  // only the time limit ends episodes
}

TEST_CASE("pendulum energy drift under zero torque") {
  PendulumEnv env(PendulumConfig{});
  env.set_physical_state(2.0, 0.0);
  const double e0 = env.energy();
  REQUIRE(e0 > 0.0);
  double emin = e0, emax = e0;
  for (int i = 0; i < 10000; ++i) {
    env.substep(Eigen::VectorXd::Zero(1));
    emin = std::min(emin, env.energy());
    emax = std::max(emax, env.energy());
  }
  CHECK(std::abs(emax - e0) / e0 < 0.01);
  CHECK(std::abs(emin - e0) / e0 < 0.01);

  // bottom rest state is a fixed point
  env.set_physical_state(0.0, 0.0);
  env.substep(Eigen::VectorXd::Zero(1));
  CHECK(env.angle() == 0.0);
  CHECK(env.angular_velocity() == 0.0);
}

TEST_CASE("pendulum partial observability drops the velocity") {
  PendulumConfig c;
  c.partial = true;
  PendulumEnv env(c);
  CHECK(env.spec().obs_dim == 2);
  env.set_physical_state(0.7, 3.0);
  const StepResult r = env.substep(Eigen::VectorXd::Zero(1));
  REQUIRE(r.obs.size() == 2);
  CHECK(r.obs[0] == doctest::Approx(std::sin(env.angle())).epsilon(1e-15));
  CHECK(r.obs[1] == doctest::Approx(std::cos(env.angle())).epsilon(1e-15));
}

TEST_CASE("chain env transitions match the MDP tables") {
  const TabularMDP m = load_mdp_file("data/mdp_chain5.json");
  ChainMDPEnv env(m, 50);
  RandomStream rng(99);

  CHECK_THROWS_AS(env.substep(Eigen::VectorXd::Zero(1)), std::logic_error);  // no rng yet

  const Eigen::VectorXd o = env.reset(rng);
  CHECK(o.size() == 5);
  CHECK(o.sum() == 1.0);
  CHECK(o[env.state()] == 1.0);

  // reward is a function of the pre-transition state
  env.set_state({{"state", 4}, {"decision_steps", 0}});
  StepResult r = env.substep(Eigen::VectorXd::Constant(1, 0.0));
  CHECK(r.reward == m.R(4, 0));

  CHECK_THROWS_AS(env.substep(Eigen::VectorXd::Constant(1, 2.0)), std::invalid_argument);
  CHECK_THROWS_AS(env.substep(Eigen::VectorXd::Constant(1, -1.0)), std::invalid_argument);
  CHECK_THROWS_AS(env.substep(Eigen::VectorXd::Zero(2)), std::invalid_argument);

  // empirical transition frequency from state 2 under action 1
  const int n = 20000;
  int moved = 0;
  for (int i = 0; i < n; ++i) {
    env.set_state({{"state", 2}, {"decision_steps", 0}});
    r = env.substep(Eigen::VectorXd::Constant(1, 1.0));
    if (env.state() == 3) ++moved;
    else CHECK(env.state() == 2);
  }
  const double p = m.P[1](2, 3);
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(static_cast<double>(moved) / n - p) < 3.5 * se);

  // boundary states clamp
  env.set_state({{"state", 0}, {"decision_steps", 0}});
  for (int i = 0; i < 50; ++i) {
    env.set_state({{"state", 0}, {"decision_steps", 0}});
    env.substep(Eigen::VectorXd::Zero(1));
    CHECK((env.state() == 0 || env.state() == 1));
  }
}

TEST_CASE("chain env time limit") {
  const TabularMDP m = load_mdp_file("data/mdp_chain5.json");
  ChainMDPEnv env(m, 2);
  RandomStream rng(3);
  env.reset(rng);
  StepResult r = env.step(Eigen::VectorXd::Zero(1));
  CHECK(r.kind == TerminationKind::Running);
  r = env.step(Eigen::VectorXd::Zero(1));
  CHECK(r.kind == TerminationKind::BootstrapTerminal);
  CHECK(!r.success);
}

TEST_CASE("factory: names, keys, and nested configs") {
  CHECK_THROWS_AS(make_env({{"name", "gridworld"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_env(nlohmann::json::array()), std::invalid_argument);
  CHECK_THROWS_AS(make_env({{"name", "pointmass"}, {"gravity", 9.8}}), std::invalid_argument);
  CHECK_THROWS_AS(make_env({{"name", "pointmass"}, {"reward", "shaped"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_env({{"name", "pendulum"}, {"observability", "half"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_env({{"name", "chain"}}), std::invalid_argument);

  auto pm = make_env({{"name", "pointmass"}, {"reward", "sparse"}, {"max_episode_steps", 77}});
  CHECK(pm->spec().max_episode_steps == 77);
  CHECK(pm->spec().obs_dim == 4);
  CHECK(pm->name() == "pointmass");

  auto pend = make_env({{"name", "pendulum"}, {"observability", "partial"}});
  CHECK(pend->spec().obs_dim == 2);

  // P is laid out P[s][a][s']
  const nlohmann::json inline_mdp = {
      {"S", 2},       {"A", 1},
      {"gamma", 0.9}, {"P", {{{0.5, 0.5}}, {{0.5, 0.5}}}},
      {"R", {{1.0}, {0.0}}},
      {"rho0", {1.0, 0.0}}};
  auto chain = make_env({{"name", "chain"}, {"mdp", inline_mdp}, {"max_episode_steps", 9}});
  CHECK(chain->spec().num_actions == 1);
  CHECK(chain->spec().obs_dim == 2);
  CHECK(chain->spec().max_episode_steps == 9);
}

TEST_CASE("rollout is deterministic and resumable mid-episode") {
  const TabularMDP m = load_mdp_file("data/mdp_chain5.json");
  RandomStream prng(41);
  const Policy pol = make_categorical_policy(5, {8}, 2, prng);

  auto run = [&](int pieces) {
    ChainMDPEnv env(m, 7);
    TrajectoryBuffer buf;
    RandomStream rng = RandomStream::split(1000, 3);
    RolloutState rs;
    for (int i = 0; i < pieces; ++i) rollout(env, pol, nullptr, buf, 12 / pieces, rng, rs);
    return buf;
  };
  const TrajectoryBuffer one = run(1);
  const TrajectoryBuffer four = run(4);
  REQUIRE(one.transitions.size() == 12);
  REQUIRE(four.transitions.size() == 12);
  for (size_t i = 0; i < 12; ++i) {
    const Transition &a = one.transitions[i], &b = four.transitions[i];
    CHECK((a.obs - b.obs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.action - b.action).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.reward == b.reward);
    CHECK(a.logp_old == b.logp_old);
    CHECK(a.termination == b.termination);
    CHECK(a.episode == b.episode);
    CHECK(a.step == b.step);
  }
  REQUIRE(one.boundaries.size() == four.boundaries.size());
  for (const auto& [ep, eb] : one.boundaries) {
    const EpisodeBoundary& fb = four.boundaries.at(ep);
    CHECK(eb.kind == fb.kind);
    CHECK((eb.final_obs - fb.final_obs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(eb.cached_value == fb.cached_value);
  }
}

TEST_CASE("rollout boundary kinds and stats") {
  const TabularMDP m = load_mdp_file("data/mdp_chain5.json");
  RandomStream prng(42);
  const Policy pol = make_categorical_policy(5, {}, 2, prng);

  SUBCASE("time limit episodes produce TimeLimit boundaries") {
    ChainMDPEnv env(m, 3);
    TrajectoryBuffer buf;
    RandomStream rng(7);
    const std::vector<EpisodeStat> stats = rollout(env, pol, nullptr, buf, 6, rng);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].id == 0);
    CHECK(stats[1].id == 1);
    CHECK(stats[0].length == 3);
    CHECK(!stats[0].success);
    double ret = 0.0;
    for (int i = 0; i < 3; ++i) ret += buf.transitions[i].reward;
    CHECK(stats[0].ret == ret);
    CHECK(buf.boundaries.at(0).kind == BoundaryKind::TimeLimit);
    CHECK(buf.boundaries.at(1).kind == BoundaryKind::TimeLimit);
    CHECK(buf.boundaries.count(2) == 0);  // exactly two episodes, no tail
  }

  SUBCASE("an unfinished tail is recorded with the next observation") {
    ChainMDPEnv env(m, 50);
    TrajectoryBuffer buf;
    RandomStream rng(8);
    rollout(env, pol, nullptr, buf, 2, rng);
    REQUIRE(buf.boundaries.size() == 1);
    const EpisodeBoundary& eb = buf.boundaries.at(0);
    CHECK(eb.kind == BoundaryKind::UnfinishedTail);
    CHECK(eb.cached_value == 0.0);  // no value function attached
    CHECK(eb.final_obs.size() == 5);
    CHECK(eb.final_obs[env.state()] == 1.0);  // the observation the cut left us at
  }

  SUBCASE("success and truncation map through") {
    RandomStream grng(43);
    const Policy gauss = make_gaussian_policy(4, {}, 2, false, grng);

    PointMassNavEnv env(pm_defaults());
    RandomStream rng(9);
    env.reset(rng);
    place(env, 0.0, 0.0, 1.0, 0.0, 0.03, 0.0);
    TrajectoryBuffer buf;
    RolloutState rs;
    rs.need_reset = false;
    rs.episode_id = 0;
    rs.next_episode_id = 1;
    rs.obs = Eigen::VectorXd::Zero(4);  // the env, not rs.obs, decides the outcome
    auto stats = rollout(env, gauss, nullptr, buf, 1, rng, rs);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].success);
    CHECK(buf.boundaries.at(0).kind == BoundaryKind::Success);

    PointMassNavEnv wall(pm_defaults());
    wall.reset(rng);
    place(wall, 0.9999, 0.0, 5.0, 0.0, -0.5, 0.0);
    TrajectoryBuffer buf2;
    RolloutState rs2;
    rs2.need_reset = false;
    rs2.episode_id = 0;
    rs2.next_episode_id = 1;
    rs2.obs = Eigen::VectorXd::Zero(4);
    stats = rollout(wall, gauss, nullptr, buf2, 1, rng, rs2);
    REQUIRE(stats.size() == 1);
    CHECK(!stats[0].success);
    CHECK(buf2.boundaries.at(0).kind == BoundaryKind::Truncated);
    CHECK(buf2.transitions[0].termination == TerminationKind::TruncateTerminal);
  }

  SUBCASE("episode ids honor the worker stride") {
    ChainMDPEnv env(m, 2);
    TrajectoryBuffer buf;
    RandomStream rng(10);
    RolloutState rs;
    rs.next_episode_id = 5;
    rs.episode_id_stride = 3;
    const auto stats = rollout(env, pol, nullptr, buf, 6, rng, rs);
    REQUIRE(stats.size() == 3);
    CHECK(stats[0].id == 5);
    CHECK(stats[1].id == 8);
    CHECK(stats[2].id == 11);
  }
}

TEST_CASE("rollout aborts on non-finite signals") {
  RandomStream prng(44);
  const Policy pol = make_categorical_policy(1, {}, 2, prng);

  PoisonEnv bad_reward(3, false);
  TrajectoryBuffer buf;
  RandomStream rng(11);
  CHECK_THROWS_WITH_AS(rollout(bad_reward, pol, nullptr, buf, 10, rng),
                       "rollout: non-finite reward in episode 0 at step 2", std::domain_error);

  PoisonEnv bad_obs(1, true);
  TrajectoryBuffer buf2;
  RandomStream rng2(12);
  CHECK_THROWS_AS(rollout(bad_obs, pol, nullptr, buf2, 10, rng2), std::domain_error);

  TrajectoryBuffer buf3;
  PoisonEnv fine(1000, false);
  CHECK_THROWS_AS(rollout(fine, pol, nullptr, buf3, 0, rng2), std::invalid_argument);
}

TEST_CASE("rollout caches bootstrap values when a critic is attached") {
  const TabularMDP m = load_mdp_file("data/mdp_chain5.json");
  ChainMDPEnv env(m, 50);
  RandomStream prng(45);
  const Policy pol = make_categorical_policy(5, {}, 2, prng);
  ValueFunction vf = make_value_function(5, {4}, prng);
  TrajectoryBuffer buf;
  RandomStream rng(13);
  rollout(env, pol, &vf, buf, 3, rng);
  const EpisodeBoundary& eb = buf.boundaries.at(0);
  CHECK(eb.kind == BoundaryKind::UnfinishedTail);
  CHECK(eb.cached_value == value(vf, eb.final_obs));
}
