#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "acre/returns.hpp"

using namespace acre;

namespace {

Eigen::VectorXd obs1(double v) { return Eigen::VectorXd::Constant(1, v); }

void push(TrajectoryBuffer& b, long ep, int step, double reward, TerminationKind kind,
          double obs_tag) {
  Transition tr;
  tr.obs = obs1(obs_tag);
  tr.action = Eigen::VectorXd::Zero(1);
  tr.reward = reward;
  tr.termination = kind;
  tr.episode = ep;
  tr.step = step;
  b.transitions.push_back(tr);
}

// Three blocks: a time-limited episode, a truncated (failed) episode and an
// unfinished tail. Observation tags encode 10*episode + step.
TrajectoryBuffer sample_buffer() {
  TrajectoryBuffer b;
  b.gamma = 0.5;
  push(b, 7, 0, 1.0, TerminationKind::Running, 70.0);
  push(b, 7, 1, 2.0, TerminationKind::Running, 71.0);
  push(b, 7, 2, 4.0, TerminationKind::BootstrapTerminal, 72.0);
  b.boundaries[7] = {BoundaryKind::TimeLimit, obs1(73.0), 0.33};
  push(b, 8, 0, -1.0, TerminationKind::Running, 80.0);
  push(b, 8, 1, -2.0, TerminationKind::TruncateTerminal, 81.0);
  b.boundaries[8] = {BoundaryKind::Truncated, Eigen::VectorXd(), 0.0};
  push(b, 9, 0, 8.0, TerminationKind::Running, 90.0);
  push(b, 9, 1, 16.0, TerminationKind::Running, 91.0);
  b.boundaries[9] = {BoundaryKind::UnfinishedTail, obs1(92.0), 0.77};
  return b;
}

// Value oracle keyed on the observation tag: V(o) = o / 100.
double tag_value(const Eigen::VectorXd& o) { return o[0] / 100.0; }

}  // namespace

TEST_CASE("discounted returns, hand case") {
  Eigen::VectorXd r(3);
  r << 1.0, 2.0, 3.0;
  const Eigen::VectorXd R = discounted_returns(r, 0.5);
  CHECK(R[2] == 3.0);
  CHECK(R[1] == 3.5);
  CHECK(R[0] == 2.75);
  CHECK_THROWS_AS(discounted_returns(r, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(discounted_returns(r, -0.1), std::invalid_argument);
}

TEST_CASE("episode segments split on terminals and id changes") {
  const TrajectoryBuffer b = sample_buffer();
  const auto segs = episode_segments(b);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0] == std::pair<int, int>{0, 3});
  CHECK(segs[1] == std::pair<int, int>{3, 5});
  CHECK(segs[2] == std::pair<int, int>{5, 7});

  CHECK(episode_segments(TrajectoryBuffer{}).empty());
}

TEST_CASE("buffer MC returns restart per episode") {
  const TrajectoryBuffer b = sample_buffer();
  const Eigen::VectorXd R = buffer_mc_returns(b);
  CHECK(R[0] == doctest::Approx(1.0 + 0.5 * 2.0 + 0.25 * 4.0));
  CHECK(R[1] == doctest::Approx(2.0 + 0.5 * 4.0));
  CHECK(R[2] == 4.0);
  CHECK(R[3] == doctest::Approx(-1.0 + 0.5 * -2.0));
  CHECK(R[4] == -2.0);
  CHECK(R[5] == doctest::Approx(8.0 + 0.5 * 16.0));
  CHECK(R[6] == 16.0);
}

TEST_CASE("k-step truncated Q stops at the block edge") {
  const TrajectoryBuffer b = sample_buffer();
  CHECK(k_step_truncated_q(b, 0, 2) == doctest::Approx(1.0 + 0.5 * 2.0));
  CHECK(k_step_truncated_q(b, 0, 99) == doctest::Approx(1.0 + 1.0 + 1.0));
  CHECK(k_step_truncated_q(b, 1, 2) == doctest::Approx(2.0 + 2.0));
  // window starting in episode 8 never sees episode 9 rewards
  CHECK(k_step_truncated_q(b, 4, 5) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(k_step_truncated_q(b, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(k_step_truncated_q(b, 7, 1), std::out_of_range);
}

TEST_CASE("bootstrapped Q respects boundary kinds") {
  const TrajectoryBuffer b = sample_buffer();
  const ValueFn vf = tag_value;

  // inside the block: bootstrap from the next stored observation
  CHECK(k_step_bootstrap_q(b, 0, 1, vf) == doctest::Approx(1.0 + 0.5 * 0.71));
  CHECK(k_step_bootstrap_q(b, 0, 2, vf) == doctest::Approx(1.0 + 1.0 + 0.25 * 0.72));

  // reaching a time-limit boundary: V of the post-terminal observation
  CHECK(k_step_bootstrap_q(b, 0, 3, vf) == doctest::Approx(1.0 + 1.0 + 1.0 + 0.125 * 0.73));
  CHECK(k_step_bootstrap_q(b, 2, 1, vf) == doctest::Approx(4.0 + 0.5 * 0.73));

  // truncated (failure) boundary: tail value 0
  CHECK(k_step_bootstrap_q(b, 3, 5, vf) == doctest::Approx(-1.0 - 1.0));
  CHECK(k_step_bootstrap_q(b, 4, 1, vf) == doctest::Approx(-2.0));

  // unfinished tail: V of the running observation
  CHECK(k_step_bootstrap_q(b, 5, 2, vf) == doctest::Approx(8.0 + 8.0 + 0.25 * 0.92));

  // K <= 0 runs to the boundary
  CHECK(k_step_bootstrap_q(b, 0, 0, vf) ==
        doctest::Approx(1.0 + 1.0 + 1.0 + 0.125 * 0.73));

  // collection-time cache replaces the fresh evaluation
  BootstrapConfig cache;
  cache.use_collection_cache = true;
  CHECK(k_step_bootstrap_q(b, 2, 1, vf, cache) == doctest::Approx(4.0 + 0.5 * 0.33));
  CHECK(k_step_bootstrap_q(b, 5, 0, vf, cache) == doctest::Approx(8.0 + 8.0 + 0.25 * 0.77));
}

TEST_CASE("success boundary is absorbing unless overridden") {
  TrajectoryBuffer b;
  b.gamma = 0.5;
  push(b, 1, 0, 1.0, TerminationKind::Running, 10.0);
  push(b, 1, 1, 2.0, TerminationKind::BootstrapTerminal, 11.0);
  b.boundaries[1] = {BoundaryKind::Success, obs1(12.0), 0.5};
  const ValueFn vf = tag_value;

  CHECK(k_step_bootstrap_q(b, 0, 9, vf) == doctest::Approx(1.0 + 0.5 * 2.0));
  BootstrapConfig keep;
  keep.bootstrap_success_value = true;
  CHECK(k_step_bootstrap_q(b, 0, 9, vf, keep) ==
        doctest::Approx(1.0 + 0.5 * 2.0 + 0.25 * 0.12));
}

TEST_CASE("k_step_targets agrees with per-index evaluation") {
  const TrajectoryBuffer b = sample_buffer();
  const ValueFn vf = tag_value;
  for (const int K : {0, 1, 2, 3}) {
    const Eigen::VectorXd targets = k_step_targets(b, K, vf);
    for (int t = 0; t < b.size(); ++t)
      CHECK(targets[t] == doctest::Approx(k_step_bootstrap_q(b, t, K, vf)).epsilon(1e-14));
  }
}

TEST_CASE("missing boundary record is an error") {
  TrajectoryBuffer b;
  b.gamma = 0.9;
  push(b, 4, 0, 1.0, TerminationKind::BootstrapTerminal, 1.0);
  CHECK_THROWS_AS(k_step_bootstrap_q(b, 0, 5, tag_value), std::runtime_error);
}

TEST_CASE("advantages and normalization") {
  Eigen::VectorXd q(3), v(3);
  q << 1.0, 2.0, 3.0;
  v << 0.5, 2.5, 2.0;
  const Eigen::VectorXd a = advantages(q, v);
  CHECK(a[0] == 0.5);
  CHECK(a[1] == -0.5);
  CHECK(a[2] == 1.0);
  CHECK_THROWS_AS(advantages(q, Eigen::VectorXd::Zero(2)), std::invalid_argument);

  const Eigen::VectorXd n = normalize_advantages(a);
  CHECK(std::abs(n.mean()) < 1e-12);
  CHECK(std::abs(std::sqrt((n.array() - n.mean()).square().mean()) - 1.0) < 1e-12);

  const Eigen::VectorXd flat = normalize_advantages(Eigen::VectorXd::Constant(4, 2.0));
  CHECK(flat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("value_loss basics") {
  Tape tape;
  std::vector<Var> vals = {tape.leaf(1.0), tape.leaf(2.0)};
  Eigen::VectorXd targets(2);
  targets << 0.0, 4.0;
  Var l = value_loss(vals, targets);
  CHECK(l.value() == doctest::Approx(0.5 * (1.0 + 4.0) / 2.0));
  tape.backward(l);
  // d/dv 0.5*mean((v-t)^2) = (v-t)/n
  CHECK(tape.adjoint(vals[0]) == doctest::Approx(0.5));
  CHECK(tape.adjoint(vals[1]) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(value_loss({}, Eigen::VectorXd()), std::invalid_argument);
  CHECK_THROWS_AS(value_loss(vals, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
