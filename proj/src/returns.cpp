#include "acre/returns.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace acre {

std::vector<std::pair<int, int>> episode_segments(const TrajectoryBuffer& buffer) {
  std::vector<std::pair<int, int>> segs;
  const int n = buffer.size();
  int begin = 0;
  for (int i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    const bool cut = buffer.transitions[i].termination != TerminationKind::Running ||
                     (!last && buffer.transitions[i + 1].episode != buffer.transitions[i].episode);
    if (cut || last) {
      segs.emplace_back(begin, i + 1);
      begin = i + 1;
    }
  }
  return segs;
}

Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, double gamma) {
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("discounted_returns: gamma must lie in [0, 1)");
  Eigen::VectorXd out(rewards.size());
  double acc = 0.0;
  for (Eigen::Index t = rewards.size() - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

Eigen::VectorXd buffer_mc_returns(const TrajectoryBuffer& buffer) {
  Eigen::VectorXd out(buffer.size());
  for (const auto& [begin, end] : episode_segments(buffer)) {
    double acc = 0.0;
    for (int t = end - 1; t >= begin; --t) {
      acc = buffer.transitions[t].reward + buffer.gamma * acc;
      out[t] = acc;
    }
  }
  return out;
}

namespace {

void check_index(const TrajectoryBuffer& buffer, int t) {
  if (t < 0 || t >= buffer.size())
    throw std::out_of_range("k_step window start outside the buffer");
}

// End (exclusive) of the episode block containing t.
int block_end(const TrajectoryBuffer& buffer, int t) {
  const long ep = buffer.transitions[t].episode;
  int i = t;
  while (i < buffer.size() && buffer.transitions[i].episode == ep &&
         buffer.transitions[i].termination == TerminationKind::Running)
    ++i;
  if (i < buffer.size() && buffer.transitions[i].episode == ep) ++i;  // terminal step
  return i;
}

double boundary_value(const TrajectoryBuffer& buffer, long episode, const ValueFn& vf,
                      const BootstrapConfig& cfg) {
  const auto it = buffer.boundaries.find(episode);
  if (it == buffer.boundaries.end())
    throw std::runtime_error("k_step_bootstrap_q: missing boundary record for episode " +
                             std::to_string(episode));
  const EpisodeBoundary& b = it->second;
  switch (b.kind) {
    case BoundaryKind::Truncated:
      return 0.0;
    case BoundaryKind::Success:
      if (!cfg.bootstrap_success_value) return 0.0;
      break;
    case BoundaryKind::TimeLimit:
    case BoundaryKind::UnfinishedTail:
      break;
  }
  if (cfg.use_collection_cache) return b.cached_value;
  if (b.final_obs.size() == 0)
    throw std::runtime_error("k_step_bootstrap_q: boundary observation missing for episode " +
                             std::to_string(episode));
  return vf(b.final_obs);
}

}  // namespace

double k_step_truncated_q(const TrajectoryBuffer& buffer, int t, int K) {
  check_index(buffer, t);
  if (K < 1) throw std::invalid_argument("k_step_truncated_q: K must be >= 1");
  const int end = std::min(block_end(buffer, t), t + K);
  double q = 0.0, g = 1.0;
  for (int i = t; i < end; ++i) {
    q += g * buffer.transitions[i].reward;
    g *= buffer.gamma;
  }
  return q;
}

double k_step_bootstrap_q(const TrajectoryBuffer& buffer, int t, int K,
                          const ValueFn& vf, const BootstrapConfig& cfg) {
  check_index(buffer, t);
  const int bend = block_end(buffer, t);
  const int end = K <= 0 ? bend : std::min(bend, t + K);
  double q = 0.0, g = 1.0;
  for (int i = t; i < end; ++i) {
    q += g * buffer.transitions[i].reward;
    g *= buffer.gamma;
  }
  if (end == bend) {
    // Window reached the episode-block boundary; tail value per boundary kind.
    q += g * boundary_value(buffer, buffer.transitions[t].episode, vf, cfg);
  } else {
    // Window stopped inside the block; bootstrap from the stored observation.
    q += g * vf(buffer.transitions[end].obs);
  }
  return q;
}

double k_step_bootstrap_q(const TrajectoryBuffer& buffer, int t, int K,
                          const ValueFunction& vf, const BootstrapConfig& cfg) {
  return k_step_bootstrap_q(buffer, t, K,
                            [&vf](const Eigen::VectorXd& o) { return value(vf, o); }, cfg);
}

Eigen::VectorXd k_step_targets(const TrajectoryBuffer& buffer, int K, const ValueFn& vf,
                               const BootstrapConfig& cfg) {
  Eigen::VectorXd out(buffer.size());
  // Per-episode backward recursion when K spans to the boundary; windowed
  // evaluation otherwise.
  if (K <= 0) {
    for (const auto& [begin, end] : episode_segments(buffer)) {
      double acc = boundary_value(buffer, buffer.transitions[begin].episode, vf, cfg);
      for (int t = end - 1; t >= begin; --t) {
        acc = buffer.transitions[t].reward + buffer.gamma * acc;
        out[t] = acc;
      }
    }
  } else {
    for (int t = 0; t < buffer.size(); ++t)
      out[t] = k_step_bootstrap_q(buffer, t, K, vf, cfg);
  }
  return out;
}

Eigen::VectorXd advantages(const Eigen::VectorXd& qhat, const Eigen::VectorXd& values) {
  if (qhat.size() != values.size())
    throw std::invalid_argument("advantages: length mismatch");
  return qhat - values;
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv) {
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  const double sd = std::max(std::sqrt(var), 1e-8);
  return ((adv.array() - mean) / sd).matrix();
}

Var value_loss(const std::vector<Var>& values, const Eigen::VectorXd& targets) {
  if (values.empty()) throw std::invalid_argument("value_loss: empty value list");
  if (static_cast<Eigen::Index>(values.size()) != targets.size())
    throw std::invalid_argument("value_loss: length mismatch");
  Var acc = square(values[0] - targets[0]);
  for (size_t i = 1; i < values.size(); ++i)
    acc = acc + square(values[i] - targets[i]);
  return acc * (0.5 / static_cast<double>(values.size()));
}

void dump_jsonl(const TrajectoryBuffer& buffer, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_jsonl: cannot open " + path);
  for (const Transition& tr : buffer.transitions) {
    nlohmann::json j;
    j["episode"] = tr.episode;
    j["step"] = tr.step;
    j["obs"] = std::vector<double>(tr.obs.data(), tr.obs.data() + tr.obs.size());
    j["action"] = std::vector<double>(tr.action.data(), tr.action.data() + tr.action.size());
    j["reward"] = tr.reward;
    j["logp_old"] = tr.logp_old;
    j["termination"] = tr.termination == TerminationKind::Running ? "running"
                       : tr.termination == TerminationKind::BootstrapTerminal ? "bootstrap"
                                                                              : "truncate";
    os << j.dump() << "\n";
  }
}

}  // namespace acre
