#include "acre/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace acre {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)
constexpr double kHalfLog2PiE = 1.4189385332046727417803297364056;  // 0.5*log(2*pi*e)

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::domain_error(std::string("policy: non-finite ") + what);
}

// Mean and sigma of the Gaussian head from one backbone evaluation.
void gaussian_moments(const GaussianPolicy& p, const Eigen::VectorXd& obs,
                      Eigen::VectorXd& mu, Eigen::VectorXd& log_sigma) {
  const Eigen::VectorXd out = mlp_eval(p.theta, obs);
  require_finite(out, "network output");
  if (p.state_dep_sigma) {
    mu = out.head(p.n_actions);
    log_sigma = out.tail(p.n_actions);
  } else {
    mu = out;
    log_sigma = p.theta.values.tail(p.n_actions);
  }
}

Eigen::VectorXd logits_of(const CategoricalPolicy& p, const Eigen::VectorXd& obs) {
  Eigen::VectorXd logits = mlp_eval(p.theta, obs);
  require_finite(logits, "network output");
  return logits;
}

int action_index(const CategoricalPolicy& p, const Eigen::VectorXd& action) {
  if (action.size() != 1)
    throw std::invalid_argument("categorical: action must be a single index");
  const int a = static_cast<int>(std::lround(action[0]));
  if (a < 0 || a >= p.n_actions)
    throw std::out_of_range("categorical: action index out of range");
  return a;
}

}  // namespace

GaussianPolicy make_gaussian_policy(int obs_dim, const std::vector<int>& hidden,
                                    int n_actions, bool state_dep_sigma,
                                    RandomStream& rng) {
  GaussianPolicy p;
  p.n_actions = n_actions;
  p.state_dep_sigma = state_dep_sigma;
  const int out = state_dep_sigma ? 2 * n_actions : n_actions;
  p.theta = make_params(make_mlp_spec(obs_dim, hidden, out),
                        state_dep_sigma ? 0 : n_actions, rng);
  return p;
}

CategoricalPolicy make_categorical_policy(int obs_dim, const std::vector<int>& hidden,
                                          int n_actions, RandomStream& rng) {
  CategoricalPolicy p;
  p.n_actions = n_actions;
  p.theta = make_params(make_mlp_spec(obs_dim, hidden, n_actions), 0, rng);
  return p;
}

ValueFunction make_value_function(int obs_dim, const std::vector<int>& hidden,
                                  RandomStream& rng) {
  ValueFunction vf;
  vf.phi = make_params(make_mlp_spec(obs_dim, hidden, 1), 0, rng);
  return vf;
}

ActionSample sample_action(const GaussianPolicy& p, const Eigen::VectorXd& obs,
                           RandomStream& rng) {
  Eigen::VectorXd mu, log_sigma;
  gaussian_moments(p, obs, mu, log_sigma);
  ActionSample s;
  s.action.resize(p.n_actions);
  for (int d = 0; d < p.n_actions; ++d)
    s.action[d] = mu[d] + std::exp(log_sigma[d]) * rng.normal();
  s.log_prob = log_prob(p, obs, s.action);
  return s;
}

ActionSample sample_action(const CategoricalPolicy& p, const Eigen::VectorXd& obs,
                           RandomStream& rng) {
  const Eigen::VectorXd probs = probabilities(p, obs);
  const double u = rng.uniform();
  double acc = 0.0;
  int a = p.n_actions - 1;
  for (int i = 0; i < p.n_actions; ++i) {
    acc += probs[i];
    if (u < acc) {
      a = i;
      break;
    }
  }
  ActionSample s;
  s.action = Eigen::VectorXd::Constant(1, static_cast<double>(a));
  s.log_prob = log_prob(p, obs, s.action);
  return s;
}

double log_prob(const GaussianPolicy& p, const Eigen::VectorXd& obs,
                const Eigen::VectorXd& action) {
  Eigen::VectorXd mu, log_sigma;
  gaussian_moments(p, obs, mu, log_sigma);
  double lp = 0.0;
  for (int d = 0; d < p.n_actions; ++d) {
    const double z = (action[d] - mu[d]) / std::exp(log_sigma[d]);
    lp += -0.5 * z * z - log_sigma[d] - 0.5 * kLog2Pi;
  }
  return lp;
}

double log_prob(const CategoricalPolicy& p, const Eigen::VectorXd& obs,
                const Eigen::VectorXd& action) {
  const int a = action_index(p, action);
  const Eigen::VectorXd logits = logits_of(p, obs);
  const double m = logits.maxCoeff();
  const double lse = std::log((logits.array() - m).exp().sum());
  return logits[a] - m - lse;
}

double entropy(const GaussianPolicy& p, const Eigen::VectorXd& obs) {
  Eigen::VectorXd mu, log_sigma;
  gaussian_moments(p, obs, mu, log_sigma);
  return p.n_actions * kHalfLog2PiE + log_sigma.sum();
}

double entropy(const CategoricalPolicy& p, const Eigen::VectorXd& obs) {
  const Eigen::VectorXd probs = probabilities(p, obs);
  double h = 0.0;
  for (int i = 0; i < p.n_actions; ++i)
    if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
  return h;
}

double value(const ValueFunction& vf, const Eigen::VectorXd& obs) {
  const Eigen::VectorXd out = mlp_eval(vf.phi, obs);
  require_finite(out, "value output");
  return out[0];
}

Eigen::VectorXd mean_action(const GaussianPolicy& p, const Eigen::VectorXd& obs) {
  Eigen::VectorXd mu, log_sigma;
  gaussian_moments(p, obs, mu, log_sigma);
  return mu;
}

int argmax_action(const CategoricalPolicy& p, const Eigen::VectorXd& obs) {
  const Eigen::VectorXd logits = logits_of(p, obs);
  int a = 0;
  logits.maxCoeff(&a);
  return a;
}

Eigen::VectorXd probabilities(const CategoricalPolicy& p, const Eigen::VectorXd& obs) {
  const Eigen::VectorXd logits = logits_of(p, obs);
  // Shift by the max logit: probabilities are exactly invariant to a common
  // logit offset and the largest exponent stays at 1.
  Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

// -- taped paths --

namespace {

// Taped mean and log-sigma; log-sigma nodes come from the parameter tail in
// the state-independent configuration.
void gaussian_moments(const GaussianPolicy& p, const TapedParams& tp,
                      const Eigen::VectorXd& obs, std::vector<Var>& mu,
                      std::vector<Var>& log_sigma) {
  std::vector<Var> out = mlp_forward(p.theta, tp, obs);
  if (p.state_dep_sigma) {
    mu.assign(out.begin(), out.begin() + p.n_actions);
    log_sigma.assign(out.begin() + p.n_actions, out.end());
  } else {
    mu = std::move(out);
    const int off = extra_offset(p.theta.arch);
    log_sigma.clear();
    for (int d = 0; d < p.n_actions; ++d) log_sigma.push_back(tp.at(off + d));
  }
}

std::vector<Var> log_softmax(const std::vector<Var>& logits) {
  // The shift constant is value-only; any constant shift leaves both the
  // log-softmax value and its gradient unchanged.
  double m = logits[0].value();
  for (const Var& l : logits) m = std::max(m, l.value());
  std::vector<Var> shifted;
  shifted.reserve(logits.size());
  for (const Var& l : logits) shifted.push_back(l - m);
  Var se = exp(shifted[0]);
  for (size_t i = 1; i < shifted.size(); ++i) se = se + exp(shifted[i]);
  const Var lse = log(se);
  std::vector<Var> out;
  out.reserve(logits.size());
  for (const Var& s : shifted) out.push_back(s - lse);
  return out;
}

}  // namespace

Var log_prob(const GaussianPolicy& p, const TapedParams& params,
             const Eigen::VectorXd& obs, const Eigen::VectorXd& action) {
  std::vector<Var> mu, log_sigma;
  gaussian_moments(p, params, obs, mu, log_sigma);
  Var lp = params.tape->leaf(0.0);
  for (int d = 0; d < p.n_actions; ++d) {
    const Var z = (action[d] - mu[d]) / exp(log_sigma[d]);
    lp = lp + (-0.5 * square(z) - log_sigma[d] - 0.5 * kLog2Pi);
  }
  return lp;
}

Var log_prob(const CategoricalPolicy& p, const TapedParams& params,
             const Eigen::VectorXd& obs, const Eigen::VectorXd& action) {
  const int a = action_index(p, action);
  return log_softmax(mlp_forward(p.theta, params, obs))[a];
}

Var entropy(const GaussianPolicy& p, const TapedParams& params,
            const Eigen::VectorXd& obs) {
  std::vector<Var> mu, log_sigma;
  gaussian_moments(p, params, obs, mu, log_sigma);
  Var h = params.tape->leaf(0.0) + p.n_actions * kHalfLog2PiE;
  for (const Var& ls : log_sigma) h = h + ls;
  return h;
}

Var entropy(const CategoricalPolicy& p, const TapedParams& params,
            const Eigen::VectorXd& obs) {
  const std::vector<Var> lp = log_softmax(mlp_forward(p.theta, params, obs));
  Var h = params.tape->leaf(0.0);
  for (const Var& l : lp) h = h - exp(l) * l;
  return h;
}

Var value(const ValueFunction& vf, const TapedParams& params, const Eigen::VectorXd& obs) {
  return mlp_forward(vf.phi, params, obs)[0];
}

// -- variant dispatch --

ActionSample sample_action(const Policy& p, const Eigen::VectorXd& obs, RandomStream& rng) {
  return std::visit([&](const auto& q) { return sample_action(q, obs, rng); }, p);
}

double log_prob(const Policy& p, const Eigen::VectorXd& obs, const Eigen::VectorXd& action) {
  return std::visit([&](const auto& q) { return log_prob(q, obs, action); }, p);
}

Var log_prob(const Policy& p, const TapedParams& params, const Eigen::VectorXd& obs,
             const Eigen::VectorXd& action) {
  return std::visit([&](const auto& q) { return log_prob(q, params, obs, action); }, p);
}

double entropy(const Policy& p, const Eigen::VectorXd& obs) {
  return std::visit([&](const auto& q) { return entropy(q, obs); }, p);
}

Var entropy(const Policy& p, const TapedParams& params, const Eigen::VectorXd& obs) {
  return std::visit([&](const auto& q) { return entropy(q, params, obs); }, p);
}

Eigen::VectorXd deterministic_action(const Policy& p, const Eigen::VectorXd& obs) {
  if (const auto* g = std::get_if<GaussianPolicy>(&p)) return mean_action(*g, obs);
  const auto& c = std::get<CategoricalPolicy>(p);
  return Eigen::VectorXd::Constant(1, static_cast<double>(argmax_action(c, obs)));
}

ParamVector& policy_params(Policy& p) {
  return std::visit([](auto& q) -> ParamVector& { return q.theta; }, p);
}

const ParamVector& policy_params(const Policy& p) {
  return std::visit([](const auto& q) -> const ParamVector& { return q.theta; }, p);
}

bool entropy_is_state_independent(const Policy& p) {
  const auto* g = std::get_if<GaussianPolicy>(&p);
  return g != nullptr && !g->state_dep_sigma;
}

}  // namespace acre
