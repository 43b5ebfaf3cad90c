#pragma once

#include <Eigen/Core>
#include <variant>
#include <vector>

#include "acre/mlp.hpp"
#include "acre/random.hpp"
#include "acre/tape.hpp"

namespace acre {

// Diagonal-Gaussian head. The backbone emits the mean; log-sigma lives in
// the parameter tail (state-independent, the default) or doubles the output
// width when state_dep_sigma is set.
struct GaussianPolicy {
  int n_actions = 0;
  bool state_dep_sigma = false;
  ParamVector theta;
};

GaussianPolicy make_gaussian_policy(int obs_dim, const std::vector<int>& hidden,
                                    int n_actions, bool state_dep_sigma,
                                    RandomStream& rng);

// Softmax head over discrete actions.
struct CategoricalPolicy {
  int n_actions = 0;
  ParamVector theta;
};

CategoricalPolicy make_categorical_policy(int obs_dim, const std::vector<int>& hidden,
                                          int n_actions, RandomStream& rng);

// Scalar state-value head.
struct ValueFunction {
  ParamVector phi;
};

ValueFunction make_value_function(int obs_dim, const std::vector<int>& hidden,
                                  RandomStream& rng);

struct ActionSample {
  Eigen::VectorXd action;  // categorical actions use one slot holding the index
  double log_prob = 0.0;
};

// -- plain (no-tape) paths, used during rollouts and evaluation --

ActionSample sample_action(const GaussianPolicy& p, const Eigen::VectorXd& obs,
                           RandomStream& rng);
ActionSample sample_action(const CategoricalPolicy& p, const Eigen::VectorXd& obs,
                           RandomStream& rng);

double log_prob(const GaussianPolicy& p, const Eigen::VectorXd& obs,
                const Eigen::VectorXd& action);
double log_prob(const CategoricalPolicy& p, const Eigen::VectorXd& obs,
                const Eigen::VectorXd& action);

double entropy(const GaussianPolicy& p, const Eigen::VectorXd& obs);
double entropy(const CategoricalPolicy& p, const Eigen::VectorXd& obs);

double value(const ValueFunction& vf, const Eigen::VectorXd& obs);

Eigen::VectorXd mean_action(const GaussianPolicy& p, const Eigen::VectorXd& obs);
int argmax_action(const CategoricalPolicy& p, const Eigen::VectorXd& obs);
Eigen::VectorXd probabilities(const CategoricalPolicy& p, const Eigen::VectorXd& obs);

// -- taped paths, used inside updates; `params` is the lifted copy of the
//    owning parameter vector --

Var log_prob(const GaussianPolicy& p, const TapedParams& params,
             const Eigen::VectorXd& obs, const Eigen::VectorXd& action);
Var log_prob(const CategoricalPolicy& p, const TapedParams& params,
             const Eigen::VectorXd& obs, const Eigen::VectorXd& action);

Var entropy(const GaussianPolicy& p, const TapedParams& params,
            const Eigen::VectorXd& obs);
Var entropy(const CategoricalPolicy& p, const TapedParams& params,
            const Eigen::VectorXd& obs);

Var value(const ValueFunction& vf, const TapedParams& params,
          const Eigen::VectorXd& obs);

// Either policy head behind one value type, dispatched with std::visit.
using Policy = std::variant<GaussianPolicy, CategoricalPolicy>;

ActionSample sample_action(const Policy& p, const Eigen::VectorXd& obs, RandomStream& rng);
double log_prob(const Policy& p, const Eigen::VectorXd& obs, const Eigen::VectorXd& action);
Var log_prob(const Policy& p, const TapedParams& params, const Eigen::VectorXd& obs,
             const Eigen::VectorXd& action);
double entropy(const Policy& p, const Eigen::VectorXd& obs);
Var entropy(const Policy& p, const TapedParams& params, const Eigen::VectorXd& obs);
Eigen::VectorXd deterministic_action(const Policy& p, const Eigen::VectorXd& obs);
ParamVector& policy_params(Policy& p);
const ParamVector& policy_params(const Policy& p);
// Gaussian entropy with state-independent sigma does not depend on obs, so
// one node per update suffices; this flag lets callers exploit that.
bool entropy_is_state_independent(const Policy& p);

}  // namespace acre
