#pragma once

#include <Eigen/Core>
#include <functional>

namespace acre {

// Adam state for one parameter vector, bias-corrected per the usual recipe.
struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(int dim, double lr);

// One minimization step; refuses non-finite gradients.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state);

// Central differences, (f(p + eps e_i) - f(p - eps e_i)) / (2 eps).
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& at, double eps = 1e-5);

}  // namespace acre
