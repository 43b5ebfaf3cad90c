#include "acre/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace acre {

AdamState make_adam(int dim, double lr) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(dim);
  s.v = Eigen::VectorXd::Zero(dim);
  s.lr = lr;
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: length mismatch");
  if (!grad.allFinite()) {
    std::string bad;
    for (Eigen::Index i = 0; i < grad.size() && bad.size() < 64; ++i)
      if (!std::isfinite(grad[i])) bad += (bad.empty() ? "" : ",") + std::to_string(i);
    throw std::domain_error("adam_step: non-finite gradient at indices " + bad);
  }
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& at, double eps) {
  Eigen::VectorXd g(at.size());
  Eigen::VectorXd p = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    p[i] = at[i] + eps;
    const double hi = f(p);
    p[i] = at[i] - eps;
    const double lo = f(p);
    p[i] = at[i];
    if (!std::isfinite(hi) || !std::isfinite(lo))
      throw std::domain_error("finite_diff_grad: non-finite evaluation at coordinate " +
                              std::to_string(i));
    g[i] = (hi - lo) / (2.0 * eps);
  }
  return g;
}

}  // namespace acre
