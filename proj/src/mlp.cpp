#include "acre/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace acre {

MlpSpec make_mlp_spec(int input, const std::vector<int>& hidden, int output) {
  MlpSpec s;
  s.sizes.push_back(input);
  for (int h : hidden) s.sizes.push_back(h);
  s.sizes.push_back(output);
  for (int w : s.sizes)
    if (w <= 0) throw std::invalid_argument("mlp: layer width must be positive");
  return s;
}

int mlp_param_count(const MlpSpec& arch) {
  int n = 0;
  for (int l = 0; l < arch.layers(); ++l)
    n += arch.sizes[l + 1] * (arch.sizes[l] + 1);
  return n;
}

int weight_offset(const MlpSpec& arch, int layer) {
  int off = 0;
  for (int l = 0; l < layer; ++l) off += arch.sizes[l + 1] * (arch.sizes[l] + 1);
  return off;
}

int bias_offset(const MlpSpec& arch, int layer) {
  return weight_offset(arch, layer) + arch.sizes[layer + 1] * arch.sizes[layer];
}

int extra_offset(const MlpSpec& arch) { return mlp_param_count(arch); }

ParamVector make_params(const MlpSpec& arch, int extra, RandomStream& rng) {
  ParamVector p;
  p.arch = arch;
  p.extra = extra;
  p.values = Eigen::VectorXd::Zero(mlp_param_count(arch) + extra);
  for (int l = 0; l < arch.layers(); ++l) {
    const int fan_in = arch.sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const int w0 = weight_offset(arch, l);
    const int nw = arch.sizes[l + 1] * arch.sizes[l];
    for (int i = 0; i < nw; ++i) p.values[w0 + i] = rng.uniform(-bound, bound);
  }
  return p;
}

ParamVector zero_params(const MlpSpec& arch, int extra) {
  ParamVector p;
  p.arch = arch;
  p.extra = extra;
  p.values = Eigen::VectorXd::Zero(mlp_param_count(arch) + extra);
  return p;
}

namespace {

void check_shapes(const ParamVector& p, const Eigen::VectorXd& input) {
  if (static_cast<int>(input.size()) != p.arch.input())
    throw std::invalid_argument("mlp: input length " + std::to_string(input.size()) +
                                " does not match layer 0 width " +
                                std::to_string(p.arch.input()));
  if (p.size() != mlp_param_count(p.arch) + p.extra)
    throw std::invalid_argument("mlp: parameter vector length does not match architecture");
}

}  // namespace

Eigen::VectorXd mlp_eval(const ParamVector& p, const Eigen::VectorXd& input) {
  check_shapes(p, input);
  Eigen::VectorXd x = input;
  for (int l = 0; l < p.arch.layers(); ++l) {
    const int rows = p.arch.sizes[l + 1];
    const int cols = p.arch.sizes[l];
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        W(p.values.data() + weight_offset(p.arch, l), rows, cols);
    Eigen::Map<const Eigen::VectorXd> b(p.values.data() + bias_offset(p.arch, l), rows);
    Eigen::VectorXd y = W * x + b;
    if (l + 1 < p.arch.layers()) y = y.array().tanh();
    x = std::move(y);
  }
  return x;
}

TapedParams lift(Tape& tape, const Eigen::VectorXd& values) {
  TapedParams tp;
  tp.tape = &tape;
  tp.base = tape.size();
  tp.count = static_cast<int32_t>(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) tape.leaf(values[i]);
  return tp;
}

std::vector<Var> mlp_forward(const ParamVector& p, const TapedParams& params,
                             const Eigen::VectorXd& input) {
  check_shapes(p, input);
  if (params.count < mlp_param_count(p.arch))
    throw std::invalid_argument("mlp: lifted parameter run shorter than architecture");
  std::vector<Var> x, y;
  for (int l = 0; l < p.arch.layers(); ++l) {
    const int rows = p.arch.sizes[l + 1];
    const int cols = p.arch.sizes[l];
    const int w0 = weight_offset(p.arch, l);
    const int b0 = bias_offset(p.arch, l);
    y.clear();
    y.reserve(rows);
    for (int i = 0; i < rows; ++i) {
      Var acc = params.at(b0 + i);
      const int row0 = w0 + i * cols;
      if (l == 0) {
        for (int j = 0; j < cols; ++j)
          acc = mul_add(acc, params.at(row0 + j), input[j]);
      } else {
        for (int j = 0; j < cols; ++j)
          acc = mul_add(acc, params.at(row0 + j), x[j]);
      }
      y.push_back(l + 1 < p.arch.layers() ? tanh(acc) : acc);
    }
    x.swap(y);
  }
  return x;
}

Eigen::VectorXd grad_of(const Tape& tape, const TapedParams& params) {
  Eigen::VectorXd g(params.count);
  for (int32_t i = 0; i < params.count; ++i) g[i] = tape.adjoint(params.at(i));
  return g;
}

}  // namespace acre
