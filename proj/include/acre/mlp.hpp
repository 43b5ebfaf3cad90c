#pragma once

#include <Eigen/Core>
#include <vector>

#include "acre/random.hpp"
#include "acre/tape.hpp"

namespace acre {

// Architecture descriptor: sizes[0] is the input width, sizes.back() the
// output width. Hidden activations are tanh, the output layer is linear.
struct MlpSpec {
  std::vector<int> sizes;

  int input() const { return sizes.front(); }
  int output() const { return sizes.back(); }
  int layers() const { return static_cast<int>(sizes.size()) - 1; }
  bool operator==(const MlpSpec&) const = default;
};

MlpSpec make_mlp_spec(int input, const std::vector<int>& hidden, int output);
int mlp_param_count(const MlpSpec& arch);

// Layout bijection (layer, weight|bias, index) -> flat offset. Weights of
// layer l occupy a row-major sizes[l+1] x sizes[l] block, followed by the
// biases; layers are laid out in order, `extra` trailing slots after them.
int weight_offset(const MlpSpec& arch, int layer);
int bias_offset(const MlpSpec& arch, int layer);
int extra_offset(const MlpSpec& arch);

// Flat parameter store plus its layout. `extra` trailing slots hold
// non-layer parameters such as a Gaussian head's state-independent log-sigma.
struct ParamVector {
  MlpSpec arch;
  int extra = 0;
  Eigen::VectorXd values;

  int size() const { return static_cast<int>(values.size()); }
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases 0, extra 0.
ParamVector make_params(const MlpSpec& arch, int extra, RandomStream& rng);
ParamVector zero_params(const MlpSpec& arch, int extra);

// Plain forward pass (no tape); used on rollout and evaluation paths.
Eigen::VectorXd mlp_eval(const ParamVector& p, const Eigen::VectorXd& input);

// A parameter vector lifted onto a tape as a contiguous run of leaves.
struct TapedParams {
  Tape* tape = nullptr;
  int32_t base = 0;
  int32_t count = 0;

  Var at(int i) const { return Var{tape, base + i}; }
};

TapedParams lift(Tape& tape, const Eigen::VectorXd& values);

// Taped forward pass; params must be the lifted copy of p.values.
std::vector<Var> mlp_forward(const ParamVector& p, const TapedParams& params,
                             const Eigen::VectorXd& input);

// Adjoint slice of a lifted parameter run after a backward sweep.
Eigen::VectorXd grad_of(const Tape& tape, const TapedParams& params);

}  // namespace acre
