#pragma once

#include <random>
#include <string>
#include <vector>

#include "echognn/ops.hpp"

namespace echognn {

using Rng = std::mt19937_64;

template <typename Real>
struct ParamRef {
  std::string name;
  Var<Real> var;
};

/// Non-trainable state that must survive checkpoints (batchnorm statistics).
template <typename Real>
struct BufferRef {
  std::string name;
  Tensor<Real>* tensor;
};

template <typename Real>
using ParamList = std::vector<ParamRef<Real>>;
template <typename Real>
using BufferList = std::vector<BufferRef<Real>>;

/// Uniform in +-sqrt(1/fan_in).
template <typename Real>
Tensor<Real> init_uniform(Shape shape, std::size_t fan_in, Rng& rng);

template <typename Real>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);

  Var<Real> forward(const Var<Real>& x) const;
  void collect(const std::string& prefix, ParamList<Real>& out) const;

  std::size_t in_features() const { return weight.shape()[1]; }
  std::size_t out_features() const { return weight.shape()[0]; }

  Var<Real> weight;  // [out, in]
  Var<Real> bias;    // [out], may be undefined
};

template <typename Real>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(std::size_t in_channels, std::size_t out_channels, ops::Triple kernel,
         ops::Triple stride, ops::Triple padding, Rng& rng, bool with_bias = true);

  Var<Real> forward(const Var<Real>& x) const;
  void collect(const std::string& prefix, ParamList<Real>& out) const;

  Var<Real> weight;  // [C_out, C_in, kt, kh, kw]
  Var<Real> bias;    // [C_out]
  ops::Triple stride{1, 1, 1};
  ops::Triple padding{0, 0, 0};
};

/// Normalizes over every axis except 1 (channels).
template <typename Real>
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels, Real momentum = Real(0.1), Real eps = Real(1e-5));

  /// Train mode normalizes with batch statistics and folds them into the
  /// running estimates; eval mode uses the running estimates only.
  Var<Real> forward(const Var<Real>& x);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
  void collect_buffers(const std::string& prefix, BufferList<Real>& out);

  Var<Real> gamma;
  Var<Real> beta;
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
  Real momentum = Real(0.1);
  Real eps = Real(1e-5);
  bool training = true;
};

/// Linear -> BatchNorm -> ELU -> Linear.
template <typename Real>
class MlpBlock {
 public:
  MlpBlock() = default;
  MlpBlock(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

  Var<Real> forward(const Var<Real>& x);
  void set_training(bool on) { norm.training = on; }
  void collect(const std::string& prefix, ParamList<Real>& out) const;
  void collect_buffers(const std::string& prefix, BufferList<Real>& out);

  Linear<Real> fc1;
  BatchNorm<Real> norm;
  Linear<Real> fc2;
};

/// Sinusoidal encoding: PE[j,2i] = sin(j / 10000^(2i/d)), PE[j,2i+1] = cos(...).
/// Throws ConfigError for odd d.
template <typename Real>
Tensor<Real> positional_encoding(std::size_t frames, std::size_t dim);

/// (1/N) sum |pred - target|; pred may be [N] or [N,1].
template <typename Real>
Var<Real> mae_loss(const Var<Real>& pred, const Tensor<Real>& target);

template <typename Real>
Var<Real> cross_entropy_loss(const Var<Real>& logits, const std::vector<int>& labels) {
  return ops::cross_entropy(logits, labels);
}

/// Clinical EF bins [0,30], (30,40], (40,55], (55,100] -> 0..3.
int ef_to_class(double ef);

template <typename Real>
std::size_t count_parameters(const ParamList<Real>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var.value().size();
  return n;
}

}  // namespace echognn
