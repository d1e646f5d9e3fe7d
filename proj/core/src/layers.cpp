#include "echognn/layers.hpp"

#include <cmath>

namespace echognn {

template <typename Real>
Tensor<Real> init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / double(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.data()) v = Real(dist(rng));
  return t;
}

template <typename Real>
Linear<Real>::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias)
    : weight(Var<Real>::parameter(init_uniform<Real>({out, in}, in, rng))) {
  if (with_bias) bias = Var<Real>::parameter(Tensor<Real>({out}));
}

template <typename Real>
Var<Real> Linear<Real>::forward(const Var<Real>& x) const {
  return ops::linear(x, weight, bias);
}

template <typename Real>
void Linear<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

template <typename Real>
Conv3d<Real>::Conv3d(std::size_t in_channels, std::size_t out_channels, ops::Triple kernel,
                     ops::Triple stride_, ops::Triple padding_, Rng& rng, bool with_bias)
    : weight(Var<Real>::parameter(init_uniform<Real>(
          {out_channels, in_channels, kernel[0], kernel[1], kernel[2]},
          in_channels * kernel[0] * kernel[1] * kernel[2], rng))),
      stride(stride_),
      padding(padding_) {
  if (with_bias) bias = Var<Real>::parameter(Tensor<Real>({out_channels}));
}

template <typename Real>
Var<Real> Conv3d<Real>::forward(const Var<Real>& x) const {
  return ops::conv3d(x, weight, bias, stride, padding);
}

template <typename Real>
void Conv3d<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

template <typename Real>
BatchNorm<Real>::BatchNorm(std::size_t channels, Real momentum_, Real eps_)
    : gamma(Var<Real>::parameter(Tensor<Real>({channels}, Real(1)))),
      beta(Var<Real>::parameter(Tensor<Real>({channels}))),
      running_mean({channels}),
      running_var({channels}, Real(1)),
      momentum(momentum_),
      eps(eps_) {}

template <typename Real>
Var<Real> BatchNorm<Real>::forward(const Var<Real>& x) {
  if (!training)
    return ops::batch_norm_eval(x, gamma, beta, running_mean, running_var, eps);
  Tensor<Real> mu, var;
  Var<Real> y = ops::batch_norm_train(x, gamma, beta, eps, &mu, &var);
  for (std::size_t c = 0; c < mu.size(); ++c) {
    running_mean[c] = (Real(1) - momentum) * running_mean[c] + momentum * mu[c];
    running_var[c] = (Real(1) - momentum) * running_var[c] + momentum * var[c];
  }
  return y;
}

template <typename Real>
void BatchNorm<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

template <typename Real>
void BatchNorm<Real>::collect_buffers(const std::string& prefix, BufferList<Real>& out) {
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

template <typename Real>
MlpBlock<Real>::MlpBlock(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng)
    : fc1(in, hidden, rng), norm(hidden), fc2(hidden, out, rng) {}

template <typename Real>
Var<Real> MlpBlock<Real>::forward(const Var<Real>& x) {
  return fc2.forward(ops::elu(norm.forward(fc1.forward(x))));
}

template <typename Real>
void MlpBlock<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  fc1.collect(prefix + ".fc1", out);
  norm.collect(prefix + ".bn", out);
  fc2.collect(prefix + ".fc2", out);
}

template <typename Real>
void MlpBlock<Real>::collect_buffers(const std::string& prefix, BufferList<Real>& out) {
  norm.collect_buffers(prefix + ".bn", out);
}

template <typename Real>
Tensor<Real> positional_encoding(std::size_t frames, std::size_t dim) {
  if (dim % 2 != 0)
    throw ConfigError("positional encoding needs an even dimension, got " + std::to_string(dim));
  Tensor<Real> pe({frames, dim});
  for (std::size_t j = 0; j < frames; ++j)
    for (std::size_t i = 0; i < dim / 2; ++i) {
      const double angle = double(j) / std::pow(10000.0, double(2 * i) / double(dim));
      pe[j * dim + 2 * i] = Real(std::sin(angle));
      pe[j * dim + 2 * i + 1] = Real(std::cos(angle));
    }
  return pe;
}

template <typename Real>
Var<Real> mae_loss(const Var<Real>& pred, const Tensor<Real>& target) {
  if (target.size() == 0) throw ContractError("mae_loss: empty batch");
  if (pred.value().size() != target.size())
    throw ShapeError("mae_loss: " + to_string(pred.shape()) + " predictions for " +
                     to_string(target.shape()) + " targets");
  Var<Real> t(target.reshaped(pred.shape()));
  return ops::mean(ops::abs(ops::sub(pred, t)));
}

int ef_to_class(double ef) {
  if (!(ef >= 0.0 && ef <= 100.0))
    throw ContractError("ef_to_class: EF " + std::to_string(ef) + " outside [0,100]");
  if (ef <= 30.0) return 0;
  if (ef <= 40.0) return 1;
  if (ef <= 55.0) return 2;
  return 3;
}

#define ECHOGNN_INSTANTIATE(Real)                                                  \
  template Tensor<Real> init_uniform<Real>(Shape, std::size_t, Rng&);              \
  template class Linear<Real>;                                                     \
  template class Conv3d<Real>;                                                     \
  template class BatchNorm<Real>;                                                  \
  template class MlpBlock<Real>;                                                   \
  template Tensor<Real> positional_encoding<Real>(std::size_t, std::size_t);       \
  template Var<Real> mae_loss<Real>(const Var<Real>&, const Tensor<Real>&);

ECHOGNN_INSTANTIATE(float)
ECHOGNN_INSTANTIATE(double)
#undef ECHOGNN_INSTANTIATE

}  // namespace echognn
