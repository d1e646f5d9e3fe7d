#pragma once

#include <cstdint>
#include <vector>

#include "echognn/layers.hpp"

namespace echognn {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments, one pair per parameter, plus the step count.
template <typename Real>
struct AdamState {
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ParamList<Real>& params);
};

/// Bias-corrected Adam:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// Gradients are read from the parameters' grad buffers, which are then
/// reset to zero. Throws NumericError if an update is not finite.
template <typename Real>
void adam_step(const ParamList<Real>& params, AdamState<Real>& state, const AdamHyper& h);

/// Sets every parameter's gradient to zero.
template <typename Real>
void clear_grads(const ParamList<Real>& params);

}  // namespace echognn
