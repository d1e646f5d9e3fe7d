#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "echognn/autograd.hpp"

/// Differentiable operations over Var. Every op checks operand shapes
/// (ShapeError) and the finiteness of its output (NumericError).
namespace echognn::ops {

using Index = std::vector<std::size_t>;
using Triple = std::array<std::size_t, 3>;

// Elementwise binary ops with numpy-style broadcasting.
template <typename Real> Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <typename Real> Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
template <typename Real> Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
template <typename Real> Var<Real> div(const Var<Real>& a, const Var<Real>& b);

template <typename Real> Var<Real> scale(const Var<Real>& x, Real factor);
template <typename Real> Var<Real> add_scalar(const Var<Real>& x, Real offset);

/// [m,k]x[k,n] or batched [b,m,k]x[b,k,n].
template <typename Real> Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);
/// x[n,in] * weight[out,in]^T + bias[out]; bias may be undefined.
template <typename Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias);

template <typename Real>
Var<Real> concat(const std::vector<Var<Real>>& parts, std::size_t axis);
template <typename Real> Var<Real> reshape(const Var<Real>& x, Shape shape);
template <typename Real>
Var<Real> slice(const Var<Real>& x, std::size_t axis, std::size_t begin, std::size_t end);
template <typename Real>
Var<Real> permute(const Var<Real>& x, const std::vector<std::size_t>& perm);
/// Swaps the last two axes.
template <typename Real> Var<Real> transpose(const Var<Real>& x);

template <typename Real> Var<Real> sum(const Var<Real>& x);
template <typename Real> Var<Real> sum(const Var<Real>& x, std::size_t axis, bool keepdim);
template <typename Real> Var<Real> mean(const Var<Real>& x);
template <typename Real> Var<Real> mean(const Var<Real>& x, std::size_t axis, bool keepdim);

/// Rows of x (axis 0) at `index`.
template <typename Real> Var<Real> index_select(const Var<Real>& x, const Index& index);
/// out[index[i]] += x[i] along axis 0 into `rows` rows (scatter-add).
template <typename Real>
Var<Real> index_add(const Var<Real>& x, const Index& index, std::size_t rows);

template <typename Real> Var<Real> elu(const Var<Real>& x, Real alpha = Real(1));
template <typename Real> Var<Real> sigmoid(const Var<Real>& x);
template <typename Real> Var<Real> exp(const Var<Real>& x);
template <typename Real> Var<Real> log(const Var<Real>& x);
template <typename Real> Var<Real> power(const Var<Real>& x, Real exponent);
/// |x| with subgradient 0 at 0.
template <typename Real> Var<Real> abs(const Var<Real>& x);

/// While alive, hashes which side of the kink every elu and abs input falls
/// on (this thread only). Two evaluations with equal signatures stayed on the
/// same smooth piece, which is what finite differences need.
class KinkTrace {
 public:
  KinkTrace();
  ~KinkTrace();
  KinkTrace(const KinkTrace&) = delete;
  KinkTrace& operator=(const KinkTrace&) = delete;

  std::uint64_t signature() const { return hash_; }
  void reset() { hash_ = kOffset; }

  /// No-op unless a trace is active.
  static void record(bool upper);
  static bool active();

 private:
  static constexpr std::uint64_t kOffset = 1469598103934665603ull;
  std::uint64_t hash_ = kOffset;
  KinkTrace* previous_ = nullptr;
};

/// Cross-correlation of x[N,C,T,H,W] with weight[O,C,kt,kh,kw]; bias[O] optional.
template <typename Real>
Var<Real> conv3d(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                 Triple stride, Triple padding);

/// Batch statistics over every axis but 1. Writes the biased batch mean and
/// variance to the out-params when they are non-null.
template <typename Real>
Var<Real> batch_norm_train(const Var<Real>& x, const Var<Real>& gamma,
                           const Var<Real>& beta, Real eps,
                           Tensor<Real>* batch_mean = nullptr,
                           Tensor<Real>* batch_var = nullptr);
/// Affine normalization with fixed statistics.
template <typename Real>
Var<Real> batch_norm_eval(const Var<Real>& x, const Var<Real>& gamma,
                          const Var<Real>& beta, const Tensor<Real>& mean,
                          const Tensor<Real>& var, Real eps);

/// Mean negative log-softmax of the labelled class; logits [N,C].
template <typename Real>
Var<Real> cross_entropy(const Var<Real>& logits, const std::vector<int>& labels);
/// Mean binary cross-entropy between sigmoid(logits) and targets in [0,1].
template <typename Real>
Var<Real> bce_with_logits(const Var<Real>& logits, const Tensor<Real>& targets);

/// Registry of differentiable op kinds, used by the generic dispatcher and
/// by the gradient suite.
enum class OpKind {
  add, sub, mul, div, scale, add_scalar, matmul, linear, concat, reshape,
  slice, permute, sum, mean, index_select, index_add, elu, sigmoid, exp, log,
  power, abs, conv3d, batch_norm, cross_entropy, bce_with_logits,
};

std::string_view name(OpKind kind);
std::span<const OpKind> registered_ops();

template <typename Real>
struct OpAttrs {
  std::size_t axis = 0;
  bool keepdim = false;
  bool reduce_all = true;  // sum/mean over every element
  std::size_t begin = 0;
  std::size_t end = 0;
  Shape shape;
  std::vector<std::size_t> perm;
  Index index;
  std::size_t rows = 0;
  Real scalar = Real(1);  // scale factor, offset, exponent, ELU alpha, BN eps
  Triple stride{1, 1, 1};
  Triple padding{0, 0, 0};
  std::vector<int> labels;
  Tensor<Real> targets;
};

/// Dispatches `kind` over `inputs`; arity and attrs are per kind.
template <typename Real>
Var<Real> forward_op(OpKind kind, const std::vector<Var<Real>>& inputs,
                     const OpAttrs<Real>& attrs = {});

/// Returns a non-differentiable view of x's value.
template <typename Real> Var<Real> detach(const Var<Real>& x) {
  return Var<Real>(x.value(), false);
}

}  // namespace echognn::ops
