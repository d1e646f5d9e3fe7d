#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echognn/tensor.hpp"

namespace echognn {

/// One vertex of the dynamically recorded computation graph.
///
/// `backward_rule` reads `grad` and accumulates into the parents' grads.
/// Leaves (parameters and inputs) have no parents and no rule.
template <typename Real>
struct Node {
  Tensor<Real> value;
  Tensor<Real> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_rule;
  bool requires_grad = false;
  bool backward_done = false;
  std::string_view op = "leaf";

  /// grad += g, allocating a zero grad on first use.
  void accumulate(const Tensor<Real>& g);
  /// Returns the grad buffer, allocating zeros on first use.
  Tensor<Real>& grad_buffer();
};

/// Handle to a graph node. Cheap to copy; copies alias the same node.
template <typename Real>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<Real> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  /// A trainable leaf.
  static Var parameter(Tensor<Real> value) { return Var(std::move(value), true); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor<Real>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  /// Gradient after backward(); zeros if nothing flowed here.
  const Tensor<Real>& grad() const { return node_->grad_buffer(); }
  Tensor<Real>& mutable_grad() { return node_->grad_buffer(); }

  /// In-place access for optimizers and checkpoint loading. Leaves only.
  Tensor<Real>& mutable_value();

  Node<Real>* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node<Real>>& ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
};

/// Reverse-mode sweep from a scalar loss. Populates grad on every reachable
/// node that requires grad. Throws ContractError for a non-scalar loss or a
/// second sweep from the same loss.
template <typename Real>
void backward(const Var<Real>& loss);

template <typename Real>
void zero_grad(std::span<Var<Real>> params);

/// Builds the result node of an op. Checks the value for NaN/Inf, and records
/// parents plus the backward rule only if some input requires grad.
template <typename Real>
Var<Real> make_result(Tensor<Real> value, std::string_view op,
                      std::vector<Var<Real>> inputs,
                      std::function<void(Node<Real>&)> rule);

}  // namespace echognn
