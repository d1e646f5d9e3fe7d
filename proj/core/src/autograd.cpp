#include "echognn/autograd.hpp"

#include <unordered_set>

namespace echognn {

template <typename Real>
Tensor<Real>& Node<Real>::grad_buffer() {
  if (grad.shape() != value.shape() || grad.size() != value.size())
    grad = Tensor<Real>(value.shape());
  return grad;
}

template <typename Real>
void Node<Real>::accumulate(const Tensor<Real>& g) {
  if (g.size() != value.size())
    throw ShapeError(std::string("gradient size mismatch in ") +
                     std::string(op) + ": " + to_string(g.shape()) + " vs " +
                     to_string(value.shape()));
  Tensor<Real>& buf = grad_buffer();
  Real* dst = buf.raw();
  const Real* src = g.raw();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] += src[i];
}

template <typename Real>
Var<Real>::Var(Tensor<Real> value, bool requires_grad)
    : node_(std::make_shared<Node<Real>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename Real>
Tensor<Real>& Var<Real>::mutable_value() {
  if (!node_->parents.empty())
    throw ContractError("mutable_value() on a non-leaf node");
  return node_->value;
}

template <typename Real>
Var<Real> make_result(Tensor<Real> value, std::string_view op,
                      std::vector<Var<Real>> inputs,
                      std::function<void(Node<Real>&)> rule) {
  if (!value.all_finite())
    throw NumericError("non-finite output from op '" + std::string(op) + "'");
  auto node = std::make_shared<Node<Real>>();
  node->value = std::move(value);
  node->op = op;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& in : inputs) node->parents.push_back(in.ptr());
    node->backward_rule = std::move(rule);
  }
  return Var<Real>(std::move(node));
}

template <typename Real>
void backward(const Var<Real>& loss) {
  Node<Real>* root = loss.node();
  if (root == nullptr) throw ContractError("backward() on an undefined Var");
  if (root->value.size() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " +
                        to_string(root->value.shape()));
  if (root->backward_done)
    throw ContractError("backward() already ran from this loss; reset first");
  root->backward_done = true;
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<Real>*> order;
  std::unordered_set<Node<Real>*> seen;
  std::vector<std::pair<Node<Real>*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Real>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer().fill(Real(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->backward_rule) {
      n->grad_buffer();
      n->backward_rule(*n);
    }
  }
}

template <typename Real>
void zero_grad(std::span<Var<Real>> params) {
  for (auto& p : params) p.mutable_grad().fill(Real(0));
}

#define ECHOGNN_INSTANTIATE(Real)                                            \
  template struct Node<Real>;                                                \
  template class Var<Real>;                                                  \
  template void backward<Real>(const Var<Real>&);                            \
  template void zero_grad<Real>(std::span<Var<Real>>);                       \
  template Var<Real> make_result<Real>(Tensor<Real>, std::string_view,       \
                                       std::vector<Var<Real>>,               \
                                       std::function<void(Node<Real>&)>);

ECHOGNN_INSTANTIATE(float)
ECHOGNN_INSTANTIATE(double)
#undef ECHOGNN_INSTANTIATE

}  // namespace echognn
