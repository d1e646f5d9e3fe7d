#include "echognn/optim.hpp"

#include <cmath>

namespace echognn {

template <typename Real>
AdamState<Real> AdamState<Real>::zeros_like(const ParamList<Real>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.var.shape());
    s.v.emplace_back(p.var.shape());
  }
  return s;
}

template <typename Real>
void adam_step(const ParamList<Real>& params, AdamState<Real>& state, const AdamHyper& h) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ContractError("adam_step: optimizer state does not match the parameter list");
  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  const Real b1 = Real(h.beta1), b2 = Real(h.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var<Real> var = params[i].var;
    Tensor<Real>& g = var.mutable_grad();
    Tensor<Real>& p = var.mutable_value();
    Real* m = state.m[i].raw();
    Real* v = state.v[i].raw();
    if (state.m[i].shape() != p.shape())
      throw ShapeError("adam_step: moment shape mismatch for " + params[i].name);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const Real gj = g[j];
      m[j] = b1 * m[j] + (Real(1) - b1) * gj;
      v[j] = b2 * v[j] + (Real(1) - b2) * gj * gj;
      const double mhat = double(m[j]) / c1;
      const double vhat = double(v[j]) / c2;
      p[j] = Real(double(p[j]) - h.lr * mhat / (std::sqrt(vhat) + h.eps));
      if (!std::isfinite(p[j]))
        throw NumericError("adam_step: non-finite value in " + params[i].name);
    }
    g.fill(Real(0));
  }
}

template <typename Real>
void clear_grads(const ParamList<Real>& params) {
  for (const auto& p : params) {
    Var<Real> v = p.var;
    v.mutable_grad().fill(Real(0));
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(const ParamList<float>&, AdamState<float>&, const AdamHyper&);
template void adam_step<double>(const ParamList<double>&, AdamState<double>&, const AdamHyper&);
template void clear_grads<float>(const ParamList<float>&);
template void clear_grads<double>(const ParamList<double>&);

}  // namespace echognn
