#include "echognn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace echognn::ops {
namespace {

// Row-major products. Operands are copied into Eigen-owned storage first:
// Eigen picks kernels by pointer alignment, so mapping tensor buffers in place
// makes results differ in the last bits between otherwise identical runs.
template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using ConstMap = Eigen::Map<const Mat<Real>>;
template <typename Real>
using MutMap = Eigen::Map<Mat<Real>>;

// C(m,n) += A(m,k) * B(k,n)
template <typename Real>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const Real* A,
             const Real* B, Real* C) {
  const Mat<Real> a = ConstMap<Real>(A, m, k), b = ConstMap<Real>(B, k, n);
  const Mat<Real> c = a * b;
  MutMap<Real>(C, m, n) += c;
}

// C(m,n) += A(k,m)^T * B(k,n)
template <typename Real>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const Real* A,
             const Real* B, Real* C) {
  const Mat<Real> a = ConstMap<Real>(A, k, m), b = ConstMap<Real>(B, k, n);
  const Mat<Real> c = a.transpose() * b;
  MutMap<Real>(C, m, n) += c;
}

// C(m,n) += A(m,k) * B(n,k)^T
template <typename Real>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const Real* A,
             const Real* B, Real* C) {
  const Mat<Real> a = ConstMap<Real>(A, m, k), b = ConstMap<Real>(B, n, k);
  const Mat<Real> c = a * b.transpose();
  MutMap<Real>(C, m, n) += c;
}

template <typename Real>
bool wants(const Node<Real>& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

template <typename Real>
Tensor<Real>& grad_of(Node<Real>& self, std::size_t i) {
  return self.parents[i]->grad_buffer();
}

[[noreturn]] void shape_fail(std::string_view op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

// ---------------------------------------------------------------------------
// Broadcasting

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
};

Broadcast plan_broadcast(const Shape& a, const Shape& b, std::string_view op) {
  Broadcast p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t r = std::max(a.size(), b.size());
  const auto sa = strides_of(a);
  const auto sb = strides_of(b);
  p.out.resize(r);
  p.stride_a.assign(r, 0);
  p.stride_b.assign(r, 0);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t oa = r - a.size();
    const std::size_t ob = r - b.size();
    const std::size_t da = i >= oa ? a[i - oa] : 1;
    const std::size_t db = i >= ob ? b[i - ob] : 1;
    if (da != db && da != 1 && db != 1)
      shape_fail(op, "cannot broadcast " + to_string(a) + " with " + to_string(b));
    p.out[i] = std::max(da, db);
    if (da != 1) p.stride_a[i] = sa[i - oa];
    if (db != 1) p.stride_b[i] = sb[i - ob];
  }
  return p;
}

template <typename F>
void for_each_broadcast(const Broadcast& p, F&& f) {
  const std::size_t n = numel(p.out);
  if (p.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  if (n == 0) return;
  const std::size_t r = p.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      ia += p.stride_a[d];
      ib += p.stride_b[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.stride_a[d] * p.out[d];
      ib -= p.stride_b[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

template <typename Real, typename Fwd, typename DA, typename DB>
Var<Real> binary(const Var<Real>& a, const Var<Real>& b, std::string_view op,
                 Fwd fwd, DA dfa, DB dfb) {
  auto plan = plan_broadcast(a.shape(), b.shape(), op);
  Tensor<Real> out(plan.out);
  const Real* pa = a.value().raw();
  const Real* pb = b.value().raw();
  Real* po = out.raw();
  for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    po[i] = fwd(pa[ia], pb[ib]);
  });
  return make_result<Real>(
      std::move(out), op, {a, b},
      [plan = std::move(plan), dfa, dfb](Node<Real>& self) {
        const Real* g = self.grad.raw();
        const Real* xa = self.parents[0]->value.raw();
        const Real* xb = self.parents[1]->value.raw();
        Real* ga = wants(self, 0) ? grad_of(self, 0).raw() : nullptr;
        Real* gb = wants(self, 1) ? grad_of(self, 1).raw() : nullptr;
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          if (ga) ga[ia] += g[i] * dfa(xa[ia], xb[ib]);
          if (gb) gb[ib] += g[i] * dfb(xa[ia], xb[ib]);
        });
      });
}

// dfdx(x, y) receives the input and the output value.
template <typename Real, typename Fwd, typename Deriv>
Var<Real> unary(const Var<Real>& x, std::string_view op, Fwd fwd, Deriv dfdx) {
  Tensor<Real> out(x.shape());
  const Real* px = x.value().raw();
  Real* po = out.raw();
  for (std::size_t i = 0; i < out.size(); ++i) po[i] = fwd(px[i]);
  return make_result<Real>(std::move(out), op, {x}, [dfdx](Node<Real>& self) {
    const Real* g = self.grad.raw();
    const Real* px = self.parents[0]->value.raw();
    const Real* py = self.value.raw();
    Real* gx = grad_of(self, 0).raw();
    for (std::size_t i = 0; i < self.value.size(); ++i) gx[i] += g[i] * dfdx(px[i], py[i]);
  });
}

// Views a tensor as [outer, axis, inner] around `axis`.
struct AxisView {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

// ---------------------------------------------------------------------------
// Convolution helpers

struct ConvGeom {
  std::size_t C, T, H, W;     // input per sample
  std::size_t kt, kh, kw;     // kernel
  std::size_t st, sh, sw;     // stride
  std::size_t pt, ph, pw;     // padding
  std::size_t To, Ho, Wo;     // output
  std::size_t K() const { return C * kt * kh * kw; }
  std::size_t P() const { return To * Ho * Wo; }
  bool pointwise() const {
    return kt == 1 && kh == 1 && kw == 1 && st == 1 && sh == 1 && sw == 1 &&
           pt == 0 && ph == 0 && pw == 0;
  }
};

template <typename Real>
void im2col(const Real* x, const ConvGeom& g, Real* col) {
  const std::size_t P = g.P();
  for (std::size_t c = 0; c < g.C; ++c)
    for (std::size_t a = 0; a < g.kt; ++a)
      for (std::size_t b = 0; b < g.kh; ++b)
        for (std::size_t e = 0; e < g.kw; ++e) {
          Real* dst = col + (((c * g.kt + a) * g.kh + b) * g.kw + e) * P;
          for (std::size_t to = 0; to < g.To; ++to) {
            const long t = long(to * g.st + a) - long(g.pt);
            for (std::size_t ho = 0; ho < g.Ho; ++ho) {
              const long h = long(ho * g.sh + b) - long(g.ph);
              Real* row = dst + (to * g.Ho + ho) * g.Wo;
              if (t < 0 || t >= long(g.T) || h < 0 || h >= long(g.H)) {
                std::fill(row, row + g.Wo, Real(0));
                continue;
              }
              const Real* src = x + ((c * g.T + std::size_t(t)) * g.H + std::size_t(h)) * g.W;
              for (std::size_t wo = 0; wo < g.Wo; ++wo) {
                const long w = long(wo * g.sw + e) - long(g.pw);
                row[wo] = (w < 0 || w >= long(g.W)) ? Real(0) : src[w];
              }
            }
          }
        }
}

template <typename Real>
void col2im(const Real* col, const ConvGeom& g, Real* dx) {
  const std::size_t P = g.P();
  for (std::size_t c = 0; c < g.C; ++c)
    for (std::size_t a = 0; a < g.kt; ++a)
      for (std::size_t b = 0; b < g.kh; ++b)
        for (std::size_t e = 0; e < g.kw; ++e) {
          const Real* src = col + (((c * g.kt + a) * g.kh + b) * g.kw + e) * P;
          for (std::size_t to = 0; to < g.To; ++to) {
            const long t = long(to * g.st + a) - long(g.pt);
            if (t < 0 || t >= long(g.T)) continue;
            for (std::size_t ho = 0; ho < g.Ho; ++ho) {
              const long h = long(ho * g.sh + b) - long(g.ph);
              if (h < 0 || h >= long(g.H)) continue;
              const Real* row = src + (to * g.Ho + ho) * g.Wo;
              Real* dst = dx + ((c * g.T + std::size_t(t)) * g.H + std::size_t(h)) * g.W;
              for (std::size_t wo = 0; wo < g.Wo; ++wo) {
                const long w = long(wo * g.sw + e) - long(g.pw);
                if (w >= 0 && w < long(g.W)) dst[w] += row[wo];
              }
            }
          }
        }
}

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                     const char* axis) {
  if (s == 0) shape_fail("conv3d", std::string("zero stride on ") + axis);
  if (in + 2 * p < k)
    shape_fail("conv3d", std::string("kernel larger than padded input on ") + axis);
  return (in + 2 * p - k) / s + 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  return binary<Real>(
      a, b, "add", [](Real x, Real y) { return x + y; },
      [](Real, Real) { return Real(1); }, [](Real, Real) { return Real(1); });
}

template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  return binary<Real>(
      a, b, "sub", [](Real x, Real y) { return x - y; },
      [](Real, Real) { return Real(1); }, [](Real, Real) { return Real(-1); });
}

template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  return binary<Real>(
      a, b, "mul", [](Real x, Real y) { return x * y; },
      [](Real, Real y) { return y; }, [](Real x, Real) { return x; });
}

template <typename Real>
Var<Real> div(const Var<Real>& a, const Var<Real>& b) {
  return binary<Real>(
      a, b, "div", [](Real x, Real y) { return x / y; },
      [](Real, Real y) { return Real(1) / y; },
      [](Real x, Real y) { return -x / (y * y); });
}

template <typename Real>
Var<Real> scale(const Var<Real>& x, Real factor) {
  return unary<Real>(
      x, "scale", [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

template <typename Real>
Var<Real> add_scalar(const Var<Real>& x, Real offset) {
  return unary<Real>(
      x, "add_scalar", [offset](Real v) { return v + offset; },
      [](Real, Real) { return Real(1); });
}

namespace {
thread_local KinkTrace* active_trace = nullptr;
}  // namespace

KinkTrace::KinkTrace() : previous_(active_trace) { active_trace = this; }
KinkTrace::~KinkTrace() { active_trace = previous_; }
bool KinkTrace::active() { return active_trace != nullptr; }
void KinkTrace::record(bool upper) {
  if (!active_trace) return;
  active_trace->hash_ = (active_trace->hash_ ^ (upper ? 2u : 1u)) * 1099511628211ull;
}

template <typename Real>
void trace_kinks(const Var<Real>& x) {
  if (!KinkTrace::active()) return;
  for (Real v : x.value().data()) KinkTrace::record(v >= 0);
}

template <typename Real>
Var<Real> elu(const Var<Real>& x, Real alpha) {
  trace_kinks(x);
  return unary<Real>(
      x, "elu", [alpha](Real v) { return v >= 0 ? v : alpha * std::expm1(v); },
      [alpha](Real v, Real) { return v >= 0 ? Real(1) : alpha * std::exp(v); });
}

template <typename Real>
Var<Real> sigmoid(const Var<Real>& x) {
  return unary<Real>(
      x, "sigmoid",
      [](Real v) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
Var<Real> exp(const Var<Real>& x) {
  return unary<Real>(
      x, "exp", [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

template <typename Real>
Var<Real> log(const Var<Real>& x) {
  return unary<Real>(
      x, "log", [](Real v) { return std::log(v); },
      [](Real v, Real) { return Real(1) / v; });
}

template <typename Real>
Var<Real> power(const Var<Real>& x, Real exponent) {
  return unary<Real>(
      x, "power", [exponent](Real v) { return std::pow(v, exponent); },
      [exponent](Real v, Real) { return exponent * std::pow(v, exponent - Real(1)); });
}

template <typename Real>
Var<Real> abs(const Var<Real>& x) {
  trace_kinks(x);
  return unary<Real>(
      x, "abs", [](Real v) { return std::abs(v); },
      [](Real v, Real) { return v > 0 ? Real(1) : (v < 0 ? Real(-1) : Real(0)); });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  std::size_t batch = 1, m, k, n;
  Shape out_shape;
  if (sa.size() == 2 && sb.size() == 2) {
    m = sa[0], k = sa[1], n = sb[1];
    if (sb[0] != k) shape_fail("matmul", to_string(sa) + " x " + to_string(sb));
    out_shape = {m, n};
  } else if (sa.size() == 3 && sb.size() == 3) {
    batch = sa[0], m = sa[1], k = sa[2], n = sb[2];
    if (sb[0] != batch || sb[1] != k)
      shape_fail("matmul", to_string(sa) + " x " + to_string(sb));
    out_shape = {batch, m, n};
  } else {
    shape_fail("matmul", "operands must both be rank 2 or rank 3, got " +
                             to_string(sa) + " and " + to_string(sb));
  }
  Tensor<Real> out(out_shape);
  for (std::size_t i = 0; i < batch; ++i) {
    gemm_nn(m, k, n, a.value().raw() + i * m * k, b.value().raw() + i * k * n,
            out.raw() + i * m * n);
  }
  return make_result<Real>(std::move(out), "matmul", {a, b},
                           [batch, m, k, n](Node<Real>& self) {
    const Real* g = self.grad.raw();
    const Real* pa = self.parents[0]->value.raw();
    const Real* pb = self.parents[1]->value.raw();
    for (std::size_t i = 0; i < batch; ++i) {
      const Real* G = g + i * m * n;
      if (wants(self, 0))
        gemm_nt(m, n, k, G, pb + i * k * n, grad_of(self, 0).raw() + i * m * k);
      if (wants(self, 1))
        gemm_tn(k, m, n, pa + i * m * k, G, grad_of(self, 1).raw() + i * k * n);
    }
  });
}

template <typename Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias) {
  const Shape& sx = x.shape();
  const Shape& sw = weight.shape();
  if (sx.size() != 2 || sw.size() != 2 || sx[1] != sw[1])
    shape_fail("linear", "input " + to_string(sx) + " vs weight " + to_string(sw));
  const std::size_t n = sx[0], in = sx[1], outf = sw[0];
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{outf})
    shape_fail("linear", "bias " + to_string(bias.shape()) + " for " + std::to_string(outf) + " outputs");
  Tensor<Real> out({n, outf});
  gemm_nt(n, in, outf, x.value().raw(), weight.value().raw(), out.raw());
  if (has_bias) {
    const Real* pb = bias.value().raw();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < outf; ++c) out[r * outf + c] += pb[c];
  }
  std::vector<Var<Real>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<Real>(std::move(out), "linear", std::move(inputs),
                           [n, in, outf, has_bias](Node<Real>& self) {
    const Real* G = self.grad.raw();
    if (wants(self, 0))
      gemm_nn(n, outf, in, G, self.parents[1]->value.raw(), grad_of(self, 0).raw());
    if (wants(self, 1))
      gemm_tn(outf, n, in, G, self.parents[0]->value.raw(), grad_of(self, 1).raw());
    if (has_bias && wants(self, 2)) {
      Real* gb = grad_of(self, 2).raw();
      const Real* g = self.grad.raw();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < outf; ++c) gb[c] += g[r * outf + c];
    }
  });
}

// ---------------------------------------------------------------------------
// Structural

template <typename Real>
Var<Real> concat(const std::vector<Var<Real>>& parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) shape_fail("concat", "axis out of range");
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;  // per-part contiguous block length
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) shape_fail("concat", "rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != s0[i])
        shape_fail("concat", to_string(s) + " vs " + to_string(s0));
    out_shape[axis] += s[axis];
    widths.push_back(axis_view(s, axis).n * axis_view(s, axis).inner);
  }
  const AxisView ov = axis_view(out_shape, axis);
  const std::size_t row = ov.n * ov.inner;
  Tensor<Real> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Real* src = parts[p].value().raw();
    for (std::size_t o = 0; o < ov.outer; ++o)
      std::copy_n(src + o * widths[p], widths[p], out.raw() + o * row + offset);
    offset += widths[p];
  }
  return make_result<Real>(std::move(out), "concat", parts,
                           [widths, outer = ov.outer, row](Node<Real>& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (wants(self, p)) {
        Real* dst = grad_of(self, p).raw();
        for (std::size_t o = 0; o < outer; ++o) {
          const Real* src = self.grad.raw() + o * row + offset;
          for (std::size_t j = 0; j < widths[p]; ++j) dst[o * widths[p] + j] += src[j];
        }
      }
      offset += widths[p];
    }
  });
}

template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
  if (numel(shape) != x.value().size())
    shape_fail("reshape", to_string(x.shape()) + " -> " + to_string(shape));
  return make_result<Real>(x.value().reshaped(std::move(shape)), "reshape", {x},
                           [](Node<Real>& self) {
    Real* dst = grad_of(self, 0).raw();
    const Real* src = self.grad.raw();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dst[i] += src[i];
  });
}

template <typename Real>
Var<Real> slice(const Var<Real>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.size() || begin > end || end > s[axis])
    shape_fail("slice", "range [" + std::to_string(begin) + "," + std::to_string(end) +
                            ") on axis " + std::to_string(axis) + " of " + to_string(s));
  const AxisView v = axis_view(s, axis);
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const std::size_t len = (end - begin) * v.inner;
  Tensor<Real> out(out_shape);
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(x.value().raw() + (o * v.n + begin) * v.inner, len, out.raw() + o * len);
  return make_result<Real>(std::move(out), "slice", {x}, [v, begin, len](Node<Real>& self) {
    Real* dst = grad_of(self, 0).raw();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const Real* src = self.grad.raw() + o * len;
      Real* d = dst + (o * v.n + begin) * v.inner;
      for (std::size_t j = 0; j < len; ++j) d[j] += src[j];
    }
  });
}

template <typename Real>
Var<Real> permute(const Var<Real>& x, const std::vector<std::size_t>& perm) {
  const Shape& s = x.shape();
  if (perm.size() != s.size()) shape_fail("permute", "permutation rank mismatch");
  std::vector<bool> used(s.size(), false);
  for (auto p : perm) {
    if (p >= s.size() || used[p]) shape_fail("permute", "invalid permutation");
    used[p] = true;
  }
  Shape out_shape(s.size());
  const auto in_strides = strides_of(s);
  std::vector<std::size_t> step(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out_shape[i] = s[perm[i]];
    step[i] = in_strides[perm[i]];
  }
  // src_index[i] = input offset of output element i.
  const std::size_t n = numel(out_shape);
  std::vector<std::size_t> src_index(n);
  {
    std::vector<std::size_t> idx(s.size(), 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      src_index[i] = off;
      for (std::size_t d = s.size(); d-- > 0;) {
        ++idx[d];
        off += step[d];
        if (idx[d] < out_shape[d]) break;
        off -= step[d] * out_shape[d];
        idx[d] = 0;
      }
    }
  }
  Tensor<Real> out(out_shape);
  const Real* px = x.value().raw();
  for (std::size_t i = 0; i < n; ++i) out[i] = px[src_index[i]];
  return make_result<Real>(std::move(out), "permute", {x},
                           [src_index = std::move(src_index)](Node<Real>& self) {
    Real* dst = grad_of(self, 0).raw();
    const Real* g = self.grad.raw();
    for (std::size_t i = 0; i < src_index.size(); ++i) dst[src_index[i]] += g[i];
  });
}

template <typename Real>
Var<Real> transpose(const Var<Real>& x) {
  const std::size_t r = x.shape().size();
  if (r < 2) shape_fail("transpose", "rank < 2");
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[r - 1], perm[r - 2]);
  return permute(x, perm);
}

// ---------------------------------------------------------------------------
// Reductions

template <typename Real>
Var<Real> sum(const Var<Real>& x) {
  Real acc = 0;
  for (Real v : x.value().data()) acc += v;
  return make_result<Real>(Tensor<Real>::scalar(acc), "sum", {x}, [](Node<Real>& self) {
    const Real g = self.grad[0];
    for (Real& d : grad_of(self, 0).data()) d += g;
  });
}

template <typename Real>
Var<Real> sum(const Var<Real>& x, std::size_t axis, bool keepdim) {
  const Shape& s = x.shape();
  if (axis >= s.size()) shape_fail("sum", "axis out of range for " + to_string(s));
  const AxisView v = axis_view(s, axis);
  Shape out_shape = s;
  if (keepdim)
    out_shape[axis] = 1;
  else
    out_shape.erase(out_shape.begin() + long(axis));
  Tensor<Real> out(out_shape);
  const Real* px = x.value().raw();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.n; ++j)
      for (std::size_t i = 0; i < v.inner; ++i)
        out[o * v.inner + i] += px[(o * v.n + j) * v.inner + i];
  return make_result<Real>(std::move(out), "sum_axis", {x}, [v](Node<Real>& self) {
    Real* dst = grad_of(self, 0).raw();
    const Real* g = self.grad.raw();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.n; ++j)
        for (std::size_t i = 0; i < v.inner; ++i)
          dst[(o * v.n + j) * v.inner + i] += g[o * v.inner + i];
  });
}

template <typename Real>
Var<Real> mean(const Var<Real>& x) {
  if (x.value().empty()) shape_fail("mean", "empty tensor");
  return scale(sum(x), Real(1) / Real(x.value().size()));
}

template <typename Real>
Var<Real> mean(const Var<Real>& x, std::size_t axis, bool keepdim) {
  if (axis >= x.shape().size() || x.shape()[axis] == 0)
    shape_fail("mean", "bad axis for " + to_string(x.shape()));
  return scale(sum(x, axis, keepdim), Real(1) / Real(x.shape()[axis]));
}

// ---------------------------------------------------------------------------
// Gather / scatter

template <typename Real>
Var<Real> index_select(const Var<Real>& x, const Index& index) {
  const Shape& s = x.shape();
  if (s.empty()) shape_fail("index_select", "scalar input");
  const std::size_t rows = s[0];
  const std::size_t width = rows ? x.value().size() / rows : 0;
  for (auto i : index)
    if (i >= rows) shape_fail("index_select", "index " + std::to_string(i) + " >= " + std::to_string(rows));
  Shape out_shape = s;
  out_shape[0] = index.size();
  Tensor<Real> out(out_shape);
  for (std::size_t r = 0; r < index.size(); ++r)
    std::copy_n(x.value().raw() + index[r] * width, width, out.raw() + r * width);
  return make_result<Real>(std::move(out), "index_select", {x},
                           [index, width](Node<Real>& self) {
    Real* dst = grad_of(self, 0).raw();
    const Real* g = self.grad.raw();
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t j = 0; j < width; ++j) dst[index[r] * width + j] += g[r * width + j];
  });
}

template <typename Real>
Var<Real> index_add(const Var<Real>& x, const Index& index, std::size_t rows) {
  const Shape& s = x.shape();
  if (s.empty() || s[0] != index.size())
    shape_fail("index_add", "index length " + std::to_string(index.size()) + " vs " + to_string(s));
  const std::size_t width = s[0] ? x.value().size() / s[0] : 0;
  for (auto i : index)
    if (i >= rows) shape_fail("index_add", "index " + std::to_string(i) + " >= " + std::to_string(rows));
  Shape out_shape = s;
  out_shape[0] = rows;
  Tensor<Real> out(out_shape);
  const Real* px = x.value().raw();
  for (std::size_t r = 0; r < index.size(); ++r)
    for (std::size_t j = 0; j < width; ++j) out[index[r] * width + j] += px[r * width + j];
  return make_result<Real>(std::move(out), "index_add", {x},
                           [index, width](Node<Real>& self) {
    Real* dst = grad_of(self, 0).raw();
    const Real* g = self.grad.raw();
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t j = 0; j < width; ++j) dst[r * width + j] += g[index[r] * width + j];
  });
}

// ---------------------------------------------------------------------------
// Convolution

template <typename Real>
Var<Real> conv3d(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                 Triple stride, Triple padding) {
  const Shape& sx = x.shape();
  const Shape& sw = weight.shape();
  if (sx.size() != 5 || sw.size() != 5)
    shape_fail("conv3d", "expected rank-5 input and weight, got " + to_string(sx) +
                             " and " + to_string(sw));
  if (sw[1] != sx[1])
    shape_fail("conv3d", "input channels " + std::to_string(sx[1]) + " vs weight " + to_string(sw));
  const std::size_t N = sx[0], O = sw[0];
  ConvGeom g{sx[1], sx[2], sx[3], sx[4], sw[2], sw[3], sw[4],
             stride[0], stride[1], stride[2], padding[0], padding[1], padding[2],
             0, 0, 0};
  g.To = conv_out(g.T, g.kt, g.st, g.pt, "time");
  g.Ho = conv_out(g.H, g.kh, g.sh, g.ph, "height");
  g.Wo = conv_out(g.W, g.kw, g.sw, g.pw, "width");
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{O})
    shape_fail("conv3d", "bias " + to_string(bias.shape()) + " for " + std::to_string(O) + " channels");

  const std::size_t K = g.K(), P = g.P();
  const std::size_t in_stride = g.C * g.T * g.H * g.W;
  Tensor<Real> out({N, O, g.To, g.Ho, g.Wo});
  std::vector<Real> col(g.pointwise() ? 0 : K * P);
  const Real* Wm = weight.value().raw();
  for (std::size_t n = 0; n < N; ++n) {
    const Real* xn = x.value().raw() + n * in_stride;
    const Real* cp = xn;
    if (!g.pointwise()) {
      im2col(xn, g, col.data());
      cp = col.data();
    }
    Real* Y = out.raw() + n * O * P;
    gemm_nn(O, K, P, Wm, cp, Y);
    if (has_bias) {
      const Real* pb = bias.value().raw();
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t p = 0; p < P; ++p) Y[o * P + p] += pb[o];
    }
  }

  std::vector<Var<Real>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<Real>(std::move(out), "conv3d", std::move(inputs),
                           [g, N, O, K, P, in_stride, has_bias](Node<Real>& self) {
    const Real* xv = self.parents[0]->value.raw();
    const Real* Wm = self.parents[1]->value.raw();
    const bool need_x = wants(self, 0);
    const bool need_w = wants(self, 1);
    const bool need_b = has_bias && wants(self, 2);
    std::vector<Real> col(g.pointwise() ? 0 : K * P);
    std::vector<Real> dcol(g.pointwise() ? 0 : K * P);
    for (std::size_t n = 0; n < N; ++n) {
      const Real* G = self.grad.raw() + n * O * P;
      const Real* xn = xv + n * in_stride;
      if (need_w) {
        const Real* cp = xn;
        if (!g.pointwise()) {
          im2col(xn, g, col.data());
          cp = col.data();
        }
        gemm_nt(O, P, K, G, cp, grad_of(self, 1).raw());
      }
      if (need_b) {
        Real* gb = grad_of(self, 2).raw();
        for (std::size_t o = 0; o < O; ++o) {
          Real acc = 0;
          for (std::size_t p = 0; p < P; ++p) acc += G[o * P + p];
          gb[o] += acc;
        }
      }
      if (need_x) {
        Real* dx = grad_of(self, 0).raw() + n * in_stride;
        if (g.pointwise()) {
          gemm_tn(K, O, P, Wm, G, dx);
        } else {
          std::fill(dcol.begin(), dcol.end(), Real(0));
          gemm_tn(K, O, P, Wm, G, dcol.data());
          col2im(dcol.data(), g, dx);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization

template <typename Real>
Var<Real> batch_norm_train(const Var<Real>& x, const Var<Real>& gamma,
                           const Var<Real>& beta, Real eps, Tensor<Real>* batch_mean,
                           Tensor<Real>* batch_var) {
  const Shape& s = x.shape();
  if (s.size() < 2) shape_fail("batch_norm", "input rank < 2");
  const AxisView v = axis_view(s, 1);
  const std::size_t C = v.n;
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
    shape_fail("batch_norm", "affine params do not match " + std::to_string(C) + " channels");
  const std::size_t M = v.outer * v.inner;
  if (M < 2)
    throw ContractError("batch_norm: train mode needs at least 2 values per channel, got " +
                        std::to_string(M));
  const Real* px = x.value().raw();
  std::vector<Real> mu(C, 0), var(C, 0), inv(C);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < C; ++c) {
      const Real* p = px + (o * C + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) mu[c] += p[i];
    }
  for (auto& m : mu) m /= Real(M);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < C; ++c) {
      const Real* p = px + (o * C + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) {
        const Real d = p[i] - mu[c];
        var[c] += d * d;
      }
    }
  for (std::size_t c = 0; c < C; ++c) {
    var[c] /= Real(M);
    inv[c] = Real(1) / std::sqrt(var[c] + eps);
  }
  if (batch_mean) *batch_mean = Tensor<Real>({C}, mu);
  if (batch_var) *batch_var = Tensor<Real>({C}, var);

  Tensor<Real> xhat(s), out(s);
  const Real* pg = gamma.value().raw();
  const Real* pb = beta.value().raw();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (o * C + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) {
        const Real h = (px[base + i] - mu[c]) * inv[c];
        xhat[base + i] = h;
        out[base + i] = pg[c] * h + pb[c];
      }
    }
  return make_result<Real>(std::move(out), "batch_norm", {x, gamma, beta},
                           [v, C, M, inv = std::move(inv), xhat = std::move(xhat)](Node<Real>& self) {
    const Real* g = self.grad.raw();
    std::vector<Real> sum_g(C, 0), sum_gx(C, 0);
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t base = (o * C + c) * v.inner;
        for (std::size_t i = 0; i < v.inner; ++i) {
          sum_g[c] += g[base + i];
          sum_gx[c] += g[base + i] * xhat[base + i];
        }
      }
    if (wants(self, 1)) {
      Real* gg = grad_of(self, 1).raw();
      for (std::size_t c = 0; c < C; ++c) gg[c] += sum_gx[c];
    }
    if (wants(self, 2)) {
      Real* gb = grad_of(self, 2).raw();
      for (std::size_t c = 0; c < C; ++c) gb[c] += sum_g[c];
    }
    if (wants(self, 0)) {
      const Real* pg = self.parents[1]->value.raw();
      Real* dx = grad_of(self, 0).raw();
      const Real inv_m = Real(1) / Real(M);
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t base = (o * C + c) * v.inner;
          const Real k = pg[c] * inv[c];
          for (std::size_t i = 0; i < v.inner; ++i)
            dx[base + i] += k * (g[base + i] - inv_m * sum_g[c] -
                                 xhat[base + i] * inv_m * sum_gx[c]);
        }
    }
  });
}

template <typename Real>
Var<Real> batch_norm_eval(const Var<Real>& x, const Var<Real>& gamma,
                          const Var<Real>& beta, const Tensor<Real>& mean,
                          const Tensor<Real>& var, Real eps) {
  const Shape& s = x.shape();
  if (s.size() < 2) shape_fail("batch_norm", "input rank < 2");
  const AxisView v = axis_view(s, 1);
  const std::size_t C = v.n;
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C} || mean.size() != C ||
      var.size() != C)
    shape_fail("batch_norm", "parameters do not match " + std::to_string(C) + " channels");
  std::vector<Real> inv(C);
  for (std::size_t c = 0; c < C; ++c) inv[c] = Real(1) / std::sqrt(var[c] + eps);
  const Real* px = x.value().raw();
  const Real* pg = gamma.value().raw();
  const Real* pb = beta.value().raw();
  Tensor<Real> out(s);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (o * C + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i)
        out[base + i] = pg[c] * (px[base + i] - mean[c]) * inv[c] + pb[c];
    }
  return make_result<Real>(std::move(out), "batch_norm_eval", {x, gamma, beta},
                           [v, C, inv = std::move(inv), mu = mean](Node<Real>& self) {
    const Real* g = self.grad.raw();
    const Real* px = self.parents[0]->value.raw();
    const Real* pg = self.parents[1]->value.raw();
    Real* dx = wants(self, 0) ? grad_of(self, 0).raw() : nullptr;
    Real* dg = wants(self, 1) ? grad_of(self, 1).raw() : nullptr;
    Real* db = wants(self, 2) ? grad_of(self, 2).raw() : nullptr;
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t base = (o * C + c) * v.inner;
        for (std::size_t i = 0; i < v.inner; ++i) {
          if (dx) dx[base + i] += g[base + i] * pg[c] * inv[c];
          if (dg) dg[c] += g[base + i] * (px[base + i] - mu[c]) * inv[c];
          if (db) db[c] += g[base + i];
        }
      }
  });
}

// ---------------------------------------------------------------------------
// Losses

template <typename Real>
Var<Real> cross_entropy(const Var<Real>& logits, const std::vector<int>& labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2) shape_fail("cross_entropy", "logits must be [N,C], got " + to_string(s));
  const std::size_t N = s[0], C = s[1];
  if (N == 0) throw ContractError("cross_entropy: empty batch");
  if (labels.size() != N)
    shape_fail("cross_entropy", std::to_string(labels.size()) + " labels for " + std::to_string(N) + " rows");
  for (int l : labels)
    if (l < 0 || std::size_t(l) >= C)
      throw ContractError("cross_entropy: label " + std::to_string(l) + " outside [0," +
                          std::to_string(C) + ")");
  const Real* z = logits.value().raw();
  Tensor<Real> prob({N, C});
  Real loss = 0;
  for (std::size_t r = 0; r < N; ++r) {
    const Real* row = z + r * C;
    const Real mx = *std::max_element(row, row + C);
    Real se = 0;
    for (std::size_t c = 0; c < C; ++c) se += std::exp(row[c] - mx);
    const Real lse = mx + std::log(se);
    for (std::size_t c = 0; c < C; ++c) prob[r * C + c] = std::exp(row[c] - lse);
    loss += lse - row[labels[r]];
  }
  loss /= Real(N);
  return make_result<Real>(Tensor<Real>::scalar(loss), "cross_entropy", {logits},
                           [prob = std::move(prob), labels, N, C](Node<Real>& self) {
    const Real g = self.grad[0] / Real(N);
    Real* d = grad_of(self, 0).raw();
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t c = 0; c < C; ++c)
        d[r * C + c] += g * (prob[r * C + c] - (int(c) == labels[r] ? Real(1) : Real(0)));
  });
}

template <typename Real>
Var<Real> bce_with_logits(const Var<Real>& logits, const Tensor<Real>& targets) {
  const std::size_t n = logits.value().size();
  if (n == 0) throw ContractError("bce_with_logits: empty input");
  if (targets.size() != n)
    shape_fail("bce_with_logits", to_string(targets.shape()) + " targets for " +
                                      to_string(logits.shape()) + " logits");
  const Real* z = logits.value().raw();
  Real loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real t = targets[i];
    if (t < 0 || t > 1) throw ContractError("bce_with_logits: target outside [0,1]");
    loss += std::max(z[i], Real(0)) - z[i] * t + std::log1p(std::exp(-std::abs(z[i])));
  }
  loss /= Real(n);
  return make_result<Real>(Tensor<Real>::scalar(loss), "bce_with_logits", {logits},
                           [targets, n](Node<Real>& self) {
    const Real g = self.grad[0] / Real(n);
    const Real* z = self.parents[0]->value.raw();
    Real* d = grad_of(self, 0).raw();
    for (std::size_t i = 0; i < n; ++i) {
      const Real s = z[i] >= 0 ? Real(1) / (Real(1) + std::exp(-z[i]))
                               : std::exp(z[i]) / (Real(1) + std::exp(z[i]));
      d[i] += g * (s - targets[i]);
    }
  });
}

// ---------------------------------------------------------------------------
// Registry

std::string_view name(OpKind kind) {
  switch (kind) {
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add_scalar";
    case OpKind::matmul: return "matmul";
    case OpKind::linear: return "linear";
    case OpKind::concat: return "concat";
    case OpKind::reshape: return "reshape";
    case OpKind::slice: return "slice";
    case OpKind::permute: return "permute";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::index_select: return "index_select";
    case OpKind::index_add: return "index_add";
    case OpKind::elu: return "elu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::power: return "power";
    case OpKind::abs: return "abs";
    case OpKind::conv3d: return "conv3d";
    case OpKind::batch_norm: return "batch_norm";
    case OpKind::cross_entropy: return "cross_entropy";
    case OpKind::bce_with_logits: return "bce_with_logits";
  }
  return "unknown";
}

std::span<const OpKind> registered_ops() {
  static constexpr OpKind kAll[] = {
      OpKind::add, OpKind::sub, OpKind::mul, OpKind::div, OpKind::scale,
      OpKind::add_scalar, OpKind::matmul, OpKind::linear, OpKind::concat,
      OpKind::reshape, OpKind::slice, OpKind::permute, OpKind::sum, OpKind::mean,
      OpKind::index_select, OpKind::index_add, OpKind::elu, OpKind::sigmoid,
      OpKind::exp, OpKind::log, OpKind::power, OpKind::abs, OpKind::conv3d,
      OpKind::batch_norm, OpKind::cross_entropy, OpKind::bce_with_logits,
  };
  return kAll;
}

template <typename Real>
Var<Real> forward_op(OpKind kind, const std::vector<Var<Real>>& in, const OpAttrs<Real>& at) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (in.size() < lo || in.size() > hi)
      throw ContractError(std::string(name(kind)) + ": expected " + std::to_string(lo) +
                          (lo == hi ? "" : ".." + std::to_string(hi)) + " inputs, got " +
                          std::to_string(in.size()));
  };
  const Var<Real> none;
  switch (kind) {
    case OpKind::add: need(2, 2); return add(in[0], in[1]);
    case OpKind::sub: need(2, 2); return sub(in[0], in[1]);
    case OpKind::mul: need(2, 2); return mul(in[0], in[1]);
    case OpKind::div: need(2, 2); return div(in[0], in[1]);
    case OpKind::scale: need(1, 1); return scale(in[0], at.scalar);
    case OpKind::add_scalar: need(1, 1); return add_scalar(in[0], at.scalar);
    case OpKind::matmul: need(2, 2); return matmul(in[0], in[1]);
    case OpKind::linear: need(2, 3); return linear(in[0], in[1], in.size() > 2 ? in[2] : none);
    case OpKind::concat: need(1, in.size() ? in.size() : 1); return concat(in, at.axis);
    case OpKind::reshape: need(1, 1); return reshape(in[0], at.shape);
    case OpKind::slice: need(1, 1); return slice(in[0], at.axis, at.begin, at.end);
    case OpKind::permute: need(1, 1); return permute(in[0], at.perm);
    case OpKind::sum:
      need(1, 1);
      return at.reduce_all ? sum(in[0]) : sum(in[0], at.axis, at.keepdim);
    case OpKind::mean:
      need(1, 1);
      return at.reduce_all ? mean(in[0]) : mean(in[0], at.axis, at.keepdim);
    case OpKind::index_select: need(1, 1); return index_select(in[0], at.index);
    case OpKind::index_add: need(1, 1); return index_add(in[0], at.index, at.rows);
    case OpKind::elu: need(1, 1); return elu(in[0], at.scalar);
    case OpKind::sigmoid: need(1, 1); return sigmoid(in[0]);
    case OpKind::exp: need(1, 1); return exp(in[0]);
    case OpKind::log: need(1, 1); return log(in[0]);
    case OpKind::power: need(1, 1); return power(in[0], at.scalar);
    case OpKind::abs: need(1, 1); return abs(in[0]);
    case OpKind::conv3d:
      need(2, 3);
      return conv3d(in[0], in[1], in.size() > 2 ? in[2] : none, at.stride, at.padding);
    case OpKind::batch_norm: need(3, 3); return batch_norm_train(in[0], in[1], in[2], at.scalar);
    case OpKind::cross_entropy: need(1, 1); return cross_entropy(in[0], at.labels);
    case OpKind::bce_with_logits: need(1, 1); return bce_with_logits(in[0], at.targets);
  }
  throw ContractError("unknown op kind");
}

#define ECHOGNN_INSTANTIATE(Real)                                                          \
  template Var<Real> add(const Var<Real>&, const Var<Real>&);                              \
  template Var<Real> sub(const Var<Real>&, const Var<Real>&);                              \
  template Var<Real> mul(const Var<Real>&, const Var<Real>&);                              \
  template Var<Real> div(const Var<Real>&, const Var<Real>&);                              \
  template Var<Real> scale(const Var<Real>&, Real);                                        \
  template Var<Real> add_scalar(const Var<Real>&, Real);                                   \
  template Var<Real> matmul(const Var<Real>&, const Var<Real>&);                           \
  template Var<Real> linear(const Var<Real>&, const Var<Real>&, const Var<Real>&);         \
  template Var<Real> concat(const std::vector<Var<Real>>&, std::size_t);                   \
  template Var<Real> reshape(const Var<Real>&, Shape);                                     \
  template Var<Real> slice(const Var<Real>&, std::size_t, std::size_t, std::size_t);       \
  template Var<Real> permute(const Var<Real>&, const std::vector<std::size_t>&);           \
  template Var<Real> transpose(const Var<Real>&);                                          \
  template Var<Real> sum(const Var<Real>&);                                                \
  template Var<Real> sum(const Var<Real>&, std::size_t, bool);                             \
  template Var<Real> mean(const Var<Real>&);                                               \
  template Var<Real> mean(const Var<Real>&, std::size_t, bool);                            \
  template Var<Real> index_select(const Var<Real>&, const Index&);                         \
  template Var<Real> index_add(const Var<Real>&, const Index&, std::size_t);               \
  template Var<Real> elu(const Var<Real>&, Real);                                          \
  template Var<Real> sigmoid(const Var<Real>&);                                            \
  template Var<Real> exp(const Var<Real>&);                                                \
  template Var<Real> log(const Var<Real>&);                                                \
  template Var<Real> power(const Var<Real>&, Real);                                        \
  template Var<Real> abs(const Var<Real>&);                                                \
  template Var<Real> conv3d(const Var<Real>&, const Var<Real>&, const Var<Real>&, Triple,  \
                            Triple);                                                       \
  template Var<Real> batch_norm_train(const Var<Real>&, const Var<Real>&, const Var<Real>&, \
                                      Real, Tensor<Real>*, Tensor<Real>*);                 \
  template Var<Real> batch_norm_eval(const Var<Real>&, const Var<Real>&, const Var<Real>&,  \
                                     const Tensor<Real>&, const Tensor<Real>&, Real);      \
  template Var<Real> cross_entropy(const Var<Real>&, const std::vector<int>&);             \
  template Var<Real> bce_with_logits(const Var<Real>&, const Tensor<Real>&);               \
  template Var<Real> forward_op(OpKind, const std::vector<Var<Real>>&, const OpAttrs<Real>&);

ECHOGNN_INSTANTIATE(float)
ECHOGNN_INSTANTIATE(double)
#undef ECHOGNN_INSTANTIATE

}  // namespace echognn::ops
