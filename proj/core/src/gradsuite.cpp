#include "echognn/gradsuite.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "echognn/layers.hpp"
#include "echognn/model.hpp"

namespace echognn {

bool GradSuiteResult::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradSuiteEntry& e) { return e.report.passed(); });
}

double GradSuiteResult::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.report.max_rel_error);
  return w;
}

namespace {

using T = Tensor<double>;
using V = Var<double>;

T uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  T t(std::move(shape));
  for (auto& x : t.storage()) x = u(rng);
  return t;
}

// Magnitude in [lo, hi], random sign. Keeps values off a kink at zero.
T signed_away(Shape shape, Rng& rng, double lo, double hi) {
  T t = uniform(std::move(shape), rng, lo, hi);
  std::bernoulli_distribution coin(0.5);
  for (auto& x : t.storage())
    if (coin(rng)) x = -x;
  return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Case {
  std::vector<V> inputs;
  ops::OpAttrs<double> attrs;
};

Case make_case(ops::OpKind kind, Rng& rng) {
  using K = ops::OpKind;
  Case c;
  auto param = [&](T t) { c.inputs.push_back(V::parameter(std::move(t))); };
  switch (kind) {
    case K::add:
    case K::sub:
    case K::mul: {
      const std::size_t a = pick(rng, 1, 3), b = pick(rng, 2, 4);
      param(uniform({a, b, 3}, rng, -1.5, 1.5));
      // Broadcast along a random subset of axes.
      if (pick(rng, 0, 1)) param(uniform({b, 1}, rng, -1.5, 1.5));
      else param(uniform({a, b, 3}, rng, -1.5, 1.5));
      break;
    }
    case K::div: {
      const std::size_t a = pick(rng, 1, 3), b = pick(rng, 2, 4);
      param(uniform({a, b}, rng, -1.5, 1.5));
      if (pick(rng, 0, 1)) param(signed_away({b}, rng, 0.5, 2.0));
      else param(signed_away({a, b}, rng, 0.5, 2.0));
      break;
    }
    case K::scale:
    case K::add_scalar:
      param(uniform({pick(rng, 1, 4), pick(rng, 1, 5)}, rng, -2, 2));
      c.attrs.scalar = std::uniform_real_distribution<double>(-2, 2)(rng);
      break;
    case K::matmul: {
      const std::size_t m = pick(rng, 1, 4), k = pick(rng, 1, 5), n = pick(rng, 1, 4);
      if (pick(rng, 0, 1)) {
        param(uniform({m, k}, rng, -1, 1));
        param(uniform({k, n}, rng, -1, 1));
      } else {
        const std::size_t b = pick(rng, 1, 3);
        param(uniform({b, m, k}, rng, -1, 1));
        param(uniform({b, k, n}, rng, -1, 1));
      }
      break;
    }
    case K::linear: {
      const std::size_t n = pick(rng, 1, 4), in = pick(rng, 1, 5), out = pick(rng, 1, 4);
      param(uniform({n, in}, rng, -1, 1));
      param(uniform({out, in}, rng, -1, 1));
      if (pick(rng, 0, 1)) param(uniform({out}, rng, -1, 1));
      break;
    }
    case K::concat: {
      c.attrs.axis = pick(rng, 0, 1);
      const std::size_t parts = pick(rng, 1, 3), other = pick(rng, 1, 3);
      for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t len = pick(rng, 1, 3);
        param(uniform(c.attrs.axis == 0 ? Shape{len, other} : Shape{other, len}, rng, -1, 1));
      }
      break;
    }
    case K::reshape:
      param(uniform({2, 3, 4}, rng, -1, 1));
      c.attrs.shape = pick(rng, 0, 1) ? Shape{6, 4} : Shape{4, 3, 2};
      break;
    case K::slice: {
      param(uniform({3, 5, 2}, rng, -1, 1));
      c.attrs.axis = pick(rng, 0, 2);
      const std::size_t len = c.inputs[0].shape()[c.attrs.axis];
      c.attrs.begin = pick(rng, 0, len - 1);
      c.attrs.end = pick(rng, c.attrs.begin + 1, len);
      break;
    }
    case K::permute: {
      param(uniform({2, 3, 4}, rng, -1, 1));
      c.attrs.perm = {0, 1, 2};
      std::shuffle(c.attrs.perm.begin(), c.attrs.perm.end(), rng);
      break;
    }
    case K::sum:
    case K::mean:
      param(uniform({pick(rng, 1, 3), pick(rng, 1, 4), 2}, rng, -1, 1));
      c.attrs.reduce_all = pick(rng, 0, 1) == 0;
      c.attrs.axis = pick(rng, 0, 2);
      c.attrs.keepdim = pick(rng, 0, 1) == 1;
      break;
    case K::index_select: {
      const std::size_t rows = pick(rng, 1, 5);
      param(uniform({rows, 3}, rng, -1, 1));
      c.attrs.index.resize(pick(rng, 1, 7));
      for (auto& i : c.attrs.index) i = pick(rng, 0, rows - 1);
      break;
    }
    case K::index_add: {
      const std::size_t n = pick(rng, 1, 7);
      param(uniform({n, 3}, rng, -1, 1));
      c.attrs.rows = pick(rng, 1, 4);
      c.attrs.index.resize(n);
      for (auto& i : c.attrs.index) i = pick(rng, 0, c.attrs.rows - 1);
      break;
    }
    case K::elu:
      param(signed_away({pick(rng, 1, 4), 5}, rng, 0.01, 2.0));
      c.attrs.scalar = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
      break;
    case K::sigmoid:
      param(uniform({pick(rng, 1, 4), 5}, rng, -3, 3));
      break;
    case K::exp:
      param(uniform({pick(rng, 1, 4), 5}, rng, -2, 1));
      break;
    case K::log:
      param(uniform({pick(rng, 1, 4), 5}, rng, 0.5, 3));
      break;
    case K::power:
      param(uniform({pick(rng, 1, 4), 5}, rng, 0.5, 2));
      c.attrs.scalar = std::uniform_real_distribution<double>(-1.5, 2.5)(rng);
      break;
    case K::abs:
      param(signed_away({pick(rng, 1, 4), 5}, rng, 0.01, 2.0));
      break;
    case K::conv3d: {
      const std::size_t n = pick(rng, 1, 2), ci = pick(rng, 1, 2), co = pick(rng, 1, 3);
      const ops::Triple k{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)};
      for (std::size_t a = 0; a < 3; ++a) {
        c.attrs.stride[a] = pick(rng, 1, 2);
        c.attrs.padding[a] = pick(rng, 0, k[a] / 2);
      }
      param(uniform({n, ci, pick(rng, 3, 5), pick(rng, 3, 5), pick(rng, 3, 5)}, rng, -1, 1));
      param(uniform({co, ci, k[0], k[1], k[2]}, rng, -1, 1));
      if (pick(rng, 0, 1)) param(uniform({co}, rng, -1, 1));
      break;
    }
    case K::batch_norm: {
      const std::size_t ch = pick(rng, 1, 3);
      if (pick(rng, 0, 1)) param(uniform({pick(rng, 3, 6), ch}, rng, -2, 2));
      else param(uniform({2, ch, 3}, rng, -2, 2));
      param(uniform({ch}, rng, 0.5, 1.5));
      param(uniform({ch}, rng, -1, 1));
      c.attrs.scalar = 1e-5;
      break;
    }
    case K::cross_entropy: {
      const std::size_t n = pick(rng, 1, 4), classes = pick(rng, 2, 5);
      param(uniform({n, classes}, rng, -2, 2));
      c.attrs.labels.resize(n);
      for (auto& l : c.attrs.labels) l = int(pick(rng, 0, classes - 1));
      break;
    }
    case K::bce_with_logits: {
      const Shape s{pick(rng, 1, 4), pick(rng, 1, 3)};
      param(uniform(s, rng, -3, 3));
      c.attrs.targets = uniform(s, rng, 0, 1);
      break;
    }
  }
  return c;
}

// sum(out * R) with R fixed and bounded away from zero.
V weighted_sum(const V& out, const T& r) {
  return ops::sum(ops::mul(out, V(r)));
}

GradCheckOptions options(double tolerance, std::uint64_t seed) {
  GradCheckOptions o;
  o.tolerance = tolerance;
  o.floor = kGradSuiteFloor;
  o.seed = seed;
  return o;
}

GradSuiteEntry check(std::string label, const std::function<V()>& f,
                     const ParamList<double>& params, double tolerance,
                     std::uint64_t seed) {
  std::vector<V> vars;
  std::vector<std::string> names;
  for (const auto& p : params) {
    vars.push_back(p.var);
    names.push_back(p.name);
  }
  return {std::move(label), finite_difference_check<double>(f, vars, names,
                                                            options(tolerance, seed))};
}

}  // namespace

GradSuiteResult op_gradient_suite(std::uint64_t seed, std::size_t instances,
                                  double tolerance) {
  Rng rng(seed);
  GradSuiteResult result;
  for (ops::OpKind kind : ops::registered_ops()) {
    for (std::size_t i = 0; i < instances; ++i) {
      Case c = make_case(kind, rng);
      const Shape out_shape = ops::forward_op(kind, c.inputs, c.attrs).shape();
      const T r = signed_away(out_shape, rng, 0.5, 1.5);
      auto f = [&] { return weighted_sum(ops::forward_op(kind, c.inputs, c.attrs), r); };
      ParamList<double> params;
      for (std::size_t k = 0; k < c.inputs.size(); ++k)
        params.push_back({"input" + std::to_string(k), c.inputs[k]});
      result.entries.push_back(check(std::string(ops::name(kind)) + "#" + std::to_string(i),
                                     f, params, tolerance, seed + i));
    }
  }
  return result;
}

GradSuiteResult module_gradient_suite(std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  GradSuiteResult result;
  auto run = [&](std::string label, ParamList<double> params, V input,
                 const std::function<V()>& forward) {
    if (input.defined()) params.push_back({"input", input});
    const T r = signed_away(forward().shape(), rng, 0.5, 1.5);
    result.entries.push_back(check(std::move(label),
                                   [&] { return weighted_sum(forward(), r); }, params,
                                   tolerance, seed));
  };

  {
    Linear<double> layer(5, 3, rng);
    V x = V::parameter(uniform({4, 5}, rng, -1, 1));
    ParamList<double> p;
    layer.collect("linear", p);
    run("Linear", p, x, [&] { return layer.forward(x); });
  }
  {
    Conv3d<double> layer(2, 3, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, rng);
    V x = V::parameter(uniform({1, 2, 4, 5, 5}, rng, -1, 1));
    ParamList<double> p;
    layer.collect("conv", p);
    run("Conv3d", p, x, [&] { return layer.forward(x); });
  }
  {
    BatchNorm<double> layer(3);
    layer.gamma.mutable_value() = uniform({3}, rng, 0.5, 1.5);
    layer.beta.mutable_value() = uniform({3}, rng, -0.5, 0.5);
    V x = V::parameter(uniform({2, 3, 4}, rng, -2, 2));
    ParamList<double> p;
    layer.collect("bn", p);
    run("BatchNorm.train", p, x, [&] { return layer.forward(x); });
    layer.training = false;
    layer.running_mean = uniform({3}, rng, -0.5, 0.5);
    layer.running_var = uniform({3}, rng, 0.5, 2.0);
    run("BatchNorm.eval", p, x, [&] { return layer.forward(x); });
  }
  {
    MlpBlock<double> block(4, 5, 3, rng);
    V x = V::parameter(uniform({6, 4}, rng, -1, 1));
    ParamList<double> p;
    block.collect("mlp", p);
    run("MlpBlock", p, x, [&] { return block.forward(x); });
  }
  {
    EncoderBlock<double> block;
    block.conv = Conv3d<double>(2, 3, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, rng, false);
    block.norm = BatchNorm<double>(3);
    block.projection = Conv3d<double>(2, 3, {1, 1, 1}, {1, 2, 2}, {0, 0, 0}, rng);
    V x = V::parameter(uniform({2, 2, 3, 4, 4}, rng, -1, 1));
    ParamList<double> p;
    block.conv.collect("block.conv", p);
    block.norm.collect("block.norm", p);
    block.projection->collect("block.skip", p);
    run("EncoderBlock", p, x, [&] { return block.forward(x); });
  }
  const ModelConfig cfg = ModelConfig::tiny();
  {
    VideoEncoder<double> enc(cfg, rng);
    V x = V::parameter(uniform({2, cfg.frames, cfg.height, cfg.width}, rng, 0, 1));
    ParamList<double> p;
    enc.collect("encoder", p);
    run("VideoEncoder", p, x, [&] { return enc.forward(x); });
  }
  {
    AttentionEncoder<double> att(cfg.embedding_dim, cfg.attention_hidden, rng);
    const std::size_t b = 2, t = cfg.frames;
    V h0 = V::parameter(uniform({b * t, cfg.embedding_dim}, rng, -1, 1));
    ParamList<double> p;
    att.collect("attention", p);
    run("AttentionEncoder.adjacency", p, h0, [&] { return att.forward(h0, b, t).adjacency; });
    run("AttentionEncoder.weights", p, h0, [&] { return att.forward(h0, b, t).node_weights; });
  }
  for (bool symmetric : {true, false}) {
    V a = V::parameter(uniform({2, 4, 4}, rng, 0.05, 0.95));
    run(symmetric ? "propagation.symmetric" : "propagation.directed", {}, a,
        [&] { return propagation_matrix(a, symmetric); });
  }
  {
    GcnLayer<double> layer(3, 2, rng);
    V prop = V::parameter(uniform({2, 4, 4}, rng, 0.05, 0.5));
    V h = V::parameter(uniform({2, 4, 3}, rng, -1, 1));
    ParamList<double> p;
    layer.collect("gcn", p);
    p.push_back({"propagation", prop});
    run("GcnLayer", p, h, [&] { return layer.forward(prop, h); });
  }
  {
    V h = V::parameter(uniform({2, 4, 3}, rng, -1, 1));
    V w = V::parameter(uniform({2, 4}, rng, 0.05, 0.95));
    run("weighted_readout", {{"weights", w}}, h, [&] { return weighted_readout(h, w); });
  }
  for (bool symmetric : {true, false}) {
    ModelConfig c = cfg;
    c.symmetric_adjacency = symmetric;
    GraphRegressor<double> reg(c, rng);
    const std::size_t b = 3, t = c.frames;
    V feats = V::parameter(uniform({b * t, c.embedding_dim}, rng, -1, 1));
    T adj = uniform({b, t, t}, rng, 0.05, 0.95);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < t; ++j) adj[(i * t + j) * t + j] = 0.0;
    V a = V::parameter(adj);
    V w = V::parameter(uniform({b, t}, rng, 0.05, 0.95));
    ParamList<double> p;
    reg.collect("regressor", p);
    p.push_back({"adjacency", a});
    p.push_back({"weights", w});
    const std::string tag = symmetric ? "symmetric" : "directed";
    run("GraphRegressor.ef." + tag, p, feats, [&] { return reg.forward(feats, a, w).ef; });
    run("GraphRegressor.class." + tag, p, feats,
        [&] { return reg.forward(feats, a, w).class_logits; });
  }
  {
    V pred = V::parameter(uniform({5, 1}, rng, 0, 1));
    T target = pred.value();
    T offset = signed_away({5, 1}, rng, 0.05, 0.3);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += offset[i];
    run("mae_loss", {}, pred, [&] { return mae_loss(pred, target); });
  }
  {
    V logits = V::parameter(uniform({5, 4}, rng, -2, 2));
    std::vector<int> labels{0, 3, 1, 2, 3};
    run("cross_entropy_loss", {}, logits, [&] { return cross_entropy_loss(logits, labels); });
  }
  return result;
}

GradSuiteResult model_gradient_suite(std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  GradSuiteResult result;
  const ModelConfig cfg = ModelConfig::tiny();
  const std::size_t t = cfg.frames;

  auto supervised = [&](std::string label, std::size_t batch, bool training) {
    EchoGnn<double> model(cfg, seed);
    model.set_training(training);
    const T clips = uniform({batch, t, cfg.height, cfg.width}, rng, 0, 1);
    std::vector<int> labels(batch);
    for (auto& l : labels) l = int(pick(rng, 0, cfg.num_classes - 1));
    // Targets sit a fixed distance from the initial prediction so the MAE
    // kink is never crossed by a perturbation.
    T target = model.forward(clips).prediction.ef.value();
    const T offset = signed_away(target.shape(), rng, 0.1, 0.3);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += offset[i];
    auto f = [&] {
      auto out = model.forward(clips);
      return ops::add(mae_loss(out.prediction.ef, target),
                      cross_entropy_loss(out.prediction.class_logits, labels));
    };
    result.entries.push_back(check(std::move(label), f, model.parameters(), tolerance, seed));
  };
  supervised("EchoGnn.eval.one_clip", 1, false);
  supervised("EchoGnn.train.two_clips", 2, true);

  {
    EchoGnn<double> model(cfg, seed + 1);
    model.set_training(true);
    const T clips = uniform({2, t, cfg.height, cfg.width}, rng, 0, 1);
    const T targets = uniform({2 * t, 1}, rng, 0, 1);
    auto f = [&] { return ops::bce_with_logits(model.forward(clips, false).graph.node_logits, targets); };
    result.entries.push_back(
        check("EchoGnn.pretrain", f, model.pretrain_parameters(), tolerance, seed));
  }
  return result;
}

}  // namespace echognn
