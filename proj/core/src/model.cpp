#include "echognn/model.hpp"

#include <algorithm>
#include <cmath>

namespace echognn {

// ---------------------------------------------------------------------------
// Config

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.frames = 64;
  c.height = c.width = 112;
  c.channels = {16, 32, 64, 128, 256};
  c.embedding_dim = 128;
  c.attention_hidden = 128;
  c.gcn_dims = {128, 64, 32};
  c.head_hidden = 16;
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.frames = 4;
  c.height = c.width = 8;
  c.channels = {2, 3};
  c.embedding_dim = 4;
  c.attention_hidden = 4;
  c.gcn_dims = {4, 3};
  c.head_hidden = 3;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  if (name == "tiny") return tiny();
  throw ConfigError("unknown model preset '" + name + "' (expected desk, paper or tiny)");
}

namespace {

std::size_t halvings(std::size_t n, std::size_t times) {
  for (std::size_t i = 0; i < times; ++i) n = (n + 1) / 2;
  return n;
}

}  // namespace

std::size_t ModelConfig::encoded_height() const {
  return halvings(height, channels.empty() ? 0 : channels.size() - 1);
}
std::size_t ModelConfig::encoded_width() const {
  return halvings(width, channels.empty() ? 0 : channels.size() - 1);
}

void ModelConfig::validate() const {
  if (frames < 2) throw ConfigError("model frames (T_fixed) must be >= 2");
  if (channels.empty()) throw ConfigError("encoder channel list is empty");
  if (gcn_dims.empty()) throw ConfigError("gcn dimension list is empty");
  for (auto c : channels)
    if (c == 0) throw ConfigError("encoder channels must be positive");
  for (auto g : gcn_dims)
    if (g == 0) throw ConfigError("gcn dimensions must be positive");
  if (kernel_t % 2 == 0 || kernel_hw % 2 == 0)
    throw ConfigError("encoder kernel sizes must be odd so padding preserves T");
  if (embedding_dim == 0 || embedding_dim % 2 != 0)
    throw ConfigError("embedding_dim must be positive and even");
  if (attention_hidden == 0 || head_hidden == 0 || num_classes < 2)
    throw ConfigError("attention_hidden, head_hidden must be positive and num_classes >= 2");
  const std::size_t need = std::size_t(1) << (channels.size() - 1);
  if (height < need || width < need)
    throw ConfigError("frames of " + std::to_string(height) + "x" + std::to_string(width) +
                      " are too small for " + std::to_string(channels.size()) +
                      " encoder blocks (need at least " + std::to_string(need) + " px)");
}

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text[0] == '-')
    throw ConfigError("model config: '" + key + "' expects a non-negative integer, got '" +
                      text + "'");
  return std::size_t(v);
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_size(key, text.substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError("model config: '" + key + "' expects true/false, got '" + text + "'");
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::string s;
  auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
  kv("frames", std::to_string(frames));
  kv("height", std::to_string(height));
  kv("width", std::to_string(width));
  kv("channels", join(channels));
  kv("kernel_t", std::to_string(kernel_t));
  kv("kernel_hw", std::to_string(kernel_hw));
  kv("embedding_dim", std::to_string(embedding_dim));
  kv("positional_encoding", positional_encoding ? "true" : "false");
  kv("attention_hidden", std::to_string(attention_hidden));
  kv("gcn_dims", join(gcn_dims));
  kv("head_hidden", std::to_string(head_hidden));
  kv("num_classes", std::to_string(num_classes));
  kv("symmetric_adjacency", symmetric_adjacency ? "true" : "false");
  return s;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model config: malformed line '" + line + "'");
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "frames") c.frames = parse_size(k, v);
    else if (k == "height") c.height = parse_size(k, v);
    else if (k == "width") c.width = parse_size(k, v);
    else if (k == "channels") c.channels = parse_sizes(k, v);
    else if (k == "kernel_t") c.kernel_t = parse_size(k, v);
    else if (k == "kernel_hw") c.kernel_hw = parse_size(k, v);
    else if (k == "embedding_dim") c.embedding_dim = parse_size(k, v);
    else if (k == "positional_encoding") c.positional_encoding = parse_flag(k, v);
    else if (k == "attention_hidden") c.attention_hidden = parse_size(k, v);
    else if (k == "gcn_dims") c.gcn_dims = parse_sizes(k, v);
    else if (k == "head_hidden") c.head_hidden = parse_size(k, v);
    else if (k == "num_classes") c.num_classes = parse_size(k, v);
    else if (k == "symmetric_adjacency") c.symmetric_adjacency = parse_flag(k, v);
    else throw ConfigError("model config: unknown key '" + k + "'");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Video encoder

template <typename Real>
Var<Real> EncoderBlock<Real>::forward(const Var<Real>& x) {
  Var<Real> y = ops::elu(norm.forward(conv.forward(x)));
  return ops::add(y, projection ? projection->forward(x) : x);
}

template <typename Real>
VideoEncoder<Real>::VideoEncoder(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  std::size_t in = 1;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    const std::size_t out = cfg.channels[i];
    const std::size_t s = i == 0 ? 1 : 2;
    EncoderBlock<Real> b;
    // Bias would be cancelled by the batchnorm that follows.
    b.conv = Conv3d<Real>(in, out, {cfg.kernel_t, cfg.kernel_hw, cfg.kernel_hw}, {1, s, s},
                          {cfg.kernel_t / 2, cfg.kernel_hw / 2, cfg.kernel_hw / 2}, rng, false);
    b.norm = BatchNorm<Real>(out);
    if (in != out || s != 1)
      b.projection.emplace(in, out, ops::Triple{1, 1, 1}, ops::Triple{1, s, s},
                           ops::Triple{0, 0, 0}, rng, true);
    blocks.push_back(std::move(b));
    in = out;
  }
  head = Linear<Real>(in, cfg.embedding_dim, rng);
  if (cfg.positional_encoding) pe = positional_encoding<Real>(cfg.frames, cfg.embedding_dim);
}

template <typename Real>
Var<Real> VideoEncoder<Real>::forward_features(const Var<Real>& clips) {
  if (clips.shape().size() != 4) throw ShapeError("video encoder expects clips [B,T,H,W]");
  const Shape& s = clips.shape();
  const std::size_t B = s[0], T = s[1];
  Var<Real> x = ops::reshape(clips, {B, 1, T, s[2], s[3]});
  for (auto& b : blocks) x = b.forward(x);
  const Shape& o = x.shape();
  const std::size_t C = o[1];
  x = ops::mean(ops::reshape(x, {B, C, T, o[3] * o[4]}), 3, false);  // global spatial pool
  x = ops::reshape(ops::permute(x, {0, 2, 1}), {B * T, C});
  return head.forward(x);
}

template <typename Real>
Var<Real> VideoEncoder<Real>::forward(const Var<Real>& clips) {
  Var<Real> h = forward_features(clips);
  if (pe.empty()) return h;
  const std::size_t B = clips.shape()[0], T = clips.shape()[1], d = h.shape()[1];
  if (pe.shape()[0] != T) throw ShapeError("clip length differs from the configured T_fixed");
  return ops::reshape(ops::add(ops::reshape(h, {B, T, d}), Var<Real>(pe)), {B * T, d});
}

template <typename Real>
void VideoEncoder<Real>::set_training(bool on) {
  for (auto& b : blocks) b.norm.training = on;
}

template <typename Real>
void VideoEncoder<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = prefix + ".block" + std::to_string(i);
    blocks[i].conv.collect(p + ".conv", out);
    blocks[i].norm.collect(p + ".norm", out);
    if (blocks[i].projection) blocks[i].projection->collect(p + ".skip", out);
  }
  head.collect(prefix + ".head", out);
}

template <typename Real>
void VideoEncoder<Real>::collect_buffers(const std::string& prefix, BufferList<Real>& out) {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    blocks[i].norm.collect_buffers(prefix + ".block" + std::to_string(i) + ".norm", out);
}

// ---------------------------------------------------------------------------
// Attention encoder

EdgeList complete_graph_edges(std::size_t batch, std::size_t frames) {
  EdgeList e;
  const std::size_t n = batch * frames * (frames ? frames - 1 : 0);
  e.src.reserve(n);
  e.dst.reserve(n);
  e.cell.reserve(n);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t s = 0; s < frames; ++s)
      for (std::size_t k = 0; k < frames; ++k) {
        if (k == s) continue;
        e.src.push_back(b * frames + k);
        e.dst.push_back(b * frames + s);
        e.cell.push_back(b * frames * frames + k * frames + s);
      }
  return e;
}

template <typename Real>
AttentionEncoder<Real>::AttentionEncoder(std::size_t d, std::size_t hidden, Rng& rng)
    : node_to_edge(2 * d, hidden, hidden, rng),
      edge_to_node(hidden, hidden, hidden, rng),
      edge_logit(2 * hidden, hidden, 1, rng),
      node_weight(1, hidden, 1, rng) {}

template <typename Real>
EchoGraphVars<Real> AttentionEncoder<Real>::forward(const Var<Real>& h0, std::size_t batch,
                                                    std::size_t frames) {
  if (frames < 2) throw ContractError("the echo-graph needs at least 2 frames");
  if (h0.shape().size() != 2 || h0.shape()[0] != batch * frames)
    throw ShapeError("attention encoder expects [B*T, d], got " + to_string(h0.shape()));
  const EdgeList e = complete_graph_edges(batch, frames);
  const std::size_t nodes = batch * frames;

  Var<Real> u = node_to_edge.forward(
      ops::concat<Real>({ops::index_select(h0, e.src), ops::index_select(h0, e.dst)}, 1));
  Var<Real> v = edge_to_node.forward(ops::index_add(u, e.dst, nodes));
  Var<Real> z = edge_logit.forward(
      ops::concat<Real>({ops::index_select(v, e.src), ops::index_select(v, e.dst)}, 1));

  EchoGraphVars<Real> g;
  g.batch = batch;
  g.frames = frames;
  g.edge_logits = z;
  g.adjacency = ops::reshape(ops::index_add(ops::sigmoid(z), e.cell, nodes * frames),
                             {batch, frames, frames});
  g.node_logits = node_weight.forward(ops::index_add(z, e.dst, nodes));
  g.node_weights = ops::reshape(ops::sigmoid(g.node_logits), {batch, frames});
  return g;
}

template <typename Real>
void AttentionEncoder<Real>::set_training(bool on) {
  node_to_edge.set_training(on);
  edge_to_node.set_training(on);
  edge_logit.set_training(on);
  node_weight.set_training(on);
}

template <typename Real>
void AttentionEncoder<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  node_to_edge.collect(prefix + ".mlp1", out);
  edge_to_node.collect(prefix + ".mlp2", out);
  edge_logit.collect(prefix + ".mlp3", out);
  node_weight.collect(prefix + ".mlp4", out);
}

template <typename Real>
void AttentionEncoder<Real>::collect_buffers(const std::string& prefix, BufferList<Real>& out) {
  node_to_edge.collect_buffers(prefix + ".mlp1", out);
  edge_to_node.collect_buffers(prefix + ".mlp2", out);
  edge_logit.collect_buffers(prefix + ".mlp3", out);
  node_weight.collect_buffers(prefix + ".mlp4", out);
}

GraphStats graph_stats(const std::vector<double>& w, const std::vector<double>& adjacency,
                       std::size_t bins) {
  if (w.empty()) throw ContractError("graph_stats on an empty graph");
  const std::size_t T = w.size();
  if (adjacency.size() != T * T)
    throw ShapeError("graph_stats: adjacency has " + std::to_string(adjacency.size()) +
                     " entries for " + std::to_string(T) + " nodes");
  GraphStats s;
  double total = 0.0;
  s.max_weight = w[0];
  for (double x : w) {
    total += x;
    s.max_weight = std::max(s.max_weight, x);
  }
  s.mean_weight = total / double(T);
  for (double x : w) s.variance += (x - s.mean_weight) * (x - s.mean_weight);
  s.variance /= double(T);
  s.max_minus_mean = s.max_weight - s.mean_weight;

  if (T == 1 || total <= 0.0) {
    s.normalized_entropy = 1.0;
  } else {
    double h = 0.0;
    for (double x : w) {
      const double p = x / total;
      if (p > 0.0) h -= p * std::log(p);
    }
    s.normalized_entropy = h / std::log(double(T));
  }

  s.edge_histogram.assign(std::max<std::size_t>(bins, 1), 0);
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t j = 0; j < T; ++j) {
      if (k == j) continue;
      const double a = std::clamp(adjacency[k * T + j], 0.0, 1.0);
      const auto bin = std::min(s.edge_histogram.size() - 1,
                                std::size_t(a * double(s.edge_histogram.size())));
      ++s.edge_histogram[bin];
    }
  return s;
}

// ---------------------------------------------------------------------------
// Regressor

template <typename Real>
Var<Real> propagation_matrix(const Var<Real>& adjacency, bool symmetric) {
  const Shape& s = adjacency.shape();
  if (s.size() != 3 || s[1] != s[2])
    throw ShapeError("propagation_matrix expects [B,T,T], got " + to_string(s));
  const std::size_t T = s[1];
  Tensor<Real> eye({T, T});
  for (std::size_t i = 0; i < T; ++i) eye[i * T + i] = Real(1);
  const Var<Real> I(std::move(eye));
  const Var<Real> At = ops::permute(adjacency, {0, 2, 1});
  if (symmetric) {
    Var<Real> m = ops::add(ops::scale(ops::add(adjacency, At), Real(0.5)), I);
    Var<Real> dinv = ops::power(ops::sum(m, 2, true), Real(-0.5));  // [B,T,1]
    return ops::mul(ops::mul(dinv, m), ops::permute(dinv, {0, 2, 1}));
  }
  Var<Real> m = ops::add(At, I);
  return ops::div(m, ops::sum(m, 2, true));
}

template <typename Real>
GcnLayer<Real>::GcnLayer(std::size_t in, std::size_t out, Rng& rng)
    : weight(Var<Real>::parameter(init_uniform<Real>({in, out}, in, rng))), norm(out) {}

template <typename Real>
Var<Real> GcnLayer<Real>::forward(const Var<Real>& propagation, const Var<Real>& h) {
  const Shape& s = h.shape();
  if (s.size() != 3 || propagation.shape().size() != 3 || propagation.shape()[0] != s[0] ||
      propagation.shape()[1] != s[1] || propagation.shape()[2] != s[1])
    throw ShapeError("gcn_layer: propagation " + to_string(propagation.shape()) +
                     " does not match features " + to_string(s));
  const std::size_t B = s[0], T = s[1], F = s[2];
  Var<Real> y = ops::matmul(ops::reshape(ops::matmul(propagation, h), {B * T, F}), weight);
  if (!bypass_norm) y = norm.forward(y);
  return ops::reshape(ops::elu(y), {B, T, y.shape()[1]});
}

template <typename Real>
void GcnLayer<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  out.push_back({prefix + ".weight", weight});
  norm.collect(prefix + ".norm", out);
}

template <typename Real>
void GcnLayer<Real>::collect_buffers(const std::string& prefix, BufferList<Real>& out) {
  norm.collect_buffers(prefix + ".norm", out);
}

template <typename Real>
Var<Real> weighted_readout(const Var<Real>& h, const Var<Real>& w) {
  const Shape& s = h.shape();
  if (s.size() != 3 || w.shape() != Shape{s[0], s[1]})
    throw ShapeError("weighted_readout: features " + to_string(s) + " vs weights " +
                     to_string(w.shape()));
  for (std::size_t b = 0; b < s[0]; ++b) {
    Real total = 0;
    for (std::size_t j = 0; j < s[1]; ++j) total += w.value()[b * s[1] + j];
    if (!(total > Real(0))) throw ContractError("weighted_readout: node weights sum to zero");
  }
  Var<Real> w3 = ops::reshape(w, {s[0], s[1], 1});
  return ops::div(ops::sum(ops::mul(h, w3), 1, false), ops::sum(w3, 1, false));
}

template <typename Real>
GraphRegressor<Real>::GraphRegressor(const ModelConfig& cfg, Rng& rng)
    : symmetric(cfg.symmetric_adjacency) {
  std::size_t in = cfg.embedding_dim;
  for (std::size_t out : cfg.gcn_dims) {
    layers.emplace_back(in, out, rng);
    in = out;
  }
  ef_head = MlpBlock<Real>(in, cfg.head_hidden, 1, rng);
  // Start at EF 50% so an untrained model predicts mid-range instead of ~0.
  ef_head.fc2.bias.mutable_value().fill(Real(0.5));
  class_head = MlpBlock<Real>(in, cfg.head_hidden, cfg.num_classes, rng);
}

template <typename Real>
Prediction<Real> GraphRegressor<Real>::forward(const Var<Real>& features,
                                               const Var<Real>& adjacency,
                                               const Var<Real>& node_weights) {
  const std::size_t B = adjacency.shape()[0], T = adjacency.shape()[1];
  const Var<Real> P = propagation_matrix(adjacency, symmetric);
  Var<Real> h = ops::reshape(features, {B, T, features.value().size() / (B * T)});
  for (auto& layer : layers) h = layer.forward(P, h);
  Prediction<Real> p;
  p.graph_embedding = weighted_readout(h, node_weights);
  p.ef = ef_head.forward(p.graph_embedding);
  p.class_logits = class_head.forward(p.graph_embedding);
  return p;
}

template <typename Real>
void GraphRegressor<Real>::set_training(bool on) {
  for (auto& l : layers) l.norm.training = on;
  ef_head.set_training(on);
  class_head.set_training(on);
}

template <typename Real>
void GraphRegressor<Real>::collect(const std::string& prefix, ParamList<Real>& out) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    layers[i].collect(prefix + ".gcn" + std::to_string(i), out);
  ef_head.collect(prefix + ".ef_head", out);
  class_head.collect(prefix + ".class_head", out);
}

template <typename Real>
void GraphRegressor<Real>::collect_buffers(const std::string& prefix, BufferList<Real>& out) {
  for (std::size_t i = 0; i < layers.size(); ++i)
    layers[i].collect_buffers(prefix + ".gcn" + std::to_string(i), out);
  ef_head.collect_buffers(prefix + ".ef_head", out);
  class_head.collect_buffers(prefix + ".class_head", out);
}

// ---------------------------------------------------------------------------
// Full model

template <typename Real>
EchoGnn<Real>::EchoGnn(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  encoder = VideoEncoder<Real>(cfg_, rng);
  attention = AttentionEncoder<Real>(cfg_.embedding_dim, cfg_.attention_hidden, rng);
  regressor = GraphRegressor<Real>(cfg_, rng);
}

template <typename Real>
ModelOutput<Real> EchoGnn<Real>::forward(const Tensor<Real>& clips, bool with_regressor) {
  const Shape& s = clips.shape();
  if (s.size() != 4 || s[1] != cfg_.frames || s[2] != cfg_.height || s[3] != cfg_.width)
    throw ShapeError("model expects clips [B," + std::to_string(cfg_.frames) + "," +
                     std::to_string(cfg_.height) + "," + std::to_string(cfg_.width) +
                     "], got " + to_string(s));
  ModelOutput<Real> out;
  out.embeddings = encoder.forward(Var<Real>(clips));
  out.graph = attention.forward(out.embeddings, s[0], s[1]);
  if (with_regressor)
    out.prediction =
        regressor.forward(out.embeddings, out.graph.adjacency, out.graph.node_weights);
  return out;
}

template <typename Real>
void EchoGnn<Real>::set_training(bool on) {
  training_ = on;
  encoder.set_training(on);
  attention.set_training(on);
  regressor.set_training(on);
}

template <typename Real>
ParamList<Real> EchoGnn<Real>::parameters() const {
  ParamList<Real> p = pretrain_parameters();
  regressor.collect("regressor", p);
  return p;
}

template <typename Real>
ParamList<Real> EchoGnn<Real>::pretrain_parameters() const {
  ParamList<Real> p;
  encoder.collect("encoder", p);
  attention.collect("attention", p);
  return p;
}

template <typename Real>
BufferList<Real> EchoGnn<Real>::buffers() {
  BufferList<Real> b;
  encoder.collect_buffers("encoder", b);
  attention.collect_buffers("attention", b);
  regressor.collect_buffers("regressor", b);
  return b;
}

namespace {

std::size_t mlp_count(std::size_t in, std::size_t hidden, std::size_t out) {
  return in * hidden + hidden + 2 * hidden + hidden * out + out;
}

}  // namespace

std::size_t count_model_parameters(const ModelConfig& cfg) {
  cfg.validate();
  std::size_t n = 0, in = 1;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    const std::size_t out = cfg.channels[i];
    n += in * out * cfg.kernel_t * cfg.kernel_hw * cfg.kernel_hw + 2 * out;
    if (in != out || i > 0) n += in * out + out;
    in = out;
  }
  n += in * cfg.embedding_dim + cfg.embedding_dim;
  const std::size_t d = cfg.embedding_dim, h = cfg.attention_hidden;
  n += mlp_count(2 * d, h, h) + mlp_count(h, h, h) + mlp_count(2 * h, h, 1) + mlp_count(1, h, 1);
  in = d;
  for (std::size_t g : cfg.gcn_dims) {
    n += in * g + 2 * g;
    in = g;
  }
  n += mlp_count(in, cfg.head_hidden, 1) + mlp_count(in, cfg.head_hidden, cfg.num_classes);
  return n;
}

#define ECHOGNN_INSTANTIATE(Real)                                                   \
  template struct EncoderBlock<Real>;                                               \
  template class VideoEncoder<Real>;                                                \
  template class AttentionEncoder<Real>;                                            \
  template Var<Real> propagation_matrix<Real>(const Var<Real>&, bool);              \
  template class GcnLayer<Real>;                                                    \
  template Var<Real> weighted_readout<Real>(const Var<Real>&, const Var<Real>&);    \
  template class GraphRegressor<Real>;                                              \
  template class EchoGnn<Real>;

ECHOGNN_INSTANTIATE(float)
ECHOGNN_INSTANTIATE(double)
#undef ECHOGNN_INSTANTIATE

}  // namespace echognn
