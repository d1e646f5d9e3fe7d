#pragma once

#include <optional>
#include <vector>

#include "echognn/layers.hpp"
#include "echognn/model_config.hpp"

namespace echognn {

// ---------------------------------------------------------------------------
// Video encoder

/// conv3d -> batchnorm -> ELU, plus an identity or 1x1x1 projected skip.
template <typename Real>
struct EncoderBlock {
  Conv3d<Real> conv;
  BatchNorm<Real> norm;
  std::optional<Conv3d<Real>> projection;

  Var<Real> forward(const Var<Real>& x);
};

/// Clips [B, T, H, W] -> frame embeddings [B*T, d] (row b*T + j is frame j of
/// clip b). The temporal axis is never strided.
template <typename Real>
class VideoEncoder {
 public:
  VideoEncoder() = default;
  VideoEncoder(const ModelConfig& cfg, Rng& rng);

  Var<Real> forward(const Var<Real>& clips);
  /// Same as forward but stops before the positional encoding is added.
  Var<Real> forward_features(const Var<Real>& clips);

  void set_training(bool on);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
  void collect_buffers(const std::string& prefix, BufferList<Real>& out);

  std::vector<EncoderBlock<Real>> blocks;
  Linear<Real> head;
  Tensor<Real> pe;  // [T, d], empty when disabled
};

// ---------------------------------------------------------------------------
// Attention encoder

/// Differentiable echo-graph for a batch of B clips of T frames.
template <typename Real>
struct EchoGraphVars {
  Var<Real> adjacency;     // [B, T, T], A[b,k,s] = a_{k,s}, zero diagonal
  Var<Real> edge_logits;   // [B*T*(T-1), 1], edge order from complete_graph_edges
  Var<Real> node_logits;   // [B*T, 1]
  Var<Real> node_weights;  // [B, T]
  std::size_t batch = 0;
  std::size_t frames = 0;
};

/// Directed edges k->s, k != s, of B disjoint complete graphs on T nodes,
/// grouped by batch, then destination s, then source k.
struct EdgeList {
  ops::Index src;   // global node row b*T + k
  ops::Index dst;   // global node row b*T + s
  ops::Index cell;  // flat position b*T*T + k*T + s in the adjacency
};
EdgeList complete_graph_edges(std::size_t batch, std::size_t frames);

template <typename Real>
class AttentionEncoder {
 public:
  AttentionEncoder() = default;
  AttentionEncoder(std::size_t embedding_dim, std::size_t hidden, Rng& rng);

  /// H0 is [B*T, d]. Throws ContractError for T < 2.
  EchoGraphVars<Real> forward(const Var<Real>& h0, std::size_t batch, std::size_t frames);

  void set_training(bool on);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
  void collect_buffers(const std::string& prefix, BufferList<Real>& out);

  MlpBlock<Real> node_to_edge;    // u = MLP1([h_k || h_s])
  MlpBlock<Real> edge_to_node;    // v = MLP2(sum_k u)
  MlpBlock<Real> edge_logit;      // z = MLP3([v_k || v_s])
  MlpBlock<Real> node_weight;     // w = sigmoid(MLP4(sum_k z))
};

/// Summary of one clip's graph.
struct GraphStats {
  double normalized_entropy = 0.0;  // entropy of w / sum(w), divided by log T
  double max_weight = 0.0;
  double mean_weight = 0.0;
  double variance = 0.0;            // population variance of w
  double max_minus_mean = 0.0;
  std::vector<std::size_t> edge_histogram;  // off-diagonal A over [0,1]
};
/// `adjacency` is row-major [T, T]; its diagonal is ignored.
GraphStats graph_stats(const std::vector<double>& node_weights,
                       const std::vector<double>& adjacency, std::size_t bins = 10);

// ---------------------------------------------------------------------------
// Regressor

/// Normalized propagation matrix for A [B, T, T]. Symmetric mode:
/// D^-1/2 ((A + A^T)/2 + I) D^-1/2. Directed mode: row-normalized (A^T + I),
/// so row s averages the messages arriving at s.
template <typename Real>
Var<Real> propagation_matrix(const Var<Real>& adjacency, bool symmetric);

template <typename Real>
class GcnLayer {
 public:
  GcnLayer() = default;
  GcnLayer(std::size_t in, std::size_t out, Rng& rng);

  /// P [B, T, T] (from propagation_matrix), H [B, T, in] -> [B, T, out].
  Var<Real> forward(const Var<Real>& propagation, const Var<Real>& h);

  void collect(const std::string& prefix, ParamList<Real>& out) const;
  void collect_buffers(const std::string& prefix, BufferList<Real>& out);

  Var<Real> weight;  // [in, out]
  BatchNorm<Real> norm;
  bool bypass_norm = false;
};

/// sum_j w_j H_j / sum_j w_j per clip; H [B, T, F], w [B, T] -> [B, F].
/// Throws ContractError when some clip's weights sum to zero.
template <typename Real>
Var<Real> weighted_readout(const Var<Real>& h, const Var<Real>& w);

template <typename Real>
struct Prediction {
  Var<Real> ef;            // [B, 1], EF / 100, unclamped
  Var<Real> class_logits;  // [B, num_classes]
  Var<Real> graph_embedding;
};

template <typename Real>
class GraphRegressor {
 public:
  GraphRegressor() = default;
  GraphRegressor(const ModelConfig& cfg, Rng& rng);

  /// features [B*T, d], adjacency [B, T, T], node_weights [B, T].
  Prediction<Real> forward(const Var<Real>& features, const Var<Real>& adjacency,
                           const Var<Real>& node_weights);

  void set_training(bool on);
  void collect(const std::string& prefix, ParamList<Real>& out) const;
  void collect_buffers(const std::string& prefix, BufferList<Real>& out);

  std::vector<GcnLayer<Real>> layers;
  MlpBlock<Real> ef_head;
  MlpBlock<Real> class_head;
  bool symmetric = true;
};

// ---------------------------------------------------------------------------
// Full model

template <typename Real>
struct ModelOutput {
  Var<Real> embeddings;  // [B*T, d]
  EchoGraphVars<Real> graph;
  Prediction<Real> prediction;
};

template <typename Real>
class EchoGnn {
 public:
  EchoGnn() = default;
  EchoGnn(const ModelConfig& cfg, std::uint64_t seed);

  /// clips [B, T, H, W]; with_regressor=false skips the regressor (pretraining).
  ModelOutput<Real> forward(const Tensor<Real>& clips, bool with_regressor = true);

  void set_training(bool on);
  bool training() const { return training_; }

  /// Every trainable tensor, in a fixed order with stable names.
  ParamList<Real> parameters() const;
  /// Video encoder and attention encoder parameters only.
  ParamList<Real> pretrain_parameters() const;
  BufferList<Real> buffers();

  const ModelConfig& config() const { return cfg_; }

  VideoEncoder<Real> encoder;
  AttentionEncoder<Real> attention;
  GraphRegressor<Real> regressor;

 private:
  ModelConfig cfg_;
  bool training_ = true;
};

/// Exact scalar parameter count of a freshly built model for `cfg`.
std::size_t count_model_parameters(const ModelConfig& cfg);

}  // namespace echognn
