#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "echognn/gradsuite.hpp"
#include "echognn/model.hpp"
#include "support.hpp"

using namespace echognn;
using namespace testing_support;
using V = Var<double>;
using T = Tensor<double>;

namespace {

std::vector<std::size_t> random_perm(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// rows[j] <- rows[perm[j]] within each block of n rows.
T permute_rows(const T& x, const std::vector<std::size_t>& perm, std::size_t blocks) {
  const std::size_t n = perm.size(), width = x.size() / (blocks * n);
  T out(x.shape());
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < width; ++c)
        out[(b * n + j) * width + c] = x[(b * n + perm[j]) * width + c];
  return out;
}

Matrix to_matrix(const T& t, std::size_t offset, std::size_t rows, std::size_t cols) {
  Matrix m(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = t[offset + i * cols + j];
  return m;
}

}  // namespace

TEST(Encoder, DeskOutputShape) {
  EchoGnn<float> model(ModelConfig::desk(), 1);
  model.set_training(false);
  Rng rng(1);
  const Tensor<float> clip = rand_tensor({1, 32, 32, 32}, rng, 0, 1).cast<float>();
  EXPECT_EQ(model.encoder.forward(Var<float>(clip)).shape(), (Shape{32, 64}));
}

TEST(Encoder, ZeroPaddedFramesShareEmbeddings) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.frames = 16;
  const std::size_t real = 4, reach = cfg.channels.size();  // one frame per block
  for (bool training : {true, false}) {
    EchoGnn<double> model(cfg, 2);
    model.set_training(training);
    Rng rng(2);
    T clip({1, cfg.frames, cfg.height, cfg.width}, 0.0);
    const T noise = rand_tensor({real * cfg.height * cfg.width}, rng, 0, 1);
    std::copy(noise.data().begin(), noise.data().end(), clip.storage().begin());
    const T h = model.encoder.forward_features(V(clip)).value();
    const std::size_t d = cfg.embedding_dim;
    for (std::size_t j = real + reach + 1; j + reach < cfg.frames; ++j)
      for (std::size_t c = 0; c < d; ++c)
        ASSERT_EQ(h[j * d + c], h[(real + reach) * d + c]) << "frame " << j;
  }
}

TEST(Property, PerFrameEncoderCommutesWithPermutation) {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.kernel_t = 1;
  cfg.positional_encoding = false;
  cfg.frames = 6;
  Rng rng(3);
  for (int it = 0; it < 100; ++it) {
    EchoGnn<double> model(cfg, it);
    model.set_training(it % 2 == 0);
    const auto perm = random_perm(cfg.frames, rng);
    const T clip = rand_tensor({1, cfg.frames, cfg.height, cfg.width}, rng, 0, 1);
    const T h = model.encoder.forward(V(clip)).value();
    const T hp = model.encoder.forward(V(permute_rows(clip, perm, 1))).value();
    ASSERT_LT(max_abs_diff(hp, permute_rows(h, perm, 1)), 1e-12);
  }
}

TEST(Attention, EdgeListLayout) {
  const EdgeList e = complete_graph_edges(2, 4);
  ASSERT_EQ(e.src.size(), 2u * 4 * 3);
  for (std::size_t i = 0; i < e.src.size(); ++i) {
    EXPECT_NE(e.src[i], e.dst[i]);
    EXPECT_EQ(e.src[i] / 4, e.dst[i] / 4);
    const std::size_t b = e.src[i] / 4, k = e.src[i] % 4, s = e.dst[i] % 4;
    EXPECT_EQ(e.cell[i], b * 16 + k * 4 + s);
  }
}

TEST(Attention, IdenticalEmbeddingsGiveUniformGraph) {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng rng(4);
  AttentionEncoder<double> att(cfg.embedding_dim, cfg.attention_hidden, rng);
  att.set_training(false);
  const T row = rand_tensor({cfg.embedding_dim}, rng);
  T h({5, cfg.embedding_dim});
  for (std::size_t j = 0; j < 5; ++j)
    std::copy(row.data().begin(), row.data().end(), h.storage().begin() + j * cfg.embedding_dim);
  const auto g = att.forward(V(h), 1, 5);
  const T& a = g.adjacency.value();
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(g.node_weights.value()[k], g.node_weights.value()[0]);
    for (std::size_t s = 0; s < 5; ++s)
      if (k != s) EXPECT_EQ(a[k * 5 + s], a[1]);
  }
  EXPECT_THROW(att.forward(V(T({1, cfg.embedding_dim}, 0.0)), 1, 1), ContractError);
}

TEST(Property, AttentionIsPermutationEquivariant) {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng rng(5);
  for (int it = 0; it < 100; ++it) {
    AttentionEncoder<double> att(cfg.embedding_dim, cfg.attention_hidden, rng);
    att.set_training(it % 2 == 0);
    const std::size_t n = rand_int(rng, 2, 7), batch = rand_int(rng, 1, 2);
    const auto perm = random_perm(n, rng);
    const T h = rand_tensor({batch * n, cfg.embedding_dim}, rng);
    const auto g = att.forward(V(h), batch, n);
    const auto gp = att.forward(V(permute_rows(h, perm, batch)), batch, n);
    const T& a = g.adjacency.value();
    const T& ap = gp.adjacency.value();
    const T& w = g.node_weights.value();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_LT(std::abs(gp.node_weights.value()[b * n + j] - w[b * n + perm[j]]), 1e-5);
        ASSERT_GT(w[b * n + j], 0.0);
        ASSERT_LT(w[b * n + j], 1.0);
        ASSERT_EQ(a[(b * n + j) * n + j], 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          ASSERT_LT(std::abs(ap[(b * n + j) * n + k] - a[(b * n + perm[j]) * n + perm[k]]), 1e-5);
          if (j != k) {
            ASSERT_GT(a[(b * n + j) * n + k], 0.0);
            ASSERT_LT(a[(b * n + j) * n + k], 1.0);
          }
        }
      }
  }
}

TEST(GraphStats, HandValues) {
  EXPECT_NEAR(graph_stats({0.5, 0.5, 0.5, 0.5}, std::vector<double>(16, 0.5)).normalized_entropy,
              1.0, 1e-12);
  EXPECT_LT(graph_stats({1 - 1e-9, 1e-9, 1e-9, 1e-9}, std::vector<double>(16, 0.5))
                .normalized_entropy,
            1e-6);
  const GraphStats s = graph_stats({0.9, 0.1, 0.1, 0.1}, std::vector<double>(16, 0.25), 4);
  EXPECT_DOUBLE_EQ(s.max_minus_mean, 0.6);
  EXPECT_DOUBLE_EQ(s.max_weight, 0.9);
  ASSERT_EQ(s.edge_histogram.size(), 4u);
  EXPECT_EQ(s.edge_histogram[1], 12u);  // diagonal ignored
}

TEST(Gcn, NoEdgesIsElu) {
  Rng rng(6);
  GcnLayer<double> layer(3, 3, rng);
  layer.bypass_norm = true;
  layer.weight.mutable_value() = T({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  const T h = rand_tensor({1, 4, 3}, rng);
  for (bool symmetric : {true, false}) {
    const V p = propagation_matrix(V(T({1, 4, 4}, 0.0)), symmetric);
    const T y = layer.forward(p, V(h)).value();
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(y[i], elu(h[i]), 1e-15);
  }
}

TEST(Gcn, IdenticalConnectedNodesMatch) {
  Rng rng(7);
  GcnLayer<double> layer(2, 3, rng);
  layer.norm.training = false;
  const T a({1, 2, 2}, std::vector<double>{0, 1, 1, 0});
  const T h({1, 2, 2}, std::vector<double>{0.3, -0.7, 0.3, -0.7});
  const T y = layer.forward(propagation_matrix(V(a), true), V(h)).value();
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(y[c], y[3 + c]);
}

TEST(Property, GcnMatchesDenseFormula) {
  Rng rng(8);
  for (int it = 0; it < 100; ++it) {
    const std::size_t b = rand_int(rng, 1, 2), n = rand_int(rng, 2, 8);
    const std::size_t fin = rand_int(rng, 1, 4), fout = rand_int(rng, 1, 4);
    const bool symmetric = it % 2 == 0;
    T a = rand_tensor({b, n, n}, rng, 0.01, 0.99);
    for (std::size_t q = 0; q < b; ++q)
      for (std::size_t j = 0; j < n; ++j) a[(q * n + j) * n + j] = 0.0;
    const T h = rand_tensor({b, n, fin}, rng);
    GcnLayer<double> layer(fin, fout, rng);
    layer.norm.training = false;
    layer.norm.running_mean = rand_tensor({fout}, rng, -0.2, 0.2);
    layer.norm.running_var = rand_tensor({fout}, rng, 0.5, 2.0);
    layer.norm.gamma.mutable_value() = rand_tensor({fout}, rng, 0.5, 1.5);
    layer.norm.beta.mutable_value() = rand_tensor({fout}, rng, -0.5, 0.5);
    const T y = layer.forward(propagation_matrix(V(a), symmetric), V(h)).value();
    const Matrix w = to_matrix(layer.weight.value(), 0, fin, fout);
    for (std::size_t q = 0; q < b; ++q) {
      const Matrix am = to_matrix(a, q * n * n, n, n);
      const Matrix p = symmetric ? symmetric_propagation(am) : directed_propagation(am);
      const Matrix z = matmul(matmul(p, to_matrix(h, q * n * fin, n, fin)), w);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < fout; ++c) {
          const double bn = (z[j][c] - layer.norm.running_mean[c]) /
                                std::sqrt(layer.norm.running_var[c] + double(layer.norm.eps)) *
                                layer.norm.gamma.value()[c] +
                            layer.norm.beta.value()[c];
          ASSERT_NEAR(y[(q * n + j) * fout + c], elu(bn), 1e-10);
        }
    }
  }
}

TEST(Readout, HandCases) {
  Rng rng(9);
  const T h = rand_tensor({1, 4, 3}, rng);
  const T mean = weighted_readout(V(h), V(T({1, 4}, 0.3))).value();
  for (std::size_t c = 0; c < 3; ++c)
    EXPECT_NEAR(mean[c], (h[c] + h[3 + c] + h[6 + c] + h[9 + c]) / 4.0, 1e-15);
  const T pick = weighted_readout(V(h), V(T({1, 4}, std::vector<double>{0, 0, 1, 0}))).value();
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(pick[c], h[6 + c]);
  EXPECT_THROW(weighted_readout(V(h), V(T({1, 4}, 0.0))), ContractError);
}

TEST(Property, ReadoutIsScaleInvariant) {
  Rng rng(10);
  for (int it = 0; it < 100; ++it) {
    const std::size_t b = rand_int(rng, 1, 3), n = rand_int(rng, 1, 8);
    const T h = rand_tensor({b, n, 3}, rng);
    const T w = rand_tensor({b, n}, rng, 0.01, 0.99);
    T ws = w;
    const double c = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
    for (auto& x : ws.storage()) x *= c;
    ASSERT_LT(max_abs_diff(weighted_readout(V(h), V(w)).value(),
                           weighted_readout(V(h), V(ws)).value()),
              1e-6);
  }
}

TEST(Property, PredictionIsPermutationInvariant) {
  Rng rng(11);
  for (int it = 0; it < 100; ++it) {
    ModelConfig cfg = ModelConfig::tiny();
    cfg.symmetric_adjacency = it % 2 == 0;
    cfg.frames = rand_int(rng, 2, 7);
    EchoGnn<double> model(cfg, it);
    model.set_training(false);
    model.attention.set_training(it % 3 == 0);
    const std::size_t n = cfg.frames;
    const auto perm = random_perm(n, rng);
    const T h = rand_tensor({n, cfg.embedding_dim}, rng);
    const T hp = permute_rows(h, perm, 1);
    const auto g = model.attention.forward(V(h), 1, n);
    const auto gp = model.attention.forward(V(hp), 1, n);
    const auto p = model.regressor.forward(V(h), g.adjacency, g.node_weights);
    const auto pp = model.regressor.forward(V(hp), gp.adjacency, gp.node_weights);
    ASSERT_EQ(p.ef.shape(), (Shape{1, 1}));
    ASSERT_EQ(p.class_logits.shape(), (Shape{1, 4}));
    ASSERT_LT(std::abs(p.ef.value()[0] - pp.ef.value()[0]), 1e-5);
    ASSERT_LT(max_abs_diff(p.class_logits.value(), pp.class_logits.value()), 1e-5);
  }
}

TEST(Model, ParameterCountMatchesFormula) {
  for (const char* name : {"tiny", "desk", "paper"}) {
    const ModelConfig cfg = ModelConfig::preset(name);
    EchoGnn<float> model(cfg, 0);
    EXPECT_EQ(count_parameters(model.parameters()), count_model_parameters(cfg)) << name;
  }
  EXPECT_EQ(count_model_parameters(ModelConfig::desk()), 92791u);
  const std::size_t paper = count_model_parameters(ModelConfig::paper());
  std::printf("paper preset parameters: %zu (reference model: about 1.7M)\n", paper);
  EXPECT_GT(paper, 100000u);
  EXPECT_LT(paper, 10000000u);
}

TEST(Property, ParameterCountOverRandomConfigs) {
  Rng rng(12);
  for (int it = 0; it < 100; ++it) {
    ModelConfig cfg = ModelConfig::tiny();
    cfg.channels.resize(rand_int(rng, 1, 3));
    for (auto& c : cfg.channels) c = rand_int(rng, 1, 4);
    cfg.embedding_dim = 2 * rand_int(rng, 1, 3);
    cfg.attention_hidden = rand_int(rng, 1, 5);
    cfg.gcn_dims.resize(rand_int(rng, 1, 3));
    for (auto& d : cfg.gcn_dims) d = rand_int(rng, 1, 5);
    cfg.head_hidden = rand_int(rng, 1, 4);
    cfg.frames = rand_int(rng, 2, 5);
    EchoGnn<float> model(cfg, it);
    ASSERT_EQ(count_parameters(model.parameters()), count_model_parameters(cfg));
  }
}

TEST(Model, ParameterNamesAreUniqueAndPretrainSubset) {
  EchoGnn<float> model(ModelConfig::desk(), 0);
  std::set<std::string> names;
  for (const auto& p : model.parameters()) EXPECT_TRUE(names.insert(p.name).second) << p.name;
  for (const auto& p : model.pretrain_parameters()) {
    EXPECT_TRUE(names.count(p.name));
    EXPECT_EQ(p.name.rfind("regressor", 0), std::string::npos);
  }
}

TEST(Model, SameSeedSameOutput) {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng rng(13);
  const T clips = rand_tensor({2, cfg.frames, cfg.height, cfg.width}, rng, 0, 1);
  EchoGnn<double> a(cfg, 5), b(cfg, 5), c(cfg, 6);
  EXPECT_EQ(a.forward(clips).prediction.ef.value(), b.forward(clips).prediction.ef.value());
  EXPECT_NE(a.forward(clips).prediction.ef.value(), c.forward(clips).prediction.ef.value());
}

TEST(Model, ConfigTextRoundTrip) {
  for (const char* name : {"tiny", "desk", "paper"}) {
    const ModelConfig cfg = ModelConfig::preset(name);
    EXPECT_EQ(ModelConfig::from_text(cfg.to_text()), cfg);
  }
  EXPECT_THROW(ModelConfig::preset("huge"), ConfigError);
  EXPECT_THROW(ModelConfig::from_text("bogus=1\n"), ConfigError);
}

TEST(GradSuite, ModulesPass) {
  const auto r = module_gradient_suite(21);
  for (const auto& e : r.entries) EXPECT_TRUE(e.report.passed()) << e.label << " " << e.report.max_rel_error;
}

TEST(GradSuite, FullModelPasses) {
  const auto r = model_gradient_suite(22);
  for (const auto& e : r.entries) EXPECT_LT(e.report.max_rel_error, 1e-4) << e.label;
}
