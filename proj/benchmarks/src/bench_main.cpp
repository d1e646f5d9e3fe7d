#include <benchmark/benchmark.h>

#include <random>

#include "echognn/evaluation.hpp"
#include "echognn/model.hpp"
#include "echognn/optim.hpp"
#include "echognn/sampling.hpp"
#include "echognn/synth.hpp"

using namespace echognn;

namespace {

template <typename Real>
Tensor<Real> uniform(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<Real> t(std::move(shape));
  for (auto& x : t.storage()) x = Real(u(rng));
  return t;
}

// Encoder block shapes of the desk preset at batch 8: {in, out, size, stride}.
constexpr std::size_t kBlocks[][4] = {{1, 8, 32, 1}, {8, 16, 32, 2}, {16, 32, 16, 2}, {32, 64, 8, 2}};

void BM_Conv3dForward(benchmark::State& state) {
  const auto* b = kBlocks[state.range(0)];
  std::mt19937_64 rng(1);
  Conv3d<float> conv(b[0], b[1], {3, 3, 3}, {1, b[3], b[3]}, {1, 1, 1}, rng, false);
  const Var<float> x(uniform<float>({8, b[0], 32, b[2], b[2]}, 2));
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_Conv3dForward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_Conv3dBackward(benchmark::State& state) {
  const auto* b = kBlocks[state.range(0)];
  std::mt19937_64 rng(1);
  Conv3d<float> conv(b[0], b[1], {3, 3, 3}, {1, b[3], b[3]}, {1, 1, 1}, rng, false);
  const Tensor<float> input = uniform<float>({8, b[0], 32, b[2], b[2]}, 2);
  for (auto _ : state) {
    const Var<float> x(input, true);
    backward(ops::sum(conv.forward(x)));
  }
}
BENCHMARK(BM_Conv3dBackward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_AttentionForward(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  EchoGnn<float> model(cfg, 0);
  const Var<float> h(uniform<float>({8 * cfg.frames, cfg.embedding_dim}, 3));
  for (auto _ : state) benchmark::DoNotOptimize(model.attention.forward(h, 8, cfg.frames));
}
BENCHMARK(BM_AttentionForward)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  EchoGnn<float> model(cfg, 0);
  model.set_training(false);
  const Tensor<float> clips = uniform<float>({8, cfg.frames, cfg.height, cfg.width}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(clips));
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

// One optimizer step on a batch of 8 desk clips, MAE plus cross-entropy.
template <typename Real>
void BM_TrainStep(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  EchoGnn<Real> model(cfg, 0);
  ParamList<Real> params = model.parameters();
  auto adam = AdamState<Real>::zeros_like(params);
  const Tensor<Real> clips = uniform<Real>({8, cfg.frames, cfg.height, cfg.width}, 5);
  const Tensor<Real> target({8, 1}, Real(0.5));
  const std::vector<int> labels{0, 1, 2, 3, 0, 1, 2, 3};
  for (auto _ : state) {
    for (auto& p : params) p.var.mutable_grad().fill(Real(0));
    const ModelOutput<Real> out = model.forward(clips);
    backward(ops::add(mae_loss(out.prediction.ef, target),
                      cross_entropy_loss(out.prediction.class_logits, labels)));
    adam_step(params, adam, AdamHyper{1e-3});
  }
}
BENCHMARK(BM_TrainStep<float>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStep<double>)->Unit(benchmark::kMillisecond);

void BM_GenerateVideo(benchmark::State& state) {
  DatasetSpec spec;
  std::uint64_t id = 0;
  for (auto _ : state) {
    const GeneratorParams p = draw_params(spec, 0, id, false);
    benchmark::DoNotOptimize(generate_video(p, sample_seed(0, id++)));
  }
}
BENCHMARK(BM_GenerateVideo)->Unit(benchmark::kMillisecond);

void BM_MultiClipPrediction(benchmark::State& state) {
  DatasetSpec spec;
  std::vector<LabeledVideo> videos;
  for (std::uint64_t id = 0; id < 4; ++id)
    videos.push_back({id, generate_video(draw_params(spec, 0, id, false), sample_seed(0, id))});
  EchoGnn<float> model(ModelConfig::desk(), 0);
  model.set_training(false);
  for (auto _ : state) benchmark::DoNotOptimize(predict_ef_multiclip(model, videos));
}
BENCHMARK(BM_MultiClipPrediction)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
