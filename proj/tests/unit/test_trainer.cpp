#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "echognn/trainer.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace echognn;
using namespace testing_support;
using V = Var<double>;
using T = Tensor<double>;

namespace {

TrainConfig f64_config(std::size_t epochs = 2) {
  TrainConfig c;
  c.mode = NumericMode::f64;
  c.epochs = epochs;
  c.batch_size = 4;
  c.pretrain_epochs = 1;
  c.seed = 3;
  return c;
}

std::vector<T> snapshot(const EchoGnn<double>& m) {
  std::vector<T> out;
  for (const auto& p : m.parameters()) out.push_back(p.var.value());
  return out;
}

}  // namespace

TEST(Adam, TwoStepsMatchFormula) {
  V p = V::parameter(T::scalar(0.5));
  ParamList<double> params{{"p", p}};
  auto state = AdamState<double>::zeros_like(params);
  const AdamHyper h{0.01, 0.9, 0.999, 1e-8};
  double m = 0, v = 0, x = 0.5;
  for (int t = 1; t <= 2; ++t) {
    const double g = t == 1 ? 0.3 : -0.7;
    p.mutable_grad()[0] = g;
    adam_step(params, state, h);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    x -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
    EXPECT_DOUBLE_EQ(p.value().item(), x);
    EXPECT_EQ(p.grad().item(), 0.0);  // cleared after the step
  }
  EXPECT_EQ(state.step, 2u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  V p = V::parameter(T({3}, 1.25));
  ParamList<double> params{{"p", p}};
  auto state = AdamState<double>::zeros_like(params);
  for (int i = 0; i < 5; ++i) adam_step(params, state, AdamHyper{});
  EXPECT_EQ(p.value(), T({3}, 1.25));
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  V p = V::parameter(T::scalar(0.0));
  ParamList<double> params{{"p", p}};
  auto state = AdamState<double>::zeros_like(params);
  double before = 0.0;
  for (int i = 0; i < 2000; ++i) {
    before = p.value().item();
    p.mutable_grad()[0] = -3.0;
    adam_step(params, state, AdamHyper{1e-3});
  }
  EXPECT_NEAR(p.value().item() - before, 1e-3, 1e-8);
}

TEST(Adam, NonFiniteUpdateThrows) {
  V p = V::parameter(T::scalar(1e308));
  ParamList<double> params{{"p", p}};
  auto state = AdamState<double>::zeros_like(params);
  p.mutable_grad()[0] = -1.0;
  EXPECT_THROW(adam_step(params, state, AdamHyper{1e308}), NumericError);
}

TEST(PretrainTargets, PeaksAndSkips) {
  const auto t = pretrain_targets(32, 5, 20, 2.0);
  EXPECT_EQ(t[5], 1.0);
  EXPECT_EQ(t[20], 1.0);
  // Both Gaussians contribute; the far one only in the tenth decimal.
  EXPECT_NEAR(t[7], std::exp(-4.0 / 8.0) + std::exp(-169.0 / 8.0), 1e-15);
  for (double v : t) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : pretrain_targets(32, std::nullopt, std::nullopt, 2.0)) EXPECT_EQ(v, 0.0);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_numeric_mode("verification"), NumericMode::f64);
  EXPECT_EQ(parse_numeric_mode("training"), NumericMode::f32);
  EXPECT_THROW(parse_numeric_mode("f16"), ConfigError);
}

TEST(Trainer, ModeMustMatchScalarType) {
  EchoGnn<float> m(small_config(), 0);
  EXPECT_THROW(Trainer<float>(m, f64_config()), ContractError);
}

TEST(Trainer, LossFallsOnTinyDataset) {
  const auto data = make_videos(4, 1);
  EchoGnn<double> model(small_config(), 1);
  TrainConfig cfg = f64_config(50);
  cfg.augment = false;
  cfg.learning_rate = 3e-3;
  Trainer<double> trainer(model, cfg);
  std::vector<double> mae;
  for (int e = 0; e < 50; ++e) mae.push_back(trainer.train_epoch(data, data).train_mae);
  auto window = [&](std::size_t from) {
    double s = 0;
    for (std::size_t i = from; i < from + 10; ++i) s += mae[i];
    return s / 10;
  };
  for (std::size_t from = 10; from + 10 <= 50; from += 10) EXPECT_LT(window(from), window(from - 10));
}

TEST(Trainer, SameSeedSameCurve) {
  const auto data = make_videos(6, 2);
  std::vector<std::vector<EpochRecord>> logs;
  std::vector<std::vector<T>> params;
  for (int run = 0; run < 2; ++run) {
    TempDir dir("same_seed_" + std::to_string(run));
    EchoGnn<double> model(small_config(), 4);
    Trainer<double> trainer(model, f64_config(2));
    trainer.run_pretraining(data, dir.path());
    trainer.run_training(data, data, dir.path());
    logs.push_back(trainer.log());
    params.push_back(snapshot(model));
  }
  ASSERT_EQ(logs[0].size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(logs[0][i].train_mae, logs[1][i].train_mae);
    EXPECT_EQ(logs[0][i].val_mae, logs[1][i].val_mae);
  }
  EXPECT_EQ(params[0], params[1]);
}

TEST(Trainer, ZeroLambdaMatchesNoClassLoss) {
  const auto data = make_videos(6, 3);
  std::vector<std::vector<EpochRecord>> logs;
  std::vector<std::vector<T>> params;
  for (bool class_loss : {true, false}) {
    EchoGnn<double> model(small_config(), 5);
    TrainConfig cfg = f64_config(3);
    cfg.pretrain = false;
    cfg.class_loss = class_loss;
    cfg.lambda = 0.0;
    Trainer<double> trainer(model, cfg);
    for (int e = 0; e < 3; ++e) trainer.train_epoch(data, data);
    logs.push_back(trainer.log());
    params.push_back(snapshot(model));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(logs[0][i].train_mae, logs[1][i].train_mae);
    EXPECT_EQ(logs[0][i].val_mae, logs[1][i].val_mae);
  }
  EXPECT_EQ(params[0], params[1]);
}

TEST(Trainer, PretrainingTouchesOnlyEncoders) {
  const auto data = make_videos(4, 4);
  EchoGnn<double> model(small_config(), 6);
  const auto before = model.parameters();
  std::vector<T> values;
  for (const auto& p : before) values.push_back(p.var.value());
  Trainer<double> trainer(model, f64_config());
  const PretrainRecord r = trainer.pretrain_epoch(data);
  EXPECT_EQ(r.clips, 4u);
  EXPECT_GT(r.bce, 0.0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool regressor = before[i].name.rfind("regressor", 0) == 0;
    EXPECT_EQ(before[i].var.value() == values[i], regressor) << before[i].name;
  }
}

TEST(Trainer, ResumeIsBitExact) {
  const auto data = make_videos(6, 5);
  TempDir a("resume_a"), b("resume_b");
  EchoGnn<double> straight(small_config(), 7);
  Trainer<double> t1(straight, f64_config(3), "h");
  t1.run_pretraining(data, a.path());
  t1.run_training(data, data, a.path());

  EchoGnn<double> first(small_config(), 7);
  Trainer<double> t2(first, f64_config(2), "h");
  t2.run_pretraining(data, b.path());
  t2.run_training(data, data, b.path());

  EchoGnn<double> resumed(small_config(), 99);
  TrainConfig cfg = f64_config(3);
  Trainer<double> t3(resumed, cfg, "h");
  t3.load(b / "last.ckpt");
  EXPECT_EQ(t3.stage(), Stage::train);
  EXPECT_EQ(t3.epoch(), 2u);
  t3.run_training(data, data, b.path());
  EXPECT_EQ(snapshot(resumed), snapshot(straight));
  ASSERT_EQ(t3.log().size(), 3u);
  EXPECT_EQ(t3.log().back().val_mae, t1.log().back().val_mae);
  EXPECT_EQ(slurp(a / "train_log.csv"), slurp(b / "train_log.csv"));
  EXPECT_EQ(slurp(a / "last.ckpt"), slurp(b / "last.ckpt"));
}

TEST(Checkpoint, RejectsBadFiles) {
  const auto data = make_videos(4, 6);
  TempDir dir("ckpt_bad");
  EchoGnn<double> model(small_config(), 8);
  Trainer<double> trainer(model, f64_config(1), "abc");
  trainer.save(dir / "good.ckpt");
  const std::string bytes = slurp(dir / "good.ckpt");

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  Trainer<double> other(model, f64_config(1), "abc");
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  EXPECT_THROW(other.load(write("flip.ckpt", flipped)), FormatError);
  EXPECT_THROW(other.load(write("short.ckpt", bytes.substr(0, bytes.size() - 3))), FormatError);
  EXPECT_THROW(other.load(write("long.ckpt", bytes + "x")), FormatError);
  EXPECT_THROW(other.load(write("magic.ckpt", "XXXX" + bytes.substr(4))), FormatError);
  EXPECT_THROW(other.load(dir / "missing.ckpt"), IoError);

  Trainer<double> wrong_hash(model, f64_config(1), "xyz");
  EXPECT_THROW(wrong_hash.load(dir / "good.ckpt"), ConfigError);

  ModelConfig bigger = small_config();
  bigger.gcn_dims = {8, 8};
  EchoGnn<double> different(bigger, 8);
  Trainer<double> mismatch(different, f64_config(1), "abc");
  EXPECT_THROW(mismatch.load(dir / "good.ckpt"), FormatError);

  EXPECT_EQ(checkpoint_model_config(dir / "good.ckpt"), small_config());
  EXPECT_EQ(checkpoint_numeric_mode(dir / "good.ckpt"), NumericMode::f64);
}

TEST(Checkpoint, WeightsRoundTripAcrossObjects) {
  TempDir dir("ckpt_weights");
  EchoGnn<float> a(small_config(), 1), b(small_config(), 2);
  TrainConfig cfg = f64_config();
  cfg.mode = NumericMode::f32;
  Trainer<float> t(a, cfg);
  t.save(dir / "w.ckpt");
  Trainer<float>::load_weights(b, dir / "w.ckpt");
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].var.value(), pb[i].var.value());
  const auto ba = a.buffers(), bb = b.buffers();
  for (std::size_t i = 0; i < ba.size(); ++i) EXPECT_EQ(*ba[i].tensor, *bb[i].tensor);
  EchoGnn<double> wrong(small_config(), 1);
  EXPECT_THROW(Trainer<double>::load_weights(wrong, dir / "w.ckpt"), FormatError);
}

TEST(Trainer, DivergenceReportsLastGoodCheckpoint) {
  const auto data = make_videos(4, 7);
  TempDir dir("diverge");
  EchoGnn<double> model(small_config(), 9);
  TrainConfig cfg = f64_config(3);
  cfg.pretrain = false;
  cfg.learning_rate = 1e300;
  Trainer<double> trainer(model, cfg);
  try {
    trainer.run_training(data, data, dir.path());
    FAIL() << "expected a numeric failure";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("last good checkpoint"), std::string::npos);
  }
}

TEST(StackClips, Layout) {
  Clip a, b;
  a.frames = Tensor<float>({2, 1, 1}, std::vector<float>{1, 2});
  b.frames = Tensor<float>({2, 1, 1}, std::vector<float>{3, 4});
  const auto s = stack_clips<double>({a, b});
  EXPECT_EQ(s, T({2, 2, 1, 1}, std::vector<double>{1, 2, 3, 4}));
}
