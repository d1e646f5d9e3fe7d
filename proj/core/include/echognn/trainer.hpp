#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "echognn/model.hpp"
#include "echognn/optim.hpp"
#include "echognn/sampling.hpp"

namespace echognn {

enum class NumericMode { f32, f64 };
std::string to_string(NumericMode m);
NumericMode parse_numeric_mode(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 60;
  std::uint64_t seed = 0;
  bool augment = true;
  bool class_loss = true;
  bool pretrain = true;
  double lambda = 1.0;             // classification weight
  double zoom_probability = 0.2;
  std::size_t pretrain_epochs = 10;
  double pretrain_sigma = 2.0;     // frames
  double pretrain_learning_rate = 1e-3;
  NumericMode mode = NumericMode::f32;

  /// Throws ConfigError for lr <= 0, batch < 2, sigma <= 0 and similar.
  void validate() const;
};

/// Soft ES/ED targets over clip-local frames:
/// clip(exp(-(j-es)^2 / 2s^2) + exp(-(j-ed)^2 / 2s^2), 0, 1). An event outside
/// the clip contributes nothing.
std::vector<double> pretrain_targets(std::size_t frames, std::optional<std::size_t> es,
                                     std::optional<std::size_t> ed, double sigma);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_mae = 0.0;  // EF points
  double train_ce = 0.0;   // 0 when the class loss is off
  double val_mae = 0.0;    // EF points, multi-clip protocol
};

struct PretrainRecord {
  std::size_t epoch = 0;
  double bce = 0.0;
  std::size_t clips = 0;  // clips that contributed to the loss
};

enum class Stage : std::uint32_t { pretrain = 0, train = 1 };

/// Owns the optimization state of one run. Stage order is pretrain (optional)
/// then train; both stages checkpoint after every epoch so a run can resume.
template <typename Real>
class Trainer {
 public:
  Trainer(EchoGnn<Real>& model, TrainConfig cfg, std::string config_hash = "");

  /// One pass over `data` with the BCE node-weight objective; only the video
  /// and attention encoders are updated. Clips containing neither labelled
  /// frame are skipped.
  PretrainRecord pretrain_epoch(const std::vector<LabeledVideo>& data);

  /// One pass of MAE (+ lambda * CE) training followed by validation.
  EpochRecord train_epoch(const std::vector<LabeledVideo>& train,
                          const std::vector<LabeledVideo>& val);

  /// Runs the remaining pretraining epochs, checkpointing into `dir`
  /// (pretrain_last.ckpt each epoch, pretrain.ckpt at the end).
  void run_pretraining(const std::vector<LabeledVideo>& train, const std::filesystem::path& dir,
                       const std::function<void(const PretrainRecord&)>& on_epoch = {});

  /// Runs the remaining training epochs. Writes last.ckpt every epoch,
  /// best.ckpt whenever validation MAE improves and train_log.csv.
  void run_training(const std::vector<LabeledVideo>& train,
                    const std::vector<LabeledVideo>& val, const std::filesystem::path& dir,
                    const std::function<void(const EpochRecord&)>& on_epoch = {});

  void save(const std::filesystem::path& path) const;
  /// Restores model, optimizer, counters and RNG. Throws FormatError on a
  /// corrupt file or a mismatching model.
  void load(const std::filesystem::path& path);

  /// Copies only model parameters and buffers from a checkpoint (used to start
  /// main training from a pretrained encoder).
  static void load_weights(EchoGnn<Real>& model, const std::filesystem::path& path);

  const std::vector<EpochRecord>& log() const { return log_; }
  const std::vector<PretrainRecord>& pretrain_log() const { return pretrain_log_; }
  Stage stage() const { return stage_; }
  std::size_t epoch() const { return epoch_; }
  double best_val_mae() const { return best_val_; }
  std::size_t best_epoch() const { return best_epoch_; }
  const TrainConfig& config() const { return cfg_; }

  /// CSV text of the training log, preceded by a '# config_hash=... seed=...' line.
  std::string log_csv() const;
  std::string pretrain_log_csv() const;

 private:
  void ensure_stage(Stage s);

  EchoGnn<Real>& model_;
  TrainConfig cfg_;
  std::string config_hash_;
  Rng rng_;
  AdamState<Real> adam_;
  Stage stage_ = Stage::pretrain;
  std::size_t epoch_ = 0;  // completed epochs in the current stage
  double best_val_ = 0.0;
  std::size_t best_epoch_ = 0;
  std::vector<EpochRecord> log_;
  std::vector<PretrainRecord> pretrain_log_;
};

/// Stacks clips into a [B, T, H, W] tensor.
template <typename Real>
Tensor<Real> stack_clips(const std::vector<Clip>& clips);

/// Reads the model architecture stored in a checkpoint.
ModelConfig checkpoint_model_config(const std::filesystem::path& path);
/// Reads the numeric mode a checkpoint was written in.
NumericMode checkpoint_numeric_mode(const std::filesystem::path& path);

}  // namespace echognn
