#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "echognn/evaluation.hpp"
#include "echognn/model_config.hpp"
#include "echognn/synth.hpp"
#include "echognn/trainer.hpp"

namespace echognn::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kSelftestFailed = 1,
  kBadConfig = 2,
  kMissingFile = 3,
  kNumericFailure = 4,
};

/// Everything a run can be configured with. Keys are "section.key"; the
/// config file uses INI sections with the same names.
struct RunConfig {
  // [run]
  std::uint64_t seed = 0;
  NumericMode mode = NumericMode::f32;
  std::string preset = "desk";
  unsigned workers = 1;
  // [paths]
  std::string data_dir = "data";
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
  // [data]; frame size follows the model preset.
  DatasetSpec data{.train = 512, .val = 128, .test = 128};
  // [model]
  std::size_t frames = 0;  // 0 keeps the preset's T_fixed
  bool symmetric_adjacency = true;
  bool positional_encoding = true;
  // [training]
  TrainConfig training;
  // [evaluation]
  std::string eval_split = "test";
  ThresholdRule threshold_rule = ThresholdRule::run_boundary;
  double tau = 0.2;
  // [explain]
  std::vector<std::uint64_t> explain_ids;
  std::string explain_split = "test";

  /// Every accepted key, in canonical order.
  static const std::vector<std::string>& keys();

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Reads an INI file ([section] then key = value). IoError if unreadable.
  void load_file(const std::filesystem::path& path);

  ModelConfig model() const;
  DatasetSpec dataset() const;
  TrainConfig train_config() const;

  /// Cross-field checks (model, training, data ranges). ConfigError.
  void validate() const;

  /// "key=value" lines for every key that shapes the data, the model or its
  /// training. Paths, worker count and evaluation/explain options are left
  /// out so a checkpoint stays loadable when only those change.
  std::string canonical_text() const;
  /// FNV-1a of canonical_text(), as 16 hex digits.
  std::string hash() const;
  /// "config_hash=<hash> seed=<seed> mode=<mode>".
  std::string provenance() const;
};

/// Entry point shared by the binary and the tests. Writes progress to `out`
/// and diagnostics to `err`. `args` starts with the program name, like argv.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Built-in gradient, invariant and protocol checks. Returns true on success.
bool selftest(std::ostream& out, std::uint64_t seed = 0);

}  // namespace echognn::cli
