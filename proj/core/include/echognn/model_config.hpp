#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace echognn {

/// Architecture of the full model. Presets: desk (32x32 frames, CPU scale),
/// paper (112x112, widths from the original publication) and tiny (unit tests).
struct ModelConfig {
  std::size_t frames = 32;  // T_fixed
  std::size_t height = 32;
  std::size_t width = 32;

  // Video encoder: one residual block per entry; spatial stride 2 from block 2.
  std::vector<std::size_t> channels{8, 16, 32, 64};
  std::size_t kernel_t = 3;
  std::size_t kernel_hw = 3;
  std::size_t embedding_dim = 64;
  bool positional_encoding = true;

  // Attention encoder: hidden width of all four MLPs, also d_e and d_v.
  std::size_t attention_hidden = 32;

  // Regressor.
  std::vector<std::size_t> gcn_dims{32, 16, 8};
  std::size_t head_hidden = 8;
  std::size_t num_classes = 4;
  bool symmetric_adjacency = true;  // false: row-normalized directed propagation

  static ModelConfig desk();
  static ModelConfig paper();
  static ModelConfig tiny();
  /// "desk" | "paper" | "tiny"; ConfigError otherwise.
  static ModelConfig preset(const std::string& name);

  /// Throws ConfigError for inconsistent sizes (odd d, frames too small for
  /// the stride pyramid, empty layer lists, T < 2).
  void validate() const;

  /// Spatial extent after the encoder's stride pyramid.
  std::size_t encoded_height() const;
  std::size_t encoded_width() const;

  /// Line-oriented "key=value" form; from_text rejects unknown keys.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace echognn
