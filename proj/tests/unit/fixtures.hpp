#pragma once

#include <vector>

#include "echognn/model_config.hpp"
#include "echognn/synth.hpp"

namespace testing_support {

/// Small model on 16x16 frames; fast enough for multi-epoch tests.
inline echognn::ModelConfig small_config() {
  echognn::ModelConfig c;
  c.frames = 16;
  c.height = c.width = 16;
  c.channels = {4, 8};
  c.embedding_dim = 8;
  c.attention_hidden = 8;
  c.gcn_dims = {8, 4};
  c.head_hidden = 4;
  return c;
}

inline echognn::DatasetSpec small_spec(std::size_t h = 16, std::size_t w = 16) {
  echognn::DatasetSpec s;
  s.height = h;
  s.width = w;
  s.frames_min = 20;
  s.frames_max = 40;
  s.period_min = 8;
  s.period_max = 14;
  return s;
}

/// In-memory videos with ids [first, first + n).
inline std::vector<echognn::LabeledVideo> make_videos(std::size_t n, std::uint64_t seed,
                                                      std::uint64_t first = 0,
                                                      const echognn::DatasetSpec& spec = small_spec()) {
  std::vector<echognn::LabeledVideo> out;
  for (std::uint64_t id = first; id < first + n; ++id) {
    const auto p = echognn::draw_params(spec, seed, id, id % 4 == 0);
    out.push_back({id, echognn::generate_video(p, echognn::sample_seed(seed, id))});
  }
  return out;
}

}  // namespace testing_support
