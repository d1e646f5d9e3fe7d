#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "echognn/synth.hpp"

namespace echognn {

/// T_fixed consecutive frames of a source video, zero-padded at the end when
/// the source is shorter.
struct Clip {
  Tensor<float> frames;  // [T_fixed, H, W]
  std::uint64_t source_id = 0;
  std::size_t start_index = 0;
  std::size_t pad_count = 0;

  std::size_t length() const { return frames.rank() ? frames.shape()[0] : 0; }
};

/// Frames [start, start + T_fixed) of v; frames past the end are zero.
Clip extract_clip(const Video& v, std::size_t start, std::size_t t_fixed,
                  std::uint64_t source_id = 0);

/// Training clip: start uniform over [0, T_total - T_fixed] (0-based,
/// inclusive), or a single zero-padded clip at 0 when the video is short.
Clip sample_train_clip(const Video& v, std::size_t t_fixed, std::mt19937_64& rng,
                       std::uint64_t source_id = 0);

/// Test-time starts: 0, T_fixed, 2 T_fixed, ...; a final window that would
/// overshoot is pulled back to T_total - T_fixed.
std::vector<std::size_t> test_clip_starts(std::size_t t_total, std::size_t t_fixed);
std::vector<Clip> make_test_clips(const Video& v, std::size_t t_fixed,
                                  std::uint64_t source_id = 0);

/// Clip-local position of a video frame index, if the clip covers it.
std::optional<std::size_t> clip_local_index(const Clip& c, std::size_t video_index);

/// Pretraining clip whose window starts no later than the first labelled
/// cycle event, so both labelled frames are the earliest events in the clip.
Clip sample_pretrain_clip(const Video& v, std::size_t t_fixed, std::mt19937_64& rng,
                          std::uint64_t source_id = 0);

struct CropWindow {
  std::size_t row0 = 0, rows = 0;
  std::size_t col0 = 0, cols = 0;
  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

/// Top-anchored, horizontally centred window of (90/112)H x (72/112)W,
/// rounded to the nearest pixel.
CropWindow zoom_window(std::size_t height, std::size_t width);

/// Crops every frame to zoom_window and resizes back with corner-aligned
/// bilinear interpolation.
Tensor<float> zoom_frames(const Tensor<float>& frames);

/// With the given probability returns the zoomed clip, otherwise the input.
/// Always draws exactly one uniform from rng.
Clip zoom_augment(const Clip& c, std::mt19937_64& rng, double probability);

}  // namespace echognn
