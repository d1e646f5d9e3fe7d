#include "echognn/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace echognn {
namespace {

void require_length(std::size_t t_fixed) {
  if (t_fixed == 0) throw ContractError("T_fixed must be >= 1");
}

}  // namespace

Clip extract_clip(const Video& v, std::size_t start, std::size_t t_fixed,
                  std::uint64_t source_id) {
  require_length(t_fixed);
  const std::size_t T = v.frame_count(), H = v.height(), W = v.width();
  if (start > T) throw ContractError("clip start beyond the video");
  Clip c;
  c.frames = Tensor<float>({t_fixed, H, W});
  c.source_id = source_id;
  c.start_index = start;
  const std::size_t available = std::min(t_fixed, T - start);
  c.pad_count = t_fixed - available;
  std::copy_n(v.frames.raw() + start * H * W, available * H * W, c.frames.raw());
  return c;
}

Clip sample_train_clip(const Video& v, std::size_t t_fixed, std::mt19937_64& rng,
                       std::uint64_t source_id) {
  require_length(t_fixed);
  const std::size_t T = v.frame_count();
  if (T <= t_fixed) return extract_clip(v, 0, t_fixed, source_id);
  std::uniform_int_distribution<std::size_t> start(0, T - t_fixed);
  return extract_clip(v, start(rng), t_fixed, source_id);
}

std::vector<std::size_t> test_clip_starts(std::size_t t_total, std::size_t t_fixed) {
  require_length(t_fixed);
  if (t_total <= t_fixed) return {0};
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < t_total; s += t_fixed)
    starts.push_back(std::min(s, t_total - t_fixed));
  return starts;
}

std::vector<Clip> make_test_clips(const Video& v, std::size_t t_fixed, std::uint64_t source_id) {
  std::vector<Clip> clips;
  for (std::size_t s : test_clip_starts(v.frame_count(), t_fixed))
    clips.push_back(extract_clip(v, s, t_fixed, source_id));
  return clips;
}

std::optional<std::size_t> clip_local_index(const Clip& c, std::size_t video_index) {
  const std::size_t real = c.length() - c.pad_count;
  if (video_index < c.start_index || video_index >= c.start_index + real) return std::nullopt;
  return video_index - c.start_index;
}

Clip sample_pretrain_clip(const Video& v, std::size_t t_fixed, std::mt19937_64& rng,
                          std::uint64_t source_id) {
  require_length(t_fixed);
  const std::size_t T = v.frame_count();
  const std::size_t latest = T > t_fixed ? T - t_fixed : 0;
  const std::size_t first_event = std::min<std::size_t>(v.es_index, v.ed_index);
  std::uniform_int_distribution<std::size_t> start(0, std::min(latest, first_event));
  return extract_clip(v, start(rng), t_fixed, source_id);
}

CropWindow zoom_window(std::size_t height, std::size_t width) {
  CropWindow w;
  w.rows = std::max<std::size_t>(1, std::size_t(std::lround(double(height) * 90.0 / 112.0)));
  w.cols = std::max<std::size_t>(1, std::size_t(std::lround(double(width) * 72.0 / 112.0)));
  w.row0 = 0;
  w.col0 = (width - w.cols) / 2;
  return w;
}

Tensor<float> zoom_frames(const Tensor<float>& frames) {
  if (frames.rank() != 3) throw ShapeError("zoom_frames expects [T,H,W]");
  const std::size_t T = frames.shape()[0], H = frames.shape()[1], W = frames.shape()[2];
  const CropWindow win = zoom_window(H, W);
  // Corner-aligned: output corners land exactly on the window's corner pixels.
  auto source = [](std::size_t i, std::size_t out_n, std::size_t offset, std::size_t in_n) {
    if (out_n == 1) return double(offset);
    return double(offset) + double(i) * double(in_n - 1) / double(out_n - 1);
  };
  Tensor<float> out(frames.shape());
  for (std::size_t t = 0; t < T; ++t) {
    const float* src = frames.raw() + t * H * W;
    float* dst = out.raw() + t * H * W;
    for (std::size_t i = 0; i < H; ++i) {
      const double y = source(i, H, win.row0, win.rows);
      const std::size_t y0 = std::size_t(std::floor(y));
      const std::size_t y1 = std::min(y0 + 1, win.row0 + win.rows - 1);
      const float fy = float(y - double(y0));
      for (std::size_t j = 0; j < W; ++j) {
        const double x = source(j, W, win.col0, win.cols);
        const std::size_t x0 = std::size_t(std::floor(x));
        const std::size_t x1 = std::min(x0 + 1, win.col0 + win.cols - 1);
        const float fx = float(x - double(x0));
        const float a = src[y0 * W + x0], b = src[y0 * W + x1];
        const float c = src[y1 * W + x0], d = src[y1 * W + x1];
        const float top = a + (b - a) * fx;
        const float bottom = c + (d - c) * fx;
        dst[i * W + j] = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

Clip zoom_augment(const Clip& c, std::mt19937_64& rng, double probability) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (!(u < probability)) return c;
  Clip z = c;
  z.frames = zoom_frames(c.frames);
  // Zero padding must stay exactly zero.
  const std::size_t plane = c.frames.size() / std::max<std::size_t>(1, c.length());
  std::fill(z.frames.raw() + (c.length() - c.pad_count) * plane, z.frames.raw() + z.frames.size(),
            0.0f);
  return z;
}

}  // namespace echognn
