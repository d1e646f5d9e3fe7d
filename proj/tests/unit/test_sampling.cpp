#include <gtest/gtest.h>

#include "echognn/sampling.hpp"
#include "support.hpp"

using namespace echognn;
using testing_support::rand_int;
using testing_support::Rng;

namespace {

// Frame t of the video is filled with the value t + 1 so clips are easy to read.
Video ramp(std::size_t frames, std::size_t h = 4, std::size_t w = 4) {
  Video v;
  v.frames = Tensor<float>({frames, h, w});
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < h * w; ++i) v.frames[t * h * w + i] = float(t + 1);
  return v;
}

float frame_value(const Clip& c, std::size_t j) {
  const std::size_t hw = c.frames.shape()[1] * c.frames.shape()[2];
  return c.frames[j * hw];
}

}  // namespace

TEST(TrainClip, StartRange) {
  Rng rng(1);
  const Video v = ramp(100);
  std::size_t lo = 100, hi = 0;
  for (int i = 0; i < 2000; ++i) {
    const Clip c = sample_train_clip(v, 64, rng);
    EXPECT_EQ(c.pad_count, 0u);
    EXPECT_EQ(frame_value(c, 0), float(c.start_index + 1));
    lo = std::min(lo, c.start_index);
    hi = std::max(hi, c.start_index);
  }
  EXPECT_EQ(lo, 0u);
  EXPECT_EQ(hi, 36u);
}

TEST(TrainClip, ShortVideoIsPadded) {
  Rng rng(2);
  const Clip c = sample_train_clip(ramp(50), 64, rng);
  EXPECT_EQ(c.start_index, 0u);
  EXPECT_EQ(c.pad_count, 14u);
  for (std::size_t j = 0; j < 50; ++j) EXPECT_EQ(frame_value(c, j), float(j + 1));
  for (std::size_t j = 50; j < 64; ++j)
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(c.frames[j * 16 + i], 0.0f);
}

TEST(TrainClip, ExactLengthForcesZero) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_train_clip(ramp(64), 64, rng).start_index, 0u);
}

TEST(TrainClip, StartsAreUniform) {
  // Chi-square over 37 equiprobable starts; 58.62 is the 0.99 quantile for 36 dof.
  Rng rng(4);
  const Video v = ramp(100, 1, 1);
  std::vector<double> counts(37, 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[sample_train_clip(v, 64, rng).start_index] += 1;
  double chi2 = 0.0;
  const double expected = double(n) / 37.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 58.62);
}

TEST(TestClips, HandEnumerations) {
  using S = std::vector<std::size_t>;
  EXPECT_EQ(test_clip_starts(150, 64), (S{0, 64, 86}));
  EXPECT_EQ(test_clip_starts(128, 64), (S{0, 64}));
  EXPECT_EQ(test_clip_starts(30, 64), (S{0}));
  EXPECT_EQ(test_clip_starts(64, 64), (S{0}));
  EXPECT_EQ(test_clip_starts(65, 64), (S{0, 1}));
  const auto clips = make_test_clips(ramp(150), 64, 7);
  ASSERT_EQ(clips.size(), 3u);
  EXPECT_EQ(clips[2].start_index, 86u);
  EXPECT_EQ(clips[2].source_id, 7u);
  for (const auto& c : clips) EXPECT_EQ(c.pad_count, 0u);
  const auto short_clips = make_test_clips(ramp(30), 64);
  ASSERT_EQ(short_clips.size(), 1u);
  EXPECT_EQ(short_clips[0].pad_count, 34u);
}

TEST(Property, TestClipsCoverTheVideo) {
  Rng rng(5);
  for (int it = 0; it < 200; ++it) {
    const std::size_t total = rand_int(rng, 1, 300), fixed = rand_int(rng, 1, 80);
    const auto starts = test_clip_starts(total, fixed);
    ASSERT_FALSE(starts.empty());
    ASSERT_EQ(starts[0], 0u);
    const std::size_t last_valid = total >= fixed ? total - fixed : 0;
    std::vector<bool> covered(total, false);
    for (std::size_t s : starts) {
      ASSERT_LE(s, last_valid);
      for (std::size_t t = s; t < std::min(total, s + fixed); ++t) covered[t] = true;
    }
    for (std::size_t t = 0; t < total; ++t) ASSERT_TRUE(covered[t]);
  }
}

TEST(Property, ClipPaddingIsZero) {
  Rng rng(6);
  for (int it = 0; it < 100; ++it) {
    const std::size_t total = rand_int(rng, 1, 40), fixed = rand_int(rng, 1, 40);
    const Clip c = sample_train_clip(ramp(total, 2, 2), fixed, rng);
    ASSERT_LT(c.pad_count, fixed);
    ASSERT_EQ(c.length(), fixed);
    for (std::size_t j = fixed - c.pad_count; j < fixed; ++j)
      for (std::size_t i = 0; i < 4; ++i) ASSERT_EQ(c.frames[j * 4 + i], 0.0f);
    for (std::size_t j = 0; j < fixed - c.pad_count; ++j)
      ASSERT_EQ(frame_value(c, j), float(c.start_index + j + 1));
  }
}

TEST(ClipIndex, LocalPositions) {
  const Clip c = extract_clip(ramp(50), 10, 20);
  EXPECT_EQ(clip_local_index(c, 10), 0u);
  EXPECT_EQ(clip_local_index(c, 29), 19u);
  EXPECT_FALSE(clip_local_index(c, 9));
  EXPECT_FALSE(clip_local_index(c, 30));
  const Clip padded = extract_clip(ramp(15), 0, 20);
  EXPECT_FALSE(clip_local_index(padded, 16));  // inside the zero padding
}

TEST(PretrainClip, StartsBeforeFirstEvent) {
  Rng rng(7);
  Video v = ramp(100);
  v.es_index = 30;
  v.ed_index = 18;
  for (int i = 0; i < 500; ++i) {
    const Clip c = sample_pretrain_clip(v, 32, rng);
    EXPECT_LE(c.start_index, 18u);
  }
}

TEST(Zoom, PaperWindow) {
  EXPECT_EQ(zoom_window(112, 112), (CropWindow{0, 90, 20, 72}));
  const CropWindow desk = zoom_window(32, 32);
  EXPECT_EQ(desk.rows, 26u);
  EXPECT_EQ(desk.cols, 21u);
  EXPECT_EQ(desk.row0, 0u);
  EXPECT_EQ(desk.col0, 5u);
}

TEST(Zoom, ProbabilityZeroIsIdentity) {
  Rng rng(8), twin(8);
  Clip c = extract_clip(ramp(40, 8, 8), 0, 32);
  c.frames[5] = 0.25f;
  const Clip out = zoom_augment(c, rng, 0.0);
  EXPECT_EQ(out.frames, c.frames);
  twin.discard(1);
  EXPECT_EQ(rng(), twin());  // exactly one draw either way
}

TEST(Zoom, ConstantFramesStayConstant) {
  Tensor<float> f({3, 8, 8}, 0.7f);
  const Tensor<float> z = zoom_frames(f);
  for (float v : z.data()) EXPECT_EQ(v, 0.7f);
}

TEST(Zoom, CornersMapToWindowCorners) {
  // Pixel value = 100 * row + col; bilinear resampling reproduces the window's
  // corner pixels at the output corners.
  const std::size_t h = 112, w = 112;
  Tensor<float> f({1, h, w});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) f[r * w + c] = float(100 * r + c);
  const Tensor<float> z = zoom_frames(f);
  EXPECT_FLOAT_EQ(z[0], 20.0f);
  EXPECT_FLOAT_EQ(z[w - 1], 91.0f);
  EXPECT_FLOAT_EQ(z[(h - 1) * w], 8920.0f);
  EXPECT_FLOAT_EQ(z[(h - 1) * w + w - 1], 8991.0f);
}

TEST(Zoom, PaddingStaysZero) {
  Rng rng(9);
  const Clip c = extract_clip(ramp(10, 8, 8), 0, 16);
  const Clip z = zoom_augment(c, rng, 1.0);
  for (std::size_t j = 10; j < 16; ++j)
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(z.frames[j * 64 + i], 0.0f);
  EXPECT_EQ(z.pad_count, 6u);
}
