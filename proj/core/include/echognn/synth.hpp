#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "echognn/tensor.hpp"

namespace echognn {

/// One echo-like clip with its labels. Frames are [T_total, H, W] in [0,1].
struct Video {
  Tensor<float> frames;
  float ef = 0.0f;  // percent
  std::uint32_t es_index = 0;
  std::uint32_t ed_index = 0;
  std::string view_tag = "AP4-synthetic";

  std::size_t frame_count() const { return frames.rank() ? frames.shape()[0] : 0; }
  std::size_t height() const { return frames.rank() ? frames.shape()[1] : 0; }
  std::size_t width() const { return frames.rank() ? frames.shape()[2] : 0; }

  friend bool operator==(const Video&, const Video&) = default;
};

/// Geometry and dynamics of one pulsating-ellipse video.
///
/// Area follows a(t) = base_area * (1 - m * (1 + sin(2 pi t / period + phase)) / 2),
/// so end-diastole (max area) sits where the sine is -1 and end-systole where
/// it is +1.
struct GeneratorParams {
  double base_area = 200.0;        // px^2 at end-diastole
  double pulsation_depth = 0.4;    // m in (0,1)
  double period = 24.0;            // frames
  double phase = 0.0;              // radians
  double noise_std = 0.05;
  bool zoomed = false;
  double center_row = 16.0;
  double center_col = 16.0;
  double aspect = 1.3;             // vertical / horizontal semi-axis
  std::size_t frames = 64;         // T_total
  std::size_t height = 32;
  std::size_t width = 32;

  /// Throws ConfigError when the period, depth or geometry are invalid.
  void validate() const;
};

/// a(t) in px^2.
double ellipse_area(const GeneratorParams& p, double t);

/// 100 * (1 - (a_es / a_ed)^1.5), the volume proxy V ~ a^(3/2).
double ef_from_areas(double area_ed, double area_es);

/// Labels implied by the parameters: ED/ES are the max/min-area frames over
/// the first period, EF uses the sampled areas at those frames.
struct CycleLabels {
  std::uint32_t ed_index = 0;
  std::uint32_t es_index = 0;
  double ef = 0.0;
};
CycleLabels analytic_labels(const GeneratorParams& p);

/// Pulsation depth giving the requested continuous-time EF.
double depth_for_ef(double ef);

/// Noise-free rendering of frame t (anti-aliased coverage in [0,1]).
std::vector<float> render_clean_frame(const GeneratorParams& p, std::size_t t);

/// Deterministic in (params, seed).
Video generate_video(const GeneratorParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Datasets

enum class Split { train, val, test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::uint64_t id = 0;
  std::string path;  // relative to the dataset directory
  Split split = Split::train;
  float ef = 0.0f;
  std::uint32_t es = 0;
  std::uint32_t ed = 0;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Ranges from which per-sample generator parameters are drawn.
struct DatasetSpec {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  double below40_fraction = 0.127;  // share of each split with EF < 40
  double zoomed_fraction = 0.0;
  double ef_min = 10.0;
  double ef_max = 80.0;
  double period_min = 16.0;
  double period_max = 32.0;
  std::size_t frames_min = 40;
  std::size_t frames_max = 120;
  double noise_std = 0.05;
  double base_area_min = 170.0;
  double base_area_max = 230.0;
  double aspect_min = 1.1;
  double aspect_max = 1.5;
  double center_jitter = 1.0;  // px
  std::size_t height = 32;
  std::size_t width = 32;
};

/// Number of EF<40 samples for a split of n (nearest integer of n * fraction).
std::size_t below40_count(std::size_t n, double fraction);

/// Parameters for sample `id` of the given stratum; deterministic in (spec, seed, id).
GeneratorParams draw_params(const DatasetSpec& spec, std::uint64_t seed, std::uint64_t id,
                            bool below40);

/// splitmix64(seed ^ id): per-sample seed.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t id);

/// Writes videos/<id>.egnv and manifest.csv under `dir`; returns the manifest.
/// `header_comment` (without '#') is written as the first manifest line when
/// non-empty. Generation uses `workers` threads; output is independent of it.
std::vector<ManifestEntry> generate_dataset(const DatasetSpec& spec, std::uint64_t seed,
                                            const std::filesystem::path& dir,
                                            unsigned workers = 1,
                                            const std::string& header_comment = "");

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                    const std::string& header_comment = "");
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Container: "EGNV", u32 version, u32 T, H, W, f32 ef, u32 es, u32 ed, T*H*W f32.

inline constexpr std::uint32_t kVideoFormatVersion = 1;

std::string encode_video(const Video& v);
Video decode_video(std::string_view bytes);
void write_video(const std::filesystem::path& path, const Video& v);
Video read_video(const std::filesystem::path& path);

struct LabeledVideo {
  std::uint64_t id = 0;
  Video video;
};

/// Loads every video of `split` listed in `dir`/manifest.csv, in manifest order.
std::vector<LabeledVideo> load_split(const std::filesystem::path& dir, Split split);

}  // namespace echognn
