#include "echognn/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "echognn/io.hpp"

namespace echognn {
namespace {

constexpr double kZoomScale = 1.4;
constexpr double kZoomTopCrop = 0.3;  // fraction of the zoomed vertical semi-axis above row 0

struct Ellipse {
  double cy, cx, ry, rx;
};

Ellipse ellipse_at(const GeneratorParams& p, double area) {
  double rx = std::sqrt(area / (std::numbers::pi * p.aspect));
  double ry = p.aspect * rx;
  double cy = p.center_row;
  if (p.zoomed) {
    rx *= kZoomScale;
    ry *= kZoomScale;
    cy = (1.0 - kZoomTopCrop) * ry;
  }
  return {cy, p.center_col, ry, rx};
}

// Zoomed geometry is anchored on the end-diastolic ellipse so that the crop
// line stays fixed while the ellipse pulsates.
Ellipse frame_ellipse(const GeneratorParams& p, double t) {
  Ellipse e = ellipse_at(p, ellipse_area(p, t));
  if (p.zoomed) e.cy = ellipse_at(p, p.base_area).cy;
  return e;
}

}  // namespace

double ellipse_area(const GeneratorParams& p, double t) {
  const double s = std::sin(2.0 * std::numbers::pi * t / p.period + p.phase);
  return p.base_area * (1.0 - p.pulsation_depth * (1.0 + s) / 2.0);
}

double ef_from_areas(double area_ed, double area_es) {
  return 100.0 * (1.0 - std::pow(area_es / area_ed, 1.5));
}

double depth_for_ef(double ef) {
  return 1.0 - std::pow(1.0 - ef / 100.0, 2.0 / 3.0);
}

void GeneratorParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("generator: " + what); };
  if (!(period >= 4.0)) fail("period must be >= 4 frames");
  if (!(pulsation_depth > 0.0 && pulsation_depth < 1.0)) fail("pulsation depth must be in (0,1)");
  const double ef = ef_from_areas(1.0, 1.0 - pulsation_depth);
  if (!(ef > 5.0 && ef < 85.0)) fail("pulsation depth gives EF outside (5,85)");
  if (!(base_area > 0.0) || !(aspect > 0.0)) fail("base area and aspect must be positive");
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
  if (height == 0 || width == 0) fail("empty frame size");
  if (double(frames) < period) fail("video shorter than one period");
  const Ellipse e = ellipse_at(*this, base_area);
  const bool cols_ok = e.cx - e.rx >= 0.0 && e.cx + e.rx <= double(width);
  const bool bottom_ok = e.cy + e.ry <= double(height);
  const bool top_ok = zoomed || e.cy - e.ry >= 0.0;
  if (!(cols_ok && bottom_ok && top_ok)) fail("ellipse exceeds the frame bounds");
}

CycleLabels analytic_labels(const GeneratorParams& p) {
  const std::size_t span =
      std::min<std::size_t>(p.frames, std::size_t(std::ceil(p.period)));
  CycleLabels out;
  double best_max = -1.0, best_min = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < span; ++t) {
    const double a = ellipse_area(p, double(t));
    if (a > best_max) best_max = a, out.ed_index = std::uint32_t(t);
    if (a < best_min) best_min = a, out.es_index = std::uint32_t(t);
  }
  out.ef = ef_from_areas(best_max, best_min);
  return out;
}

std::vector<float> render_clean_frame(const GeneratorParams& p, std::size_t t) {
  const Ellipse e = frame_ellipse(p, double(t));
  const double r_min = std::min(e.rx, e.ry);
  constexpr double kHalfDiagonal = 0.7072;
  constexpr int kSub = 8;
  std::vector<float> px(p.height * p.width, 0.0f);
  for (std::size_t r = 0; r < p.height; ++r)
    for (std::size_t c = 0; c < p.width; ++c) {
      const double dy = (double(r) + 0.5 - e.cy) / e.ry;
      const double dx = (double(c) + 0.5 - e.cx) / e.rx;
      const double s = std::sqrt(dy * dy + dx * dx);
      // The gap between the s-scaled and unit ellipses is at least |1-s|*r_min.
      if ((1.0 - s) * r_min > kHalfDiagonal) {
        px[r * p.width + c] = 1.0f;
        continue;
      }
      if ((s - 1.0) * r_min > kHalfDiagonal) continue;
      int inside = 0;
      for (int i = 0; i < kSub; ++i)
        for (int j = 0; j < kSub; ++j) {
          const double y = (double(r) + (i + 0.5) / kSub - e.cy) / e.ry;
          const double x = (double(c) + (j + 0.5) / kSub - e.cx) / e.rx;
          inside += (y * y + x * x <= 1.0);
        }
      px[r * p.width + c] = float(double(inside) / (kSub * kSub));
    }
  return px;
}

Video generate_video(const GeneratorParams& params, std::uint64_t seed) {
  params.validate();
  const CycleLabels labels = analytic_labels(params);
  Video v;
  v.frames = Tensor<float>({params.frames, params.height, params.width});
  v.ef = float(labels.ef);
  v.es_index = labels.es_index;
  v.ed_index = labels.ed_index;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t plane = params.height * params.width;
  for (std::size_t t = 0; t < params.frames; ++t) {
    const auto clean = render_clean_frame(params, t);
    float* dst = v.frames.raw() + t * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double val = double(clean[i]) + params.noise_std * noise(rng);
      dst[i] = float(std::clamp(val, 0.0, 1.0));
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw FormatError("unknown split '" + s + "'");
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t id) {
  std::uint64_t z = (seed ^ id) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t below40_count(std::size_t n, double fraction) {
  return std::size_t(std::llround(double(n) * fraction));
}

GeneratorParams draw_params(const DatasetSpec& spec, std::uint64_t seed, std::uint64_t id,
                            bool below40) {
  std::mt19937_64 rng(sample_seed(seed, id));
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  GeneratorParams p;
  p.height = spec.height;
  p.width = spec.width;
  p.noise_std = spec.noise_std;
  p.period = uni(spec.period_min, spec.period_max);
  p.frames = std::uniform_int_distribution<std::size_t>(spec.frames_min, spec.frames_max)(rng);
  p.frames = std::max<std::size_t>(p.frames, std::size_t(std::ceil(p.period)));
  p.phase = uni(0.0, 2.0 * std::numbers::pi);
  // Area ranges are given for the 32x32 profile and scale with the frame.
  const double scale = double(std::min(spec.height, spec.width)) / 32.0;
  p.base_area = uni(spec.base_area_min, spec.base_area_max) * scale * scale;
  p.aspect = uni(spec.aspect_min, spec.aspect_max);
  p.center_row = double(spec.height) / 2.0 + uni(-spec.center_jitter, spec.center_jitter) * scale;
  p.center_col = double(spec.width) / 2.0 + uni(-spec.center_jitter, spec.center_jitter) * scale;
  p.zoomed = uni(0.0, 1.0) < spec.zoomed_fraction;
  // Sampled extrema only shrink the EF, so the EF<40 stratum never needs a
  // redraw; the upper stratum may straddle 40 and is redrawn until it doesn't.
  for (int attempt = 0;; ++attempt) {
    const double target = below40 ? uni(spec.ef_min, 40.0) : uni(40.0, spec.ef_max);
    p.pulsation_depth = depth_for_ef(target);
    const double ef = analytic_labels(p).ef;
    if ((ef < 40.0) == below40) break;
    if (attempt > 1000) throw ConfigError("cannot realize the requested EF stratum");
  }
  return p;
}

// ---------------------------------------------------------------------------

std::string encode_video(const Video& v) {
  if (v.frames.rank() != 3) throw ShapeError("video frames must be [T,H,W]");
  io::ByteWriter w;
  w.put_array("EGNV", 4);
  w.put<std::uint32_t>(kVideoFormatVersion);
  for (std::size_t d = 0; d < 3; ++d) w.put<std::uint32_t>(std::uint32_t(v.frames.shape()[d]));
  w.put<float>(v.ef);
  w.put<std::uint32_t>(v.es_index);
  w.put<std::uint32_t>(v.ed_index);
  w.put_array(v.frames.raw(), v.frames.size());
  return w.bytes();
}

Video decode_video(std::string_view bytes) {
  io::ByteReader r(bytes);
  char magic[4];
  r.get_array(magic, 4);
  if (std::string_view(magic, 4) != "EGNV") throw FormatError("bad video magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kVideoFormatVersion)
    throw FormatError("unsupported video format version " + std::to_string(version));
  const std::size_t T = r.get<std::uint32_t>();
  const std::size_t H = r.get<std::uint32_t>();
  const std::size_t W = r.get<std::uint32_t>();
  Video v;
  v.ef = r.get<float>();
  v.es_index = r.get<std::uint32_t>();
  v.ed_index = r.get<std::uint32_t>();
  const std::size_t n = T * H * W;
  if (r.remaining() != n * sizeof(float))
    throw FormatError("video payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(n * sizeof(float)));
  v.frames = Tensor<float>({T, H, W});
  r.get_array(v.frames.raw(), n);
  return v;
}

void write_video(const std::filesystem::path& path, const Video& v) {
  io::write_file(path, encode_video(v));
}

Video read_video(const std::filesystem::path& path) {
  return decode_video(io::read_file(path));
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                    const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "id,path,split,ef,es,ed\n";
  char buf[64];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%.9g", double(e.ef));
    out << e.id << ',' << e.path << ',' << to_string(e.split) << ',' << buf << ',' << e.es
        << ',' << e.ed << '\n';
  }
  io::write_file(path, out.str());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<ManifestEntry> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "id,path,split,ef,es,ed") throw FormatError("unexpected manifest header: " + line);
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw FormatError("manifest row has " + std::to_string(f.size()) + " fields");
    try {
      ManifestEntry e;
      e.id = std::stoull(f[0]);
      e.path = f[1];
      e.split = parse_split(f[2]);
      e.ef = std::stof(f[3]);
      e.es = std::uint32_t(std::stoul(f[4]));
      e.ed = std::uint32_t(std::stoul(f[5]));
      out.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw FormatError("bad manifest row: " + line);
    }
  }
  if (!header_seen) throw FormatError("manifest has no header");
  return out;
}

std::vector<ManifestEntry> generate_dataset(const DatasetSpec& spec, std::uint64_t seed,
                                            const std::filesystem::path& dir, unsigned workers,
                                            const std::string& header_comment) {
  struct Job {
    std::uint64_t id;
    Split split;
    bool below40;
  };
  std::vector<Job> jobs;
  std::uint64_t next_id = 0;
  const std::pair<Split, std::size_t> splits[] = {
      {Split::train, spec.train}, {Split::val, spec.val}, {Split::test, spec.test}};
  for (const auto& [split, n] : splits) {
    const std::size_t k = std::min(n, below40_count(n, spec.below40_fraction));
    std::vector<bool> strata(n, false);
    std::fill_n(strata.begin(), k, true);
    std::mt19937_64 rng(sample_seed(seed ^ 0x5bd1e995ULL, std::uint64_t(split)));
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < n; ++i) jobs.push_back({next_id++, split, strata[i]});
  }

  std::error_code ec;
  std::filesystem::create_directories(dir / "videos", ec);
  if (ec) throw IoError("cannot create " + (dir / "videos").string() + ": " + ec.message());

  std::vector<ManifestEntry> entries(jobs.size());
  std::atomic<std::size_t> cursor{0};
  std::vector<std::exception_ptr> errors(std::max(1u, workers));
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i; (i = cursor.fetch_add(1)) < jobs.size();) {
        const Job& job = jobs[i];
        const GeneratorParams p = draw_params(spec, seed, job.id, job.below40);
        const Video v = generate_video(p, sample_seed(seed, job.id) ^ 0xa5a5a5a5ULL);
        char name[32];
        std::snprintf(name, sizeof name, "videos/%06llu.egnv", (unsigned long long)job.id);
        write_video(dir / name, v);
        entries[i] = {job.id, name, job.split, v.ef, v.es_index, v.ed_index};
      }
    } catch (...) {
      errors[w] = std::current_exception();
      cursor = jobs.size();
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  write_manifest(dir / "manifest.csv", entries, header_comment);
  return entries;
}

std::vector<LabeledVideo> load_split(const std::filesystem::path& dir, Split split) {
  std::vector<LabeledVideo> out;
  for (const auto& e : read_manifest(dir / "manifest.csv")) {
    if (e.split != split) continue;
    Video v = read_video(dir / e.path);
    if (v.ef != e.ef || v.es_index != e.es || v.ed_index != e.ed)
      throw FormatError("labels in " + e.path + " disagree with the manifest");
    out.push_back({e.id, std::move(v)});
  }
  return out;
}

}  // namespace echognn
