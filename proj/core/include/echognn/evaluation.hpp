#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "echognn/model.hpp"
#include "echognn/synth.hpp"

namespace echognn {

/// Eval-mode pass over all test-time clips of one video, as one batch.
struct VideoPass {
  std::vector<double> clip_ef;       // percent, unclamped, one per clip
  std::vector<double> node_weights;  // first clip, [T]
  std::vector<double> adjacency;     // first clip, [T*T], A[k*T+s] = a_{k,s}
  std::size_t frames = 0;
  std::size_t pad_count = 0;         // of the first clip

  /// Arithmetic mean of clip_ef.
  double mean_ef() const;
};
template <typename Real>
VideoPass run_video(EchoGnn<Real>& model, const Video& v);

/// Mean EF (percent, unclamped) over the test-time clips of each video.
/// Each video is its own batch, so results do not depend on video order.
template <typename Real>
std::vector<double> predict_ef_multiclip(EchoGnn<Real>& model,
                                         const std::vector<LabeledVideo>& videos);

double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred);

/// 1 - SS_res / SS_tot. Throws ContractError for n < 2 or constant truth.
double r2_score(const std::vector<double>& truth, const std::vector<double>& pred);

/// Binary F1 with positive class EF < 40 on both truth and prediction.
/// Empty when no true positive class exists.
std::optional<double> f1_below_40(const std::vector<double>& truth,
                                  const std::vector<double>& pred);

enum class ThresholdRule {
  /// Longest contiguous run above (min+max)/2; its first and last frame.
  run_boundary,
  /// Peak (first argmax) of each of the first two runs above (min+max)/2.
  /// Matches weights trained towards bumps at ES and ED.
  leading_peaks,
};
std::string to_string(ThresholdRule r);
ThresholdRule parse_threshold_rule(const std::string& s);

struct Extraction {
  bool periodic = false;
  std::size_t a = 0;  // unlabeled pair, a <= b
  std::size_t b = 0;
};

/// periodic = max(w) - mean(w) > tau; indices are only meaningful when periodic.
/// Throws ContractError for fewer than 4 weights.
Extraction extract_es_ed(const std::vector<double>& w, ThresholdRule rule, double tau = 0.2);

/// Absolute errors (es, ed) for the assignment of {a, b} to (es, ed) with the
/// smaller total distance; ties keep a->es.
std::pair<double, double> assign_pair(std::size_t es, std::size_t ed, std::size_t a,
                                      std::size_t b);

struct AfdResult {
  std::optional<double> es;
  std::optional<double> ed;
  std::size_t included = 0;
};
/// Mean assigned distances over the samples with a value in `estimates`.
AfdResult afd(const std::vector<std::pair<std::size_t, std::size_t>>& truth,
              const std::vector<std::optional<std::pair<std::size_t, std::size_t>>>& estimates);

struct SampleRecord {
  std::uint64_t id = 0;
  double true_ef = 0.0;
  double pred_ef = 0.0;  // clamped to [0, 100]
  std::size_t true_es = 0;
  std::size_t true_ed = 0;
  bool periodic = false;
  std::optional<std::size_t> est_a;  // assigned to ES
  std::optional<std::size_t> est_b;  // assigned to ED
  double max_minus_mean = 0.0;
  double entropy = 0.0;  // normalized entropy of the first clip's weights
};

struct EvalOptions {
  ThresholdRule rule = ThresholdRule::run_boundary;
  double tau = 0.2;
};

struct EvalReport {
  double mae = 0.0;
  std::optional<double> r2;  // empty when truth is constant or n < 2
  std::optional<double> f1_below_40;
  std::optional<double> afd_es;
  std::optional<double> afd_ed;
  std::size_t periodic_count = 0;
  std::size_t total_count = 0;
  std::string rule;
  double tau = 0.2;
  std::vector<SampleRecord> samples;
};

/// Full evaluation: multi-clip EF, metrics, periodicity triage and aFD on
/// the first test clip's node weights (clip-local indices).
template <typename Real>
EvalReport evaluate(EchoGnn<Real>& model, const std::vector<LabeledVideo>& videos,
                    const EvalOptions& options = {});

/// Same metrics from precomputed pieces (no model).
EvalReport summarize(std::vector<SampleRecord> samples, const EvalOptions& options);

/// Artifacts. `provenance` is recorded verbatim (config hash, seed, mode).
std::string report_json(const EvalReport& r, const std::string& provenance);
std::string samples_csv(const EvalReport& r, const std::string& provenance);
std::string scatter_csv(const EvalReport& r, const std::string& provenance);
std::string scatter_svg(const EvalReport& r, const std::string& provenance);

/// Line plot of node weights over frames, with the triage verdict as title.
std::string weights_svg(const std::vector<double>& w, const std::string& title,
                        const std::string& provenance);

}  // namespace echognn
