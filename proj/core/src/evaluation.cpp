#include "echognn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "echognn/sampling.hpp"
#include "echognn/trainer.hpp"
#include "json.hpp"

namespace echognn {

double VideoPass::mean_ef() const {
  if (clip_ef.empty()) throw ContractError("video pass without clips");
  double s = 0.0;
  for (double e : clip_ef) s += e;
  return s / double(clip_ef.size());
}

template <typename Real>
VideoPass run_video(EchoGnn<Real>& model, const Video& v) {
  const bool was_training = model.training();
  model.set_training(false);
  const std::vector<Clip> clips = make_test_clips(v, model.config().frames);
  ModelOutput<Real> out;
  try {
    out = model.forward(stack_clips<Real>(clips));
  } catch (...) {
    model.set_training(was_training);
    throw;
  }
  model.set_training(was_training);

  VideoPass p;
  const std::size_t T = model.config().frames;
  p.frames = T;
  p.pad_count = clips.front().pad_count;
  const Tensor<Real>& ef = out.prediction.ef.value();
  for (std::size_t i = 0; i < clips.size(); ++i) p.clip_ef.push_back(100.0 * double(ef[i]));
  const Tensor<Real>& w = out.graph.node_weights.value();
  const Tensor<Real>& a = out.graph.adjacency.value();
  p.node_weights.assign(w.raw(), w.raw() + T);
  p.adjacency.assign(a.raw(), a.raw() + T * T);
  return p;
}

template <typename Real>
std::vector<double> predict_ef_multiclip(EchoGnn<Real>& model,
                                         const std::vector<LabeledVideo>& videos) {
  std::vector<double> out;
  out.reserve(videos.size());
  for (const auto& lv : videos) out.push_back(run_video(model, lv.video).mean_ef());
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

void require_aligned(const std::vector<double>& a, const std::vector<double>& b, const char* what) {
  if (a.size() != b.size())
    throw ContractError(std::string(what) + ": " + std::to_string(a.size()) + " targets vs " +
                        std::to_string(b.size()) + " predictions");
}

}  // namespace

double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred) {
  require_aligned(truth, pred, "mae");
  if (truth.empty()) throw ContractError("mae of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s / double(truth.size());
}

double r2_score(const std::vector<double>& truth, const std::vector<double>& pred) {
  require_aligned(truth, pred, "r2_score");
  if (truth.size() < 2) throw ContractError("r2_score needs at least 2 samples");
  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= double(truth.size());
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (tot == 0.0) throw ContractError("r2_score undefined for constant targets");
  return 1.0 - res / tot;
}

std::optional<double> f1_below_40(const std::vector<double>& truth,
                                  const std::vector<double>& pred) {
  require_aligned(truth, pred, "f1_below_40");
  if (truth.empty()) throw ContractError("f1 of an empty set");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] < 40.0, p = pred[i] < 40.0;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  if (tp + fn == 0) return std::nullopt;
  return 2.0 * double(tp) / double(2 * tp + fp + fn);
}

std::string to_string(ThresholdRule r) {
  return r == ThresholdRule::run_boundary ? "run_boundary" : "leading_peaks";
}

ThresholdRule parse_threshold_rule(const std::string& s) {
  if (s == "run_boundary") return ThresholdRule::run_boundary;
  if (s == "leading_peaks") return ThresholdRule::leading_peaks;
  throw ConfigError("unknown threshold rule '" + s + "' (expected run_boundary or leading_peaks)");
}

Extraction extract_es_ed(const std::vector<double>& w, ThresholdRule rule, double tau) {
  if (w.size() < 4) throw ContractError("extract_es_ed needs at least 4 node weights");
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= double(w.size());
  Extraction e;
  if (!(*hi - mean > tau)) return e;
  const double thr = (*lo + *hi) / 2.0;

  // Maximal runs of frames strictly above the threshold.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t j = 0; j < w.size();) {
    if (w[j] > thr) {
      std::size_t k = j;
      while (k + 1 < w.size() && w[k + 1] > thr) ++k;
      runs.emplace_back(j, k);
      j = k + 1;
    } else {
      ++j;
    }
  }
  if (rule == ThresholdRule::run_boundary) {
    auto best = runs.front();
    for (const auto& r : runs)
      if (r.second - r.first > best.second - best.first) best = r;
    e.periodic = true;
    e.a = best.first;
    e.b = best.second;
    return e;
  }
  if (runs.size() < 2) return e;
  auto peak = [&](const std::pair<std::size_t, std::size_t>& r) {
    std::size_t arg = r.first;
    for (std::size_t j = r.first; j <= r.second; ++j)
      if (w[j] > w[arg]) arg = j;
    return arg;
  };
  e.periodic = true;
  e.a = peak(runs[0]);
  e.b = peak(runs[1]);
  return e;
}

std::pair<double, double> assign_pair(std::size_t es, std::size_t ed, std::size_t a,
                                      std::size_t b) {
  auto d = [](std::size_t x, std::size_t y) { return x > y ? double(x - y) : double(y - x); };
  const double straight = d(a, es) + d(b, ed);
  const double crossed = d(b, es) + d(a, ed);
  if (crossed < straight) return {d(b, es), d(a, ed)};
  return {d(a, es), d(b, ed)};
}

AfdResult afd(const std::vector<std::pair<std::size_t, std::size_t>>& truth,
              const std::vector<std::optional<std::pair<std::size_t, std::size_t>>>& estimates) {
  if (truth.size() != estimates.size()) throw ContractError("afd: misaligned sample lists");
  AfdResult r;
  double es = 0.0, ed = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!estimates[i]) continue;
    const auto [des, ded] =
        assign_pair(truth[i].first, truth[i].second, estimates[i]->first, estimates[i]->second);
    es += des;
    ed += ded;
    ++r.included;
  }
  if (r.included) {
    r.es = es / double(r.included);
    r.ed = ed / double(r.included);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports

EvalReport summarize(std::vector<SampleRecord> samples, const EvalOptions& options) {
  EvalReport r;
  r.rule = to_string(options.rule);
  r.tau = options.tau;
  r.total_count = samples.size();
  if (samples.empty()) throw ContractError("evaluation over an empty set");
  std::vector<double> truth, pred;
  std::vector<std::pair<std::size_t, std::size_t>> events;
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> est;
  for (const auto& s : samples) {
    truth.push_back(s.true_ef);
    pred.push_back(s.pred_ef);
    events.emplace_back(s.true_es, s.true_ed);
    if (s.periodic && s.est_a && s.est_b) {
      est.emplace_back(std::make_pair(*s.est_a, *s.est_b));
      ++r.periodic_count;
    } else {
      est.emplace_back(std::nullopt);
    }
  }
  r.mae = mean_absolute_error(truth, pred);
  try {
    r.r2 = r2_score(truth, pred);
  } catch (const ContractError&) {
    r.r2.reset();
  }
  r.f1_below_40 = f1_below_40(truth, pred);
  const AfdResult a = afd(events, est);
  r.afd_es = a.es;
  r.afd_ed = a.ed;
  r.samples = std::move(samples);
  return r;
}

template <typename Real>
EvalReport evaluate(EchoGnn<Real>& model, const std::vector<LabeledVideo>& videos,
                    const EvalOptions& options) {
  std::vector<SampleRecord> samples;
  samples.reserve(videos.size());
  for (const auto& lv : videos) {
    const VideoPass p = run_video(model, lv.video);
    SampleRecord s;
    s.id = lv.id;
    s.true_ef = lv.video.ef;
    s.pred_ef = std::clamp(p.mean_ef(), 0.0, 100.0);
    s.true_es = lv.video.es_index;
    s.true_ed = lv.video.ed_index;
    const Extraction e = extract_es_ed(p.node_weights, options.rule, options.tau);
    const GraphStats g = graph_stats(p.node_weights, p.adjacency);
    s.max_minus_mean = g.max_minus_mean;
    s.entropy = g.normalized_entropy;
    s.periodic = e.periodic;
    if (e.periodic) {
      auto d = [](std::size_t x, std::size_t y) { return x > y ? x - y : y - x; };
      const bool crossed = d(e.b, s.true_es) + d(e.a, s.true_ed) < d(e.a, s.true_es) + d(e.b, s.true_ed);
      s.est_a = crossed ? e.b : e.a;
      s.est_b = crossed ? e.a : e.b;
    }
    samples.push_back(std::move(s));
  }
  return summarize(std::move(samples), options);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string opt_csv(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

nlohmann::json opt_json(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

std::string comment_line(const std::string& provenance) { return "# " + provenance + "\n"; }

}  // namespace

std::string report_json(const EvalReport& r, const std::string& provenance) {
  nlohmann::ordered_json j;
  j["provenance"] = provenance;
  j["mae"] = r.mae;
  j["r2"] = opt_json(r.r2);
  j["f1_below_40"] = opt_json(r.f1_below_40);
  j["f1_defined"] = r.f1_below_40.has_value();
  j["afd_es"] = opt_json(r.afd_es);
  j["afd_ed"] = opt_json(r.afd_ed);
  j["periodic_count"] = r.periodic_count;
  j["total_count"] = r.total_count;
  j["threshold_rule"] = r.rule;
  j["tau"] = r.tau;
  auto& arr = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : r.samples) {
    nlohmann::ordered_json o;
    o["id"] = s.id;
    o["true_ef"] = s.true_ef;
    o["pred_ef"] = s.pred_ef;
    o["true_es"] = s.true_es;
    o["true_ed"] = s.true_ed;
    o["periodic"] = s.periodic;
    o["est_es"] = s.est_a ? nlohmann::ordered_json(*s.est_a) : nlohmann::ordered_json(nullptr);
    o["est_ed"] = s.est_b ? nlohmann::ordered_json(*s.est_b) : nlohmann::ordered_json(nullptr);
    o["max_minus_mean"] = s.max_minus_mean;
    o["weight_entropy"] = s.entropy;
    arr.push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

std::string samples_csv(const EvalReport& r, const std::string& provenance) {
  std::string s = comment_line(provenance);
  s += "id,true_ef,pred_ef,true_es,true_ed,periodic,est_es,est_ed,max_minus_mean,weight_entropy\n";
  for (const auto& x : r.samples)
    s += std::to_string(x.id) + "," + fmt(x.true_ef) + "," + fmt(x.pred_ef) + "," +
         std::to_string(x.true_es) + "," + std::to_string(x.true_ed) + "," +
         (x.periodic ? "1" : "0") + "," + opt_csv(x.est_a) + "," + opt_csv(x.est_b) + "," +
         fmt(x.max_minus_mean) + "," + fmt(x.entropy) + "\n";
  return s;
}

std::string scatter_csv(const EvalReport& r, const std::string& provenance) {
  std::string s = comment_line(provenance);
  s += "true_ef,pred_ef\n";
  for (const auto& x : r.samples) s += fmt(x.true_ef) + "," + fmt(x.pred_ef) + "\n";
  return s;
}

namespace {

constexpr double kSize = 400.0, kMargin = 40.0;

std::string svg_open(const std::string& provenance, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kSize) +
                  "\" height=\"" + fmt(kSize) + "\" viewBox=\"0 0 " + fmt(kSize) + " " +
                  fmt(kSize) + "\">\n";
  s += "<!-- " + provenance + " -->\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kSize / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
       title + "</text>\n";
  const double lo = kMargin, hi = kSize - kMargin;
  s += "<path d=\"M" + fmt(lo) + " " + fmt(lo) + " L" + fmt(lo) + " " + fmt(hi) + " L" +
       fmt(hi) + " " + fmt(hi) + "\" stroke=\"black\" fill=\"none\"/>\n";
  return s;
}

}  // namespace

std::string scatter_svg(const EvalReport& r, const std::string& provenance) {
  const double lo = kMargin, span = kSize - 2 * kMargin;
  auto px = [&](double ef) { return lo + span * std::clamp(ef, 0.0, 100.0) / 100.0; };
  auto py = [&](double ef) { return kSize - px(ef); };
  std::string s = svg_open(provenance, "EF: predicted vs true (MAE " + fmt(r.mae) + ")");
  s += "<path d=\"M" + fmt(px(0)) + " " + fmt(py(0)) + " L" + fmt(px(100)) + " " +
       fmt(py(100)) + "\" stroke=\"gray\" stroke-dasharray=\"4 4\" fill=\"none\"/>\n";
  for (const auto& x : r.samples)
    s += "<circle cx=\"" + fmt(px(x.true_ef)) + "\" cy=\"" + fmt(py(x.pred_ef)) +
         "\" r=\"2.5\" fill=\"steelblue\"/>\n";
  s += "<text x=\"" + fmt(kSize / 2) + "\" y=\"" + fmt(kSize - 10) +
       "\" text-anchor=\"middle\" font-size=\"11\">true EF (%)</text>\n";
  s += "<text x=\"12\" y=\"" + fmt(kSize / 2) + "\" font-size=\"11\" transform=\"rotate(-90 12 " +
       fmt(kSize / 2) + ")\" text-anchor=\"middle\">predicted EF (%)</text>\n";
  s += "</svg>\n";
  return s;
}

std::string weights_svg(const std::vector<double>& w, const std::string& title,
                        const std::string& provenance) {
  const double lo = kMargin, span = kSize - 2 * kMargin;
  std::string s = svg_open(provenance, title);
  if (!w.empty()) {
    std::string d;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double x = lo + span * (w.size() == 1 ? 0.0 : double(j) / double(w.size() - 1));
      const double y = kSize - lo - span * std::clamp(w[j], 0.0, 1.0);
      d += (j ? " L" : "M") + fmt(x) + " " + fmt(y);
    }
    s += "<path d=\"" + d + "\" stroke=\"crimson\" stroke-width=\"1.5\" fill=\"none\"/>\n";
  }
  s += "<text x=\"" + fmt(kSize / 2) + "\" y=\"" + fmt(kSize - 10) +
       "\" text-anchor=\"middle\" font-size=\"11\">frame</text>\n";
  s += "</svg>\n";
  return s;
}

#define ECHOGNN_INSTANTIATE(Real)                                                          \
  template VideoPass run_video<Real>(EchoGnn<Real>&, const Video&);                        \
  template std::vector<double> predict_ef_multiclip<Real>(EchoGnn<Real>&,                  \
                                                          const std::vector<LabeledVideo>&); \
  template EvalReport evaluate<Real>(EchoGnn<Real>&, const std::vector<LabeledVideo>&,     \
                                     const EvalOptions&);

ECHOGNN_INSTANTIATE(float)
ECHOGNN_INSTANTIATE(double)
#undef ECHOGNN_INSTANTIATE

}  // namespace echognn
