#include "echognn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "echognn/evaluation.hpp"
#include "echognn/io.hpp"

namespace echognn {

std::string to_string(NumericMode m) { return m == NumericMode::f32 ? "f32" : "f64"; }

NumericMode parse_numeric_mode(const std::string& s) {
  if (s == "f32" || s == "float32" || s == "training") return NumericMode::f32;
  if (s == "f64" || s == "float64" || s == "verification") return NumericMode::f64;
  throw ConfigError("unknown numeric mode '" + s + "' (expected f32 or f64)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be positive");
  if (!(pretrain_learning_rate > 0.0) || !std::isfinite(pretrain_learning_rate))
    throw ConfigError("pretrain_learning_rate must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batchnorm needs a batch)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (!(zoom_probability >= 0.0 && zoom_probability <= 1.0))
    throw ConfigError("zoom_probability must lie in [0,1]");
  if (!(pretrain_sigma > 0.0)) throw ConfigError("pretrain_sigma must be positive");
}

std::vector<double> pretrain_targets(std::size_t frames, std::optional<std::size_t> es,
                                     std::optional<std::size_t> ed, double sigma) {
  std::vector<double> t(frames, 0.0);
  for (std::size_t j = 0; j < frames; ++j) {
    double v = 0.0;
    for (const auto& c : {es, ed}) {
      if (!c) continue;
      const double d = double(j) - double(*c);
      v += std::exp(-d * d / (2.0 * sigma * sigma));
    }
    t[j] = std::clamp(v, 0.0, 1.0);
  }
  return t;
}

template <typename Real>
Tensor<Real> stack_clips(const std::vector<Clip>& clips) {
  if (clips.empty()) throw ContractError("stack_clips on an empty batch");
  const Shape& s = clips.front().frames.shape();
  Tensor<Real> out({clips.size(), s[0], s[1], s[2]});
  const std::size_t n = clips.front().frames.size();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].frames.shape() != s) throw ShapeError("stack_clips: clips differ in shape");
    std::transform(clips[i].frames.raw(), clips[i].frames.raw() + n, out.raw() + i * n,
                   [](float v) { return Real(v); });
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'E', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Real>
void put_tensor(io::ByteWriter& w, const std::string& name, const Tensor<Real>& t) {
  w.put_string(name);
  w.put<std::uint32_t>(std::uint32_t(t.rank()));
  for (auto d : t.shape()) w.put<std::uint64_t>(d);
  w.put_array(t.raw(), t.size());
}

template <typename Real>
void get_tensor_into(io::ByteReader& r, const std::string& expected_name, Tensor<Real>& t) {
  const std::string name = r.get_string();
  if (name != expected_name)
    throw FormatError("checkpoint entry '" + name + "' where '" + expected_name + "' was expected");
  const auto rank = r.get<std::uint32_t>();
  Shape s(rank);
  for (auto& d : s) d = std::size_t(r.get<std::uint64_t>());
  if (s != t.shape())
    throw FormatError("checkpoint tensor " + name + " has shape " + to_string(s) +
                      ", model expects " + to_string(t.shape()));
  r.get_array(t.raw(), t.size());
}

struct Header {
  std::string config_hash;
  std::uint8_t real_bytes = 0;
  std::string model_text;
};

/// Validates magic, version and content hash; returns the payload.
std::string open_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    throw FormatError("not a checkpoint file (bad magic)");
  io::ByteReader r(std::string_view(bytes).substr(4, 12));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto hash = r.get<std::uint64_t>();
  std::string payload = bytes.substr(16);
  if (io::fnv1a(payload) != hash) throw FormatError("checkpoint content hash mismatch");
  return payload;
}

Header read_header(io::ByteReader& r) {
  Header h;
  h.config_hash = r.get_string();
  h.real_bytes = r.get<std::uint8_t>();
  h.model_text = r.get_string();
  return h;
}

template <typename Real>
ParamList<Real> stage_params(const EchoGnn<Real>& m, Stage s) {
  return s == Stage::pretrain ? m.pretrain_parameters() : m.parameters();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

ModelConfig checkpoint_model_config(const std::filesystem::path& path) {
  const std::string payload = open_checkpoint(io::read_file(path));
  io::ByteReader r(payload);
  return ModelConfig::from_text(read_header(r).model_text);
}

NumericMode checkpoint_numeric_mode(const std::filesystem::path& path) {
  const std::string payload = open_checkpoint(io::read_file(path));
  io::ByteReader r(payload);
  const Header h = read_header(r);
  if (h.real_bytes == 4) return NumericMode::f32;
  if (h.real_bytes == 8) return NumericMode::f64;
  throw FormatError("checkpoint has an unknown scalar width");
}

// ---------------------------------------------------------------------------
// Trainer

template <typename Real>
Trainer<Real>::Trainer(EchoGnn<Real>& model, TrainConfig cfg, std::string config_hash)
    : model_(model),
      cfg_(std::move(cfg)),
      config_hash_(std::move(config_hash)),
      rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ULL) {
  cfg_.validate();
  const NumericMode native = sizeof(Real) == 4 ? NumericMode::f32 : NumericMode::f64;
  if (cfg_.mode != native)
    throw ContractError("trainer scalar type does not match numeric mode " + to_string(cfg_.mode));
  adam_ = AdamState<Real>::zeros_like(model_.pretrain_parameters());
  best_val_ = std::numeric_limits<double>::infinity();
}

template <typename Real>
void Trainer<Real>::ensure_stage(Stage s) {
  if (s == stage_) return;
  if (s == Stage::pretrain) throw ContractError("pretraining cannot follow the training stage");
  stage_ = Stage::train;
  epoch_ = 0;
  adam_ = AdamState<Real>::zeros_like(model_.parameters());
  best_val_ = std::numeric_limits<double>::infinity();
  best_epoch_ = 0;
}

template <typename Real>
PretrainRecord Trainer<Real>::pretrain_epoch(const std::vector<LabeledVideo>& data) {
  ensure_stage(Stage::pretrain);
  model_.set_training(true);
  const ParamList<Real> params = model_.pretrain_parameters();
  const std::size_t T = model_.config().frames;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  PretrainRecord rec;
  rec.epoch = epoch_ + 1;
  double total = 0.0;
  std::vector<Clip> clips;
  std::vector<Real> targets;
  auto flush = [&]() {
    if (clips.size() >= 2) {
      ModelOutput<Real> out = model_.forward(stack_clips<Real>(clips), false);
      Tensor<Real> t({clips.size() * T, 1}, targets);
      Var<Real> loss = ops::bce_with_logits(out.graph.node_logits, t);
      backward(loss);
      adam_step(params, adam_, AdamHyper{cfg_.pretrain_learning_rate});
      total += double(loss.value().item()) * double(clips.size());
      rec.clips += clips.size();
    }
    clips.clear();
    targets.clear();
  };
  for (std::size_t i = 0; i < order.size(); ++i) {
    const LabeledVideo& lv = data[order[i]];
    Clip c = sample_pretrain_clip(lv.video, T, rng_, lv.id);
    const auto es = clip_local_index(c, lv.video.es_index);
    const auto ed = clip_local_index(c, lv.video.ed_index);
    if (es || ed) {
      for (double v : pretrain_targets(T, es, ed, cfg_.pretrain_sigma)) targets.push_back(Real(v));
      clips.push_back(std::move(c));
    }
    if (clips.size() == cfg_.batch_size) flush();
  }
  flush();
  rec.bce = rec.clips ? total / double(rec.clips) : 0.0;
  ++epoch_;
  pretrain_log_.push_back(rec);
  return rec;
}

template <typename Real>
EpochRecord Trainer<Real>::train_epoch(const std::vector<LabeledVideo>& train,
                                       const std::vector<LabeledVideo>& val) {
  ensure_stage(Stage::train);
  model_.set_training(true);
  const ParamList<Real> params = model_.parameters();
  const std::size_t T = model_.config().frames;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  double abs_sum = 0.0, ce_sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + cfg_.batch_size);
    if (end - begin < 2) break;  // batchnorm needs two samples
    std::vector<Clip> clips;
    std::vector<Real> ef;
    std::vector<int> labels;
    for (std::size_t i = begin; i < end; ++i) {
      const LabeledVideo& lv = train[order[i]];
      Clip c = sample_train_clip(lv.video, T, rng_, lv.id);
      if (cfg_.augment) c = zoom_augment(c, rng_, cfg_.zoom_probability);
      clips.push_back(std::move(c));
      ef.push_back(Real(double(lv.video.ef) / 100.0));
      labels.push_back(ef_to_class(lv.video.ef));
    }
    const std::size_t B = clips.size();
    ModelOutput<Real> out = model_.forward(stack_clips<Real>(clips));
    Var<Real> loss = mae_loss(out.prediction.ef, Tensor<Real>({B}, ef));
    abs_sum += 100.0 * double(loss.value().item()) * double(B);
    if (cfg_.class_loss) {
      Var<Real> ce = cross_entropy_loss(out.prediction.class_logits, labels);
      ce_sum += double(ce.value().item()) * double(B);
      loss = ops::add(loss, ops::scale(ce, Real(cfg_.lambda)));
    }
    backward(loss);
    adam_step(params, adam_, AdamHyper{cfg_.learning_rate});
    seen += B;
  }
  rec.train_mae = seen ? abs_sum / double(seen) : 0.0;
  rec.train_ce = seen ? ce_sum / double(seen) : 0.0;
  if (val.empty()) {
    rec.val_mae = std::numeric_limits<double>::quiet_NaN();
  } else {
    const std::vector<double> pred = predict_ef_multiclip(model_, val);
    double s = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i)
      s += std::abs(std::clamp(pred[i], 0.0, 100.0) - double(val[i].video.ef));
    rec.val_mae = s / double(val.size());
  }
  ++epoch_;
  log_.push_back(rec);
  return rec;
}

template <typename Real>
void Trainer<Real>::run_pretraining(const std::vector<LabeledVideo>& train,
                                    const std::filesystem::path& dir,
                                    const std::function<void(const PretrainRecord&)>& on_epoch) {
  if (stage_ != Stage::pretrain) return;
  const auto last = dir / "pretrain_last.ckpt";
  while (epoch_ < cfg_.pretrain_epochs) {
    PretrainRecord rec;
    try {
      rec = pretrain_epoch(train);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (pretraining epoch " +
                         std::to_string(epoch_ + 1) + "; last good checkpoint: " +
                         (std::filesystem::exists(last) ? last.string() : "none") + ")");
    }
    save(last);
    io::write_file(dir / "pretrain_log.csv", pretrain_log_csv());
    if (on_epoch) on_epoch(rec);
  }
  save(dir / "pretrain.ckpt");
  io::write_file(dir / "pretrain_log.csv", pretrain_log_csv());
}

template <typename Real>
void Trainer<Real>::run_training(const std::vector<LabeledVideo>& train,
                                 const std::vector<LabeledVideo>& val,
                                 const std::filesystem::path& dir,
                                 const std::function<void(const EpochRecord&)>& on_epoch) {
  if (val.empty()) throw ContractError("training needs a non-empty validation set");
  ensure_stage(Stage::train);
  const auto last = dir / "last.ckpt";
  while (epoch_ < cfg_.epochs) {
    EpochRecord rec;
    try {
      rec = train_epoch(train, val);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch_ + 1) +
                         "; last good checkpoint: " +
                         (std::filesystem::exists(last) ? last.string() : "none") + ")");
    }
    if (rec.val_mae < best_val_) {
      best_val_ = rec.val_mae;
      best_epoch_ = rec.epoch;
      save(dir / "best.ckpt");
    }
    save(last);
    io::write_file(dir / "train_log.csv", log_csv());
    if (on_epoch) on_epoch(rec);
  }
  io::write_file(dir / "train_log.csv", log_csv());
}

template <typename Real>
std::string Trainer<Real>::log_csv() const {
  std::string s = "# config_hash=" + config_hash_ + " seed=" + std::to_string(cfg_.seed) +
                  " mode=" + to_string(cfg_.mode) + "\n";
  s += "epoch,train_mae,train_ce,val_mae\n";
  for (const auto& r : log_)
    s += std::to_string(r.epoch) + "," + fmt(r.train_mae) + "," + fmt(r.train_ce) + "," +
         fmt(r.val_mae) + "\n";
  return s;
}

template <typename Real>
std::string Trainer<Real>::pretrain_log_csv() const {
  std::string s = "# config_hash=" + config_hash_ + " seed=" + std::to_string(cfg_.seed) +
                  " mode=" + to_string(cfg_.mode) + "\n";
  s += "epoch,bce,clips\n";
  for (const auto& r : pretrain_log_)
    s += std::to_string(r.epoch) + "," + fmt(r.bce) + "," + std::to_string(r.clips) + "\n";
  return s;
}

template <typename Real>
void Trainer<Real>::save(const std::filesystem::path& path) const {
  io::ByteWriter w;
  w.put_string(config_hash_);
  w.put<std::uint8_t>(std::uint8_t(sizeof(Real)));
  w.put_string(model_.config().to_text());
  w.put<std::uint32_t>(std::uint32_t(stage_));
  w.put<std::uint64_t>(epoch_);
  w.put<double>(best_val_);
  w.put<std::uint64_t>(best_epoch_);
  std::ostringstream rs;
  rs << rng_;
  w.put_string(rs.str());

  const ParamList<Real> params = model_.parameters();
  w.put<std::uint32_t>(std::uint32_t(params.size()));
  for (const auto& p : params) put_tensor(w, p.name, p.var.value());
  BufferList<Real> buffers = const_cast<EchoGnn<Real>&>(model_).buffers();
  w.put<std::uint32_t>(std::uint32_t(buffers.size()));
  for (const auto& b : buffers) put_tensor(w, b.name, *b.tensor);

  const ParamList<Real> opt = stage_params(model_, stage_);
  w.put<std::uint64_t>(adam_.step);
  w.put<std::uint32_t>(std::uint32_t(opt.size()));
  for (std::size_t i = 0; i < opt.size(); ++i) {
    put_tensor(w, opt[i].name + ".adam_m", adam_.m[i]);
    put_tensor(w, opt[i].name + ".adam_v", adam_.v[i]);
  }

  w.put<std::uint32_t>(std::uint32_t(pretrain_log_.size()));
  for (const auto& r : pretrain_log_) {
    w.put<std::uint64_t>(r.epoch);
    w.put<double>(r.bce);
    w.put<std::uint64_t>(r.clips);
  }
  w.put<std::uint32_t>(std::uint32_t(log_.size()));
  for (const auto& r : log_) {
    w.put<std::uint64_t>(r.epoch);
    w.put<double>(r.train_mae);
    w.put<double>(r.train_ce);
    w.put<double>(r.val_mae);
  }

  io::ByteWriter file;
  file.put_array(kMagic, 4);
  file.put<std::uint32_t>(kCheckpointVersion);
  file.put<std::uint64_t>(io::fnv1a(w.bytes()));
  io::write_file(path, file.bytes() + w.bytes());
}

namespace {

template <typename Real>
void check_architecture(const EchoGnn<Real>& model, const Header& h) {
  if (h.real_bytes != sizeof(Real))
    throw FormatError("checkpoint scalar width " + std::to_string(h.real_bytes) +
                      " does not match the run's numeric mode");
  if (!(ModelConfig::from_text(h.model_text) == model.config()))
    throw FormatError("checkpoint was written for a different model architecture");
}

template <typename Real>
void read_weights(io::ByteReader& r, EchoGnn<Real>& model) {
  ParamList<Real> params = model.parameters();
  if (r.get<std::uint32_t>() != params.size())
    throw FormatError("checkpoint parameter count does not match the model");
  for (auto& p : params) get_tensor_into(r, p.name, p.var.mutable_value());
  BufferList<Real> buffers = model.buffers();
  if (r.get<std::uint32_t>() != buffers.size())
    throw FormatError("checkpoint buffer count does not match the model");
  for (auto& b : buffers) get_tensor_into(r, b.name, *b.tensor);
}

}  // namespace

template <typename Real>
void Trainer<Real>::load(const std::filesystem::path& path) {
  const std::string payload = open_checkpoint(io::read_file(path));
  io::ByteReader r(payload);
  const Header h = read_header(r);
  check_architecture(model_, h);
  if (!config_hash_.empty() && !h.config_hash.empty() && h.config_hash != config_hash_)
    throw ConfigError("checkpoint " + path.string() + " was written with config hash " +
                      h.config_hash + ", this run has " + config_hash_);
  const auto stage = r.get<std::uint32_t>();
  if (stage > 1) throw FormatError("checkpoint has an unknown stage");
  const Stage s = Stage(stage);
  const std::size_t epoch = r.get<std::uint64_t>();
  const double best = r.get<double>();
  const std::size_t best_epoch = r.get<std::uint64_t>();
  std::istringstream rs(r.get_string());
  Rng rng;
  rs >> rng;
  if (!rs) throw FormatError("checkpoint RNG state is corrupt");
  read_weights(r, model_);

  AdamState<Real> adam = AdamState<Real>::zeros_like(stage_params(model_, s));
  adam.step = r.get<std::uint64_t>();
  const ParamList<Real> opt = stage_params(model_, s);
  if (r.get<std::uint32_t>() != opt.size())
    throw FormatError("checkpoint optimizer state does not match the model");
  for (std::size_t i = 0; i < opt.size(); ++i) {
    get_tensor_into(r, opt[i].name + ".adam_m", adam.m[i]);
    get_tensor_into(r, opt[i].name + ".adam_v", adam.v[i]);
  }
  std::vector<PretrainRecord> plog(r.get<std::uint32_t>());
  for (auto& p : plog) {
    p.epoch = r.get<std::uint64_t>();
    p.bce = r.get<double>();
    p.clips = r.get<std::uint64_t>();
  }
  std::vector<EpochRecord> tlog(r.get<std::uint32_t>());
  for (auto& t : tlog) {
    t.epoch = r.get<std::uint64_t>();
    t.train_mae = r.get<double>();
    t.train_ce = r.get<double>();
    t.val_mae = r.get<double>();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in checkpoint");

  stage_ = s;
  epoch_ = epoch;
  best_val_ = best;
  best_epoch_ = best_epoch;
  rng_ = rng;
  adam_ = std::move(adam);
  pretrain_log_ = std::move(plog);
  log_ = std::move(tlog);
}

template <typename Real>
void Trainer<Real>::load_weights(EchoGnn<Real>& model, const std::filesystem::path& path) {
  const std::string payload = open_checkpoint(io::read_file(path));
  io::ByteReader r(payload);
  const Header h = read_header(r);
  check_architecture(model, h);
  r.get<std::uint32_t>();
  r.get<std::uint64_t>();
  r.get<double>();
  r.get<std::uint64_t>();
  r.get_string();
  read_weights(r, model);
}

template class Trainer<float>;
template class Trainer<double>;
template Tensor<float> stack_clips<float>(const std::vector<Clip>&);
template Tensor<double> stack_clips<double>(const std::vector<Clip>&);

}  // namespace echognn
