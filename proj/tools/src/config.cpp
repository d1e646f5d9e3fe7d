#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "echognn/cli.hpp"
#include "echognn/io.hpp"

namespace echognn::cli {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n\"'");
  const auto e = s.find_last_not_of(" \t\r\n\"'");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "a finite number");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::string show(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string show(bool b) { return b ? "true" : "false"; }

std::vector<std::uint64_t> parse_ids(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> ids;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) ids.push_back(parse_int<std::uint64_t>(key, item));
  }
  return ids;
}

void check_split(const std::string& key, const std::string& v) {
  try {
    parse_split(v);
  } catch (const std::exception&) {
    bad_value(key, v, "train, val or test");
  }
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "run.seed", "run.mode", "run.preset", "run.workers",
      "paths.data_dir", "paths.checkpoint_dir", "paths.report_dir",
      "data.train", "data.val", "data.test", "data.below40_fraction", "data.zoomed_fraction",
      "data.ef_min", "data.ef_max", "data.period_min", "data.period_max", "data.frames_min",
      "data.frames_max", "data.noise_std",
      "model.frames", "model.symmetric_adjacency", "model.positional_encoding",
      "training.learning_rate", "training.batch_size", "training.epochs", "training.augment",
      "training.class_loss", "training.pretrain", "training.lambda", "training.zoom_probability",
      "training.pretrain_epochs", "training.pretrain_sigma", "training.pretrain_learning_rate",
      "evaluation.split", "evaluation.threshold_rule", "evaluation.tau",
      "explain.ids", "explain.split",
  };
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto& d = data;
  auto& t = training;
  if (key == "run.seed") seed = parse_int<std::uint64_t>(key, v);
  else if (key == "run.mode") {
    try {
      mode = parse_numeric_mode(v);
    } catch (const ConfigError&) {
      bad_value(key, v, "f32 or f64");
    }
  } else if (key == "run.preset") {
    ModelConfig::preset(v);  // validates the name
    preset = v;
  } else if (key == "run.workers") {
    workers = parse_int<unsigned>(key, v);
    if (workers == 0) bad_value(key, v, "at least 1");
  } else if (key == "paths.data_dir") data_dir = v;
  else if (key == "paths.checkpoint_dir") checkpoint_dir = v;
  else if (key == "paths.report_dir") report_dir = v;
  else if (key == "data.train") d.train = parse_int<std::size_t>(key, v);
  else if (key == "data.val") d.val = parse_int<std::size_t>(key, v);
  else if (key == "data.test") d.test = parse_int<std::size_t>(key, v);
  else if (key == "data.below40_fraction") d.below40_fraction = parse_real(key, v);
  else if (key == "data.zoomed_fraction") d.zoomed_fraction = parse_real(key, v);
  else if (key == "data.ef_min") d.ef_min = parse_real(key, v);
  else if (key == "data.ef_max") d.ef_max = parse_real(key, v);
  else if (key == "data.period_min") d.period_min = parse_real(key, v);
  else if (key == "data.period_max") d.period_max = parse_real(key, v);
  else if (key == "data.frames_min") d.frames_min = parse_int<std::size_t>(key, v);
  else if (key == "data.frames_max") d.frames_max = parse_int<std::size_t>(key, v);
  else if (key == "data.noise_std") d.noise_std = parse_real(key, v);
  else if (key == "model.frames") frames = parse_int<std::size_t>(key, v);
  else if (key == "model.symmetric_adjacency") symmetric_adjacency = parse_bool(key, v);
  else if (key == "model.positional_encoding") positional_encoding = parse_bool(key, v);
  else if (key == "training.learning_rate") t.learning_rate = parse_real(key, v);
  else if (key == "training.batch_size") t.batch_size = parse_int<std::size_t>(key, v);
  else if (key == "training.epochs") t.epochs = parse_int<std::size_t>(key, v);
  else if (key == "training.augment") t.augment = parse_bool(key, v);
  else if (key == "training.class_loss") t.class_loss = parse_bool(key, v);
  else if (key == "training.pretrain") t.pretrain = parse_bool(key, v);
  else if (key == "training.lambda") t.lambda = parse_real(key, v);
  else if (key == "training.zoom_probability") t.zoom_probability = parse_real(key, v);
  else if (key == "training.pretrain_epochs") t.pretrain_epochs = parse_int<std::size_t>(key, v);
  else if (key == "training.pretrain_sigma") t.pretrain_sigma = parse_real(key, v);
  else if (key == "training.pretrain_learning_rate") t.pretrain_learning_rate = parse_real(key, v);
  else if (key == "evaluation.split") {
    check_split(key, v);
    eval_split = v;
  } else if (key == "evaluation.threshold_rule") {
    try {
      threshold_rule = parse_threshold_rule(v);
    } catch (const ConfigError&) {
      bad_value(key, v, "run_boundary or leading_peaks");
    }
  } else if (key == "evaluation.tau") tau = parse_real(key, v);
  else if (key == "explain.ids") explain_ids = parse_ids(key, v);
  else if (key == "explain.split") {
    check_split(key, v);
    explain_split = v;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string RunConfig::get(const std::string& key) const {
  const auto& d = data;
  const auto& t = training;
  if (key == "run.seed") return std::to_string(seed);
  if (key == "run.mode") return to_string(mode);
  if (key == "run.preset") return preset;
  if (key == "run.workers") return std::to_string(workers);
  if (key == "paths.data_dir") return data_dir;
  if (key == "paths.checkpoint_dir") return checkpoint_dir;
  if (key == "paths.report_dir") return report_dir;
  if (key == "data.train") return std::to_string(d.train);
  if (key == "data.val") return std::to_string(d.val);
  if (key == "data.test") return std::to_string(d.test);
  if (key == "data.below40_fraction") return show(d.below40_fraction);
  if (key == "data.zoomed_fraction") return show(d.zoomed_fraction);
  if (key == "data.ef_min") return show(d.ef_min);
  if (key == "data.ef_max") return show(d.ef_max);
  if (key == "data.period_min") return show(d.period_min);
  if (key == "data.period_max") return show(d.period_max);
  if (key == "data.frames_min") return std::to_string(d.frames_min);
  if (key == "data.frames_max") return std::to_string(d.frames_max);
  if (key == "data.noise_std") return show(d.noise_std);
  if (key == "model.frames") return std::to_string(frames);
  if (key == "model.symmetric_adjacency") return show(symmetric_adjacency);
  if (key == "model.positional_encoding") return show(positional_encoding);
  if (key == "training.learning_rate") return show(t.learning_rate);
  if (key == "training.batch_size") return std::to_string(t.batch_size);
  if (key == "training.epochs") return std::to_string(t.epochs);
  if (key == "training.augment") return show(t.augment);
  if (key == "training.class_loss") return show(t.class_loss);
  if (key == "training.pretrain") return show(t.pretrain);
  if (key == "training.lambda") return show(t.lambda);
  if (key == "training.zoom_probability") return show(t.zoom_probability);
  if (key == "training.pretrain_epochs") return std::to_string(t.pretrain_epochs);
  if (key == "training.pretrain_sigma") return show(t.pretrain_sigma);
  if (key == "training.pretrain_learning_rate") return show(t.pretrain_learning_rate);
  if (key == "evaluation.split") return eval_split;
  if (key == "evaluation.threshold_rule") return to_string(threshold_rule);
  if (key == "evaluation.tau") return show(tau);
  if (key == "explain.ids") {
    std::string s;
    for (std::size_t i = 0; i < explain_ids.size(); ++i)
      s += (i ? "," : "") + std::to_string(explain_ids[i]);
    return s;
  }
  if (key == "explain.split") return explain_split;
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    key += item.name;
    if (item.parents.empty())
      throw ConfigError("config key '" + key + "' must be inside a [section]");
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    set(key, value);
  }
}

ModelConfig RunConfig::model() const {
  ModelConfig m = ModelConfig::preset(preset);
  if (frames) m.frames = frames;
  m.symmetric_adjacency = symmetric_adjacency;
  m.positional_encoding = positional_encoding;
  return m;
}

DatasetSpec RunConfig::dataset() const {
  DatasetSpec d = data;
  const ModelConfig m = model();
  d.height = m.height;
  d.width = m.width;
  return d;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = training;
  t.seed = seed;
  t.mode = mode;
  return t;
}

void RunConfig::validate() const {
  model().validate();
  train_config().validate();
  const DatasetSpec d = dataset();
  if (!(d.ef_min >= 0.0 && d.ef_min < d.ef_max && d.ef_max <= 100.0))
    throw ConfigError("data EF range must satisfy 0 <= ef_min < ef_max <= 100");
  if (!(d.below40_fraction >= 0.0 && d.below40_fraction <= 1.0))
    throw ConfigError("data.below40_fraction must lie in [0,1]");
  if (d.below40_fraction > 0.0 && !(d.ef_min < 40.0))
    throw ConfigError("data.below40_fraction > 0 needs ef_min < 40");
  if (d.below40_fraction < 1.0 && !(d.ef_max >= 40.0))
    throw ConfigError("data.below40_fraction < 1 needs ef_max >= 40");
  if (!(d.zoomed_fraction >= 0.0 && d.zoomed_fraction <= 1.0))
    throw ConfigError("data.zoomed_fraction must lie in [0,1]");
  if (!(d.period_min > 1.0 && d.period_min <= d.period_max))
    throw ConfigError("data period range must satisfy 1 < period_min <= period_max");
  if (!(d.frames_min >= 1 && d.frames_min <= d.frames_max))
    throw ConfigError("data frame range must satisfy 1 <= frames_min <= frames_max");
  if (!(d.noise_std >= 0.0)) throw ConfigError("data.noise_std must be >= 0");
  if (!(tau >= 0.0)) throw ConfigError("evaluation.tau must be >= 0");
}

std::string RunConfig::canonical_text() const {
  std::string s;
  for (const auto& k : keys()) {
    if (k.rfind("paths.", 0) == 0 || k.rfind("evaluation.", 0) == 0 ||
        k.rfind("explain.", 0) == 0 || k == "run.workers")
      continue;
    s += k + "=" + get(k) + "\n";
  }
  return s;
}

std::string RunConfig::hash() const { return io::hex64(io::fnv1a(canonical_text())); }

std::string RunConfig::provenance() const {
  return "config_hash=" + hash() + " seed=" + std::to_string(seed) + " mode=" + to_string(mode);
}

}  // namespace echognn::cli
