#include "echognn/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "echognn/errors.hpp"

namespace echognn::cli {
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path))
    throw IoError(path.string() + " not found (" + hint + ")");
}

std::string with_mode(const RunConfig& cfg, NumericMode mode) {
  return "config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) +
         " mode=" + to_string(mode);
}

std::vector<LabeledVideo> load(const RunConfig& cfg, Split split) {
  require_file(fs::path(cfg.data_dir) / "manifest.csv", "run generate-data first");
  auto videos = load_split(cfg.data_dir, split);
  if (videos.empty())
    throw ConfigError("split '" + to_string(split) + "' of " + cfg.data_dir + " is empty");
  return videos;
}

// Options shared by the commands that need a trained model.
struct ModelSource {
  std::string checkpoint;  // empty: <checkpoint_dir>/best.ckpt
  bool untrained = false;
};

fs::path checkpoint_path(const RunConfig& cfg, const ModelSource& src) {
  return src.checkpoint.empty() ? fs::path(cfg.checkpoint_dir) / "best.ckpt"
                                : fs::path(src.checkpoint);
}

// Calls fn(model, mode) with a model in the right precision: the checkpoint's
// own mode when loading one, the configured mode for a fresh model.
template <typename Fn>
void with_model(const RunConfig& cfg, const ModelSource& src, Fn&& fn) {
  if (src.untrained) {
    if (cfg.mode == NumericMode::f64) {
      EchoGnn<double> m(cfg.model(), cfg.seed);
      fn(m, cfg.mode);
    } else {
      EchoGnn<float> m(cfg.model(), cfg.seed);
      fn(m, cfg.mode);
    }
    return;
  }
  const fs::path path = checkpoint_path(cfg, src);
  require_file(path, "train a model or pass --checkpoint");
  const ModelConfig mc = checkpoint_model_config(path);
  const NumericMode mode = checkpoint_numeric_mode(path);
  if (mode == NumericMode::f64) {
    EchoGnn<double> m(mc, cfg.seed);
    Trainer<double>::load_weights(m, path);
    fn(m, mode);
  } else {
    EchoGnn<float> m(mc, cfg.seed);
    Trainer<float>::load_weights(m, path);
    fn(m, mode);
  }
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const auto entries =
      generate_dataset(cfg.dataset(), cfg.seed, cfg.data_dir, cfg.workers, cfg.provenance());
  out << "wrote " << entries.size() << " videos to " << cfg.data_dir << " ("
      << cfg.provenance() << ")\n";
  return kOk;
}

template <typename Real>
int pretrain_impl(const RunConfig& cfg, bool resume, std::ostream& out) {
  const auto train = load(cfg, Split::train);
  EchoGnn<Real> model(cfg.model(), cfg.seed);
  Trainer<Real> trainer(model, cfg.train_config(), cfg.hash());
  const fs::path dir = cfg.checkpoint_dir;
  if (resume && fs::exists(dir / "pretrain_last.ckpt")) {
    trainer.load(dir / "pretrain_last.ckpt");
    out << "resumed pretraining after epoch " << trainer.epoch() << "\n";
  }
  trainer.run_pretraining(train, dir, [&](const PretrainRecord& r) {
    out << "pretrain epoch " << r.epoch << " bce " << r.bce << " clips " << r.clips << "\n"
        << std::flush;
  });
  out << "pretrained encoder written to " << (dir / "pretrain.ckpt").string() << "\n";
  return kOk;
}

template <typename Real>
int train_impl(const RunConfig& cfg, bool resume, std::ostream& out) {
  const auto train = load(cfg, Split::train);
  const auto val = load(cfg, Split::val);
  EchoGnn<Real> model(cfg.model(), cfg.seed);
  const TrainConfig tc = cfg.train_config();
  Trainer<Real> trainer(model, tc, cfg.hash());
  const fs::path dir = cfg.checkpoint_dir;
  auto on_pretrain = [&](const PretrainRecord& r) {
    out << "pretrain epoch " << r.epoch << " bce " << r.bce << "\n" << std::flush;
  };
  if (resume && fs::exists(dir / "last.ckpt")) {
    trainer.load(dir / "last.ckpt");
    out << "resumed training after epoch " << trainer.epoch() << "\n";
  } else if (tc.pretrain) {
    if (fs::exists(dir / "pretrain.ckpt")) {
      trainer.load(dir / "pretrain.ckpt");
      out << "starting from " << (dir / "pretrain.ckpt").string() << "\n";
    } else {
      if (resume && fs::exists(dir / "pretrain_last.ckpt")) trainer.load(dir / "pretrain_last.ckpt");
      trainer.run_pretraining(train, dir, on_pretrain);
    }
  }
  trainer.run_training(train, val, dir, [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << " train_mae " << r.train_mae << " train_ce " << r.train_ce
        << " val_mae " << r.val_mae << "\n"
        << std::flush;
  });
  out << "best val_mae " << trainer.best_val_mae() << " at epoch " << trainer.best_epoch()
      << "; checkpoints in " << dir.string() << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& cfg, const ModelSource& src, std::ostream& out) {
  const auto videos = load(cfg, parse_split(cfg.eval_split));
  with_model(cfg, src, [&](auto& model, NumericMode mode) {
    const EvalReport r = evaluate(model, videos, EvalOptions{cfg.threshold_rule, cfg.tau});
    const std::string prov = with_mode(cfg, mode);
    const fs::path dir = cfg.report_dir;
    write_text(dir / "report.json", report_json(r, prov));
    write_text(dir / "samples.csv", samples_csv(r, prov));
    write_text(dir / "scatter.csv", scatter_csv(r, prov));
    write_text(dir / "scatter.svg", scatter_svg(r, prov));
    auto opt = [](const std::optional<double>& v) {
      return v ? std::to_string(*v) : std::string("n/a");
    };
    out << "split " << cfg.eval_split << " n=" << r.total_count << " mae " << r.mae << " r2 "
        << opt(r.r2) << " f1<40 " << opt(r.f1_below_40) << " periodic " << r.periodic_count
        << "/" << r.total_count << " afd_es " << opt(r.afd_es) << " afd_ed " << opt(r.afd_ed)
        << " (" << r.rule << ")\nreport written to " << dir.string() << "\n";
  });
  return kOk;
}

int cmd_explain(const RunConfig& cfg, const ModelSource& src, std::ostream& out) {
  const auto videos = load(cfg, parse_split(cfg.explain_split));
  std::vector<std::uint64_t> ids = cfg.explain_ids;
  if (ids.empty())
    for (std::size_t i = 0; i < std::min<std::size_t>(4, videos.size()); ++i)
      ids.push_back(videos[i].id);
  std::map<std::uint64_t, const LabeledVideo*> by_id;
  for (const auto& v : videos) by_id[v.id] = &v;

  with_model(cfg, src, [&](auto& model, NumericMode mode) {
    const std::string prov = with_mode(cfg, mode);
    const fs::path dir = cfg.report_dir;
    std::string summary = "# " + prov + "\nid,verdict,max_minus_mean,entropy,est_a,est_b,true_es,true_ed\n";
    for (std::uint64_t id : ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end())
        throw ConfigError("sample " + std::to_string(id) + " is not in split " +
                          cfg.explain_split);
      const Video& v = it->second->video;
      const VideoPass pass = run_video(model, v);
      const std::size_t T = pass.frames;
      const Extraction ex = extract_es_ed(pass.node_weights, cfg.threshold_rule, cfg.tau);
      const GraphStats st = graph_stats(pass.node_weights, pass.adjacency);
      const std::string verdict = ex.periodic ? "periodic" : "needs-review";

      std::string nodes = "# " + prov + "\nframe,weight\n";
      char buf[96];
      for (std::size_t j = 0; j < T; ++j) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", j, pass.node_weights[j]);
        nodes += buf;
      }
      std::string edges = "# " + prov + "\nsrc,dst,weight\n";
      for (std::size_t k = 0; k < T; ++k)
        for (std::size_t s = 0; s < T; ++s) {
          if (k == s) continue;
          std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g\n", k, s, pass.adjacency[k * T + s]);
          edges += buf;
        }
      const std::string stem = "explain_" + std::to_string(id);
      write_text(dir / (stem + "_nodes.csv"), nodes);
      write_text(dir / (stem + "_edges.csv"), edges);
      write_text(dir / (stem + ".svg"),
                 weights_svg(pass.node_weights, "sample " + std::to_string(id) + ": " + verdict,
                             prov));
      const auto es = clip_local_index(make_test_clips(v, T).front(), v.es_index);
      const auto ed = clip_local_index(make_test_clips(v, T).front(), v.ed_index);
      auto idx = [](const std::optional<std::size_t>& i) {
        return i ? std::to_string(*i) : std::string();
      };
      std::snprintf(buf, sizeof buf, ",%.9g,%.9g,", st.max_minus_mean, st.normalized_entropy);
      summary += std::to_string(id) + "," + verdict + buf +
                 (ex.periodic ? std::to_string(ex.a) + "," + std::to_string(ex.b) : ",") + "," +
                 idx(es) + "," + idx(ed) + "\n";
      out << "sample " << id << ": " << verdict << " (max-mean " << st.max_minus_mean;
      if (ex.periodic) out << ", frames " << ex.a << " and " << ex.b;
      out << ")\n";
    }
    write_text(dir / "explain_summary.csv", summary);
    out << "explanations written to " << dir.string() << "\n";
  });
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EchoGNN on synthetic echo videos", "echognn"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Exit codes: 0 ok, 1 selftest failure or internal error, 2 bad config,\n"
             "3 missing or unreadable file, 4 numeric failure.\n"
             "ECHOGNN_CONFIG names the default config file.");

  std::string config_path;
  app.add_option("--config", config_path, "INI config file ([section] key = value)");
  std::map<std::string, std::string> overrides;
  for (const auto& key : RunConfig::keys())
    app.add_option_function<std::string>(
           "--" + key, [&, key](const std::string& v) { overrides[key] = v; },
           "override " + key)
        ->group("Config overrides");
  const std::pair<const char*, const char*> aliases[] = {
      {"--seed", "run.seed"},           {"--mode", "run.mode"},
      {"--preset", "run.preset"},       {"--workers", "run.workers"},
      {"--data-dir", "paths.data_dir"}, {"--checkpoint-dir", "paths.checkpoint_dir"},
      {"--report-dir", "paths.report_dir"}};
  for (const auto& [flag, key] : aliases)
    app.add_option_function<std::string>(
        flag, [&, k = std::string(key)](const std::string& v) { overrides[k] = v; },
        std::string("same as --") + key);

  auto* gen = app.add_subcommand("generate-data", "write the synthetic dataset");
  bool resume = false;
  auto* pre = app.add_subcommand("pretrain", "pretrain the encoders on ES/ED targets");
  pre->add_flag("--resume", resume, "continue from pretrain_last.ckpt");
  auto* train = app.add_subcommand("train", "train (after pretraining when enabled)");
  train->add_flag("--resume", resume, "continue from last.ckpt");
  ModelSource src;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint and write reports");
  auto* ex = app.add_subcommand("explain", "export node and edge weights for samples");
  for (auto* sub : {ev, ex}) {
    sub->add_option("--checkpoint", src.checkpoint, "checkpoint (default <checkpoint_dir>/best.ckpt)");
    sub->add_flag("--untrained", src.untrained, "use a freshly initialized model");
  }
  ex->add_option_function<std::string>(
      "--ids", [&](const std::string& v) { overrides["explain.ids"] = v; },
      "comma-separated sample ids");
  auto* self = app.add_subcommand("selftest", "run gradient, invariant and protocol checks");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "echognn: " << e.what() << "\n";
    return kBadConfig;
  }

  try {
    RunConfig cfg;
    if (config_path.empty())
      if (const char* env = std::getenv("ECHOGNN_CONFIG"); env && *env) config_path = env;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate();

    if (gen->parsed()) return cmd_generate(cfg, out);
    if (pre->parsed())
      return cfg.mode == NumericMode::f64 ? pretrain_impl<double>(cfg, resume, out)
                                          : pretrain_impl<float>(cfg, resume, out);
    if (train->parsed())
      return cfg.mode == NumericMode::f64 ? train_impl<double>(cfg, resume, out)
                                          : train_impl<float>(cfg, resume, out);
    if (ev->parsed()) return cmd_eval(cfg, src, out);
    if (ex->parsed()) return cmd_explain(cfg, src, out);
    if (self->parsed()) return selftest(out, cfg.seed) ? kOk : kSelftestFailed;
    return kBadConfig;
  } catch (const ConfigError& e) {
    err << "echognn: config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const ContractError& e) {
    err << "echognn: invalid request: " << e.what() << "\n";
    return kBadConfig;
  } catch (const ShapeError& e) {
    err << "echognn: shape mismatch: " << e.what() << "\n";
    return kBadConfig;
  } catch (const IoError& e) {
    err << "echognn: " << e.what() << "\n";
    return kMissingFile;
  } catch (const FormatError& e) {
    err << "echognn: unreadable file: " << e.what() << "\n";
    return kMissingFile;
  } catch (const NumericError& e) {
    err << "echognn: numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const fs::filesystem_error& e) {
    err << "echognn: " << e.what() << "\n";
    return kMissingFile;
  } catch (const std::exception& e) {
    err << "echognn: " << e.what() << "\n";
    return kSelftestFailed;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace echognn::cli
