/*
 * Copyright 2026 The AnaXNet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Command-line front end: synth, adjacency, train, eval, gradcheck.
//
// Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O or format error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "anaxnet/adjacency.hpp"
#include "anaxnet/error.hpp"
#include "anaxnet/eval.hpp"
#include "anaxnet/io.hpp"
#include "anaxnet/model.hpp"
#include "anaxnet/synth.hpp"
#include "anaxnet/train.hpp"

namespace anaxnet::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kIo = 3 };

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

/// Writes each record to the stream and, when open, to a log file.
class RunLog {
 public:
  explicit RunLog(std::ostream& out) : out_(out) {}
  void tee_to(const std::filesystem::path& path) { file_.open(path, std::ios::trunc); }
  void line(const std::string& s) {
    out_ << s << '\n';
    if (file_) file_ << s << '\n';
  }

 private:
  std::ostream& out_;
  std::ofstream file_;
};

struct Records {
  std::vector<ImageRecord> train, val, test;
};

inline Records split_records(const Dataset& ds) {
  Records r;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    switch (ds.manifest.splits[i]) {
      case Split::train: r.train.push_back(ds.records[i]); break;
      case Split::val: r.val.push_back(ds.records[i]); break;
      case Split::test: r.test.push_back(ds.records[i]); break;
    }
  }
  return r;
}

inline std::filesystem::path or_default(const std::string& flag, const std::filesystem::path& fallback) {
  return flag.empty() ? fallback : std::filesystem::path(flag);
}

}  // namespace detail

struct SynthFlags {
  std::string out;
  std::size_t images = 2000;
  std::optional<std::size_t> train, val, test;
  std::uint64_t seed = 0;
  std::size_t k = 6, d = 32, labels = 4;
  std::optional<std::size_t> context;
  double noise = 1.0, propagation = 0.8, signal = 2.0, context_signal = 2.0;
  double seed_rate = 0.2, context_rate = 0.5, presence = 1.0;
};

inline nlohmann::json synth_spec_json(const SynthSpec& s) {
  nlohmann::json j;
  j["k"] = s.regions;
  j["d"] = s.features;
  j["M"] = s.labels;
  j["seed"] = s.seed;
  j["noise_std"] = s.noise_std;
  j["propagation"] = s.propagation;
  j["seed_rate"] = s.seed_rate;
  j["context_rate"] = s.context_rate;
  j["signal"] = s.signal;
  j["context_signal"] = s.context_signal;
  j["presence_rate"] = s.presence_rate;
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  j["context_labels"] = s.context_labels;
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : edge_list(s.graph)) edges.push_back({a, b});
  j["graph_edges"] = edges;
  return j;
}

inline int cmd_synth(const SynthFlags& f, std::ostream& out) {
  SynthSpec spec = SynthSpec::with_shape(f.k, f.d, f.labels);
  if (f.context) {
    if (*f.context > f.labels) throw ConfigError("--context cannot exceed --labels");
    spec.context_labels.clear();
    for (std::size_t m = f.labels - *f.context; m < f.labels; ++m) spec.context_labels.push_back(m);
  }
  spec.seed = f.seed;
  spec.noise_std = f.noise;
  spec.propagation = f.propagation;
  spec.signal = f.signal;
  spec.context_signal = f.context_signal;
  spec.seed_rate = f.seed_rate;
  spec.context_rate = f.context_rate;
  spec.presence_rate = f.presence;
  spec.set_images(f.images);
  if (f.train || f.val || f.test) {
    spec.train = f.train.value_or(0);
    spec.val = f.val.value_or(0);
    spec.test = f.test.value_or(0);
  }

  detail::RunLog log(out);
  log.line("config subcommand=synth out=" + f.out + " images=" + std::to_string(spec.images()) +
           " train=" + std::to_string(spec.train) + " val=" + std::to_string(spec.val) + " test=" +
           std::to_string(spec.test) + " seed=" + std::to_string(f.seed) + " k=" + std::to_string(f.k) +
           " d=" + std::to_string(f.d) + " labels=" + std::to_string(f.labels) +
           " context=" + std::to_string(spec.context_labels.size()) + " noise=" + detail::num(f.noise) +
           " propagation=" + detail::num(f.propagation) + " signal=" + detail::num(f.signal) +
           " context_signal=" + detail::num(f.context_signal) + " seed_rate=" + detail::num(f.seed_rate) +
           " context_rate=" + detail::num(f.context_rate) + " presence=" + detail::num(f.presence));

  const Dataset ds = generate_synthetic(spec);
  write_dataset(ds.manifest, ds.records, f.out);
  std::ofstream meta(std::filesystem::path(f.out) / "synth.json", std::ios::trunc);
  if (!meta) throw IoError("cannot write synth.json in " + f.out);
  meta << synth_spec_json(spec).dump(2) << "\n";

  for (auto [a, b] : edge_list(spec.graph)) log.line("planted_edge " + std::to_string(a) + " " + std::to_string(b));
  log.line("wrote images=" + std::to_string(ds.records.size()) + " dir=" + f.out);
  return kOk;
}

struct AdjacencyFlags {
  std::string data;
  std::string out;
  double tau = 0.5;
};

inline int cmd_adjacency(const AdjacencyFlags& f, std::ostream& out) {
  if (!(f.tau >= 0.0 && f.tau <= 1.0)) throw ConfigError("--tau must lie in [0, 1], got " + detail::num(f.tau));
  const auto out_path = detail::or_default(f.out, std::filesystem::path(f.data) / "adjacency.bin");
  detail::RunLog log(out);
  log.line("config subcommand=adjacency data=" + f.data + " out=" + out_path.string() + " tau=" + detail::num(f.tau));

  const Dataset ds = load_dataset(f.data, Split::train);
  std::vector<LabelTensor> labels;
  for (const auto& r : ds.records) labels.push_back(r.labels);
  const auto stats = accumulate_stats(labels, ds.manifest.regions, ds.manifest.labels);
  const AdjacencyMatrix adj = build_adjacency(stats, f.tau);
  write_adjacency(adj, out_path);

  const auto edges = edge_list(adj.binary);
  log.line("train_images=" + std::to_string(stats.images) + " tau=" + detail::num(adj.tau) +
           " edges=" + std::to_string(edges.size()));
  for (auto [a, b] : edges) {
    log.line("edge " + std::to_string(a) + " " + std::to_string(b) + " jaccard=" + detail::num(adj.raw(a, b)));
  }
  return kOk;
}

struct TrainFlags {
  std::string data;
  std::string adjacency;
  std::string out;
  std::size_t epochs = 25;
  double lr = 1e-4;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  std::string model = "anaxnet";
  std::vector<std::size_t> gcn_dims;
};

inline std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s;
}

inline int cmd_train(const TrainFlags& f, std::ostream& out) {
  const ModelVariant variant = parse_variant(f.model);
  const Dataset ds = load_dataset(f.data);
  const auto& man = ds.manifest;

  ModelConfig config;
  config.regions = man.regions;
  config.features = man.features;
  config.labels = man.labels;
  config.seed = f.seed;
  config.variant = variant;
  config.gcn_dims = f.gcn_dims.empty() ? std::vector<std::size_t>{std::max<std::size_t>(1, man.features / 2), man.features}
                                       : f.gcn_dims;
  if (variant == ModelVariant::baseline_fc) config.gcn_dims.clear();
  config.validate();

  const auto adj_path = detail::or_default(f.adjacency, std::filesystem::path(f.data) / "adjacency.bin");
  std::filesystem::create_directories(f.out);
  detail::RunLog log(out);
  log.tee_to(std::filesystem::path(f.out) / "train.log");
  log.line("config subcommand=train data=" + f.data + " adjacency=" +
           (variant == ModelVariant::baseline_fc ? std::string("none") : adj_path.string()) + " out=" + f.out +
           " epochs=" + std::to_string(f.epochs) + " lr=" + detail::num(f.lr) + " batch=" + std::to_string(f.batch) +
           " seed=" + std::to_string(f.seed) + " model=" + to_string(variant) + " gcn_dims=" + join_dims(config.gcn_dims));

  Matrix propagation = Matrix::identity(man.regions);
  if (variant == ModelVariant::anaxnet) {
    const AdjacencyMatrix adj = read_adjacency(adj_path);
    if (adj.regions() != man.regions) {
      throw DataError("adjacency has k=" + std::to_string(adj.regions()) + " but dataset has k=" + std::to_string(man.regions));
    }
    propagation = adj.normalized;
  }

  const auto recs = detail::split_records(ds);
  TrainOptions opts;
  opts.epochs = f.epochs;
  opts.learning_rate = f.lr;
  opts.batch_size = f.batch;
  opts.seed = f.seed;
  const auto result = train(init_params(config), propagation, recs.train, recs.val, opts, [&](const EpochLog& e) {
    log.line("epoch=" + std::to_string(e.epoch) + " train_loss=" + detail::num(e.train_loss) +
             " val_macro_auc=" + detail::opt_num(e.val_macro));
  });

  const auto best = std::filesystem::path(f.out) / "model_best.bin";
  const auto final_path = std::filesystem::path(f.out) / "model_final.bin";
  save_checkpoint(result.best_params, config, best);
  save_checkpoint(result.final_params, config, final_path);
  log.line("saved best=" + best.string() + " best_epoch=" + std::to_string(result.best_epoch) +
           " best_val_macro_auc=" + detail::opt_num(result.best_val_macro) + " final=" + final_path.string());
  return kOk;
}

struct EvalFlags {
  std::string data;
  std::string checkpoint;
  std::string baseline;
  std::string adjacency;
  std::string out;
  std::string split = "test";
  bool oracle = false;
};

inline EvalReport evaluate_checkpoint(const std::filesystem::path& path, const Dataset& ds,
                                      const std::filesystem::path& adj_path) {
  const auto& man = ds.manifest;
  const Checkpoint ck = load_checkpoint(path);
  auto mismatch = [&](const char* what, std::size_t model, std::size_t data) {
    if (model != data) {
      throw DataError(std::string("checkpoint ") + what + "=" + std::to_string(model) + " does not match dataset " + what +
                      "=" + std::to_string(data) + " (" + path.string() + ")");
    }
  };
  mismatch("k", ck.config.regions, man.regions);
  mismatch("d", ck.config.features, man.features);
  mismatch("M", ck.config.labels, man.labels);
  Matrix propagation = Matrix::identity(man.regions);
  if (ck.config.variant == ModelVariant::anaxnet) {
    const AdjacencyMatrix adj = read_adjacency(adj_path);
    mismatch("k", adj.regions(), man.regions);
    propagation = adj.normalized;
  }
  return evaluate_model(ck.params, propagation, ds.records, man.region_names, man.label_names);
}

inline int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const Split split = parse_split(f.split);
  const auto adj_path = detail::or_default(f.adjacency, std::filesystem::path(f.data) / "adjacency.bin");
  detail::RunLog log(out);
  log.line("config subcommand=eval data=" + f.data + " checkpoint=" + (f.oracle ? std::string("oracle") : f.checkpoint) +
           " baseline=" + (f.baseline.empty() ? std::string("none") : f.baseline) + " adjacency=" + adj_path.string() +
           " split=" + f.split + " out=" + f.out);
  if (!f.oracle && f.checkpoint.empty()) throw ConfigError("eval needs --checkpoint (or --oracle)");

  const Dataset ds = load_dataset(f.data, split);
  if (ds.records.empty()) throw DataError("split '" + f.split + "' has no images");
  const auto& man = ds.manifest;

  EvalReport report;
  if (f.oracle) {
    std::vector<Matrix> scores;
    std::vector<LabelTensor> labels;
    for (const auto& r : ds.records) {
      scores.push_back(r.labels.as_matrix());
      labels.push_back(r.labels);
    }
    report = evaluate(scores, labels, man.region_names, man.label_names);
  } else {
    report = evaluate_checkpoint(f.checkpoint, ds, adj_path);
  }

  std::string text = format_report(report, f.oracle ? "oracle" : "model");
  if (!f.baseline.empty()) {
    const EvalReport base = evaluate_checkpoint(f.baseline, ds, adj_path);
    text += "\n" + format_comparison(report, "model", base, "baseline");
    const auto delta = compare(report, base);
    log.line("baseline_macro_auc=" + detail::opt_num(base.macro) + " delta_macro_auc=" + detail::opt_num(delta.macro));
  }

  std::filesystem::create_directories(f.out);
  const auto txt = std::filesystem::path(f.out) / "report.txt";
  const auto tsv = std::filesystem::path(f.out) / "report.tsv";
  std::ofstream(txt, std::ios::trunc) << text;
  std::ofstream(tsv, std::ios::trunc) << format_report_tsv(report);
  if (!std::filesystem::exists(txt) || !std::filesystem::exists(tsv)) throw IoError("failed writing reports to " + f.out);

  for (std::size_t m = 0; m < report.labels; ++m) {
    log.line("label=L" + std::to_string(m + 1) + " auc=" + detail::opt_num(report.per_label[m]));
  }
  log.line("images=" + std::to_string(ds.records.size()) + " macro_auc=" + detail::opt_num(report.macro) +
           " report=" + txt.string());
  return kOk;
}

struct GradcheckFlags {
  double h = 1e-3;
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  double tolerance = 1e-4;
  bool corrupt = false;
};

inline int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  if (!(f.h > 0.0)) throw ConfigError("--h must be positive");
  detail::RunLog log(out);
  log.line("config subcommand=gradcheck h=" + detail::num(f.h) + " seed=" + std::to_string(f.seed) +
           " seeds=" + std::to_string(f.seeds) + " tolerance=" + detail::num(f.tolerance) +
           " corrupt=" + (f.corrupt ? "1" : "0"));
  bool ok = true;
  for (std::size_t i = 0; i < f.seeds; ++i) {
    const auto run = run_model_gradcheck(f.seed + i, f.h, f.corrupt);
    const auto& r = run.result;
    const bool pass = r.max_relative_error < f.tolerance;
    ok = ok && pass;
    const auto& c = run.problem.config;
    log.line("seed=" + std::to_string(f.seed + i) + " k=" + std::to_string(c.regions) + " d=" + std::to_string(c.features) +
             " M=" + std::to_string(c.labels) + " coords=" + std::to_string(r.coords_checked) +
             " max_rel_err=" + detail::num(r.max_relative_error) + " worst=" + r.worst_param + "[" +
             std::to_string(r.worst_index) + "] " + (pass ? "PASS" : "FAIL"));
  }
  log.line(ok ? "gradcheck PASS" : "gradcheck FAIL");
  return ok ? kOk : kCheckFailed;
}

/// Parses arguments and runs one subcommand. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Anatomy-aware multi-label region classifier"};
  app.require_subcommand(1);

  SynthFlags synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic region-feature dataset");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--images", synth.images, "Total images, split 70/10/20")->capture_default_str();
  s->add_option("--train", synth.train, "Training images (overrides --images split)");
  s->add_option("--val", synth.val, "Validation images");
  s->add_option("--test", synth.test, "Test images");
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--k", synth.k, "Regions")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--d", synth.d, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--labels", synth.labels, "Labels")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--context", synth.context, "Context-coded labels (the last N), default min(2, M)");
  s->add_option("--noise", synth.noise, "Noise stddev")->capture_default_str();
  s->add_option("--propagation", synth.propagation, "Label spread probability along planted edges")->capture_default_str();
  s->add_option("--signal", synth.signal, "Ordinary label signal magnitude")->capture_default_str();
  s->add_option("--context-signal", synth.context_signal, "Context label signal magnitude")->capture_default_str();
  s->add_option("--seed-rate", synth.seed_rate, "Ordinary label seed probability")->capture_default_str();
  s->add_option("--context-rate", synth.context_rate, "Context label positive probability")->capture_default_str();
  s->add_option("--presence", synth.presence, "Region detection probability")->capture_default_str();

  AdjacencyFlags adjf;
  auto* a = app.add_subcommand("adjacency", "Build the region adjacency from the training split");
  a->add_option("--data", adjf.data, "Dataset directory")->required();
  a->add_option("--out", adjf.out, "Output file (default DATA/adjacency.bin)");
  a->add_option("--tau", adjf.tau, "Jaccard threshold")->capture_default_str();

  TrainFlags trainf;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", trainf.data, "Dataset directory")->required();
  t->add_option("--adjacency", trainf.adjacency, "Adjacency file (default DATA/adjacency.bin)");
  t->add_option("--out", trainf.out, "Output directory for checkpoints and train.log")->required();
  t->add_option("--epochs", trainf.epochs)->capture_default_str();
  t->add_option("--lr", trainf.lr)->capture_default_str();
  t->add_option("--batch", trainf.batch)->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--seed", trainf.seed)->capture_default_str();
  t->add_option("--model", trainf.model)->capture_default_str()->check(CLI::IsMember({"anaxnet", "baseline-fc"}));
  t->add_option("--gcn-dims", trainf.gcn_dims, "Graph layer output dims (default d/2 d)");

  EvalFlags evalf;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--data", evalf.data, "Dataset directory")->required();
  e->add_option("--checkpoint", evalf.checkpoint, "Model checkpoint");
  e->add_option("--baseline", evalf.baseline, "Second checkpoint to compare against");
  e->add_option("--adjacency", evalf.adjacency, "Adjacency file (default DATA/adjacency.bin)");
  e->add_option("--out", evalf.out, "Directory for report.txt and report.tsv")->required();
  e->add_option("--split", evalf.split)->capture_default_str()->check(CLI::IsMember({"train", "val", "test"}));
  e->add_flag("--oracle", evalf.oracle, "Score with the ground-truth labels (test hook)");

  GradcheckFlags gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of the full model gradient");
  g->set_help_flag("--help", "Print this help message and exit");
  g->add_option("--h", gc.h, "Central difference step")->capture_default_str();
  g->add_option("--seed", gc.seed, "First toy-problem seed")->capture_default_str();
  g->add_option("--seeds", gc.seeds, "Number of consecutive seeds")->capture_default_str();
  g->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  g->add_flag("--corrupt", gc.corrupt, "Perturb one analytic gradient entry (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (a->parsed()) return cmd_adjacency(adjf, out);
    if (t->parsed()) return cmd_train(trainf, out);
    if (e->parsed()) return cmd_eval(evalf, out);
    if (g->parsed()) return cmd_gradcheck(gc, out);
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kUsage;
  } catch (const IoError& ex) {
    err << "io error: " << ex.what() << "\n";
    return kIo;
  } catch (const FormatError& ex) {
    err << "format error: " << ex.what() << "\n";
    return kIo;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << "\n";
    return kIo;
  } catch (const NumericError& ex) {
    err << "numeric error: " << ex.what() << "\n";
    return kCheckFailed;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace anaxnet::cli
