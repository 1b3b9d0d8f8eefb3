/*
 * Copyright (C) 2026 The mdzr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mdzr/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mdzr/corpus.hpp"
#include "mdzr/evaluation.hpp"
#include "mdzr/io_util.hpp"
#include "mdzr/model_store.hpp"
#include "mdzr/rng.hpp"

namespace mdzr::cli {

namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::MalformedArchive:
    case ErrorKind::NoDex:
    case ErrorKind::DecompressFailed:
    case ErrorKind::SchemaError:
    case ErrorKind::DuplicatePath:
    case ErrorKind::BadMagic:
    case ErrorKind::TruncatedFile:
    case ErrorKind::IndexOutOfPool:
    case ErrorKind::MalformedCodeItem:
    case ErrorKind::IoError:
    case ErrorKind::CorruptTensor:
    case ErrorKind::VersionUnsupported:
      return 2;
    default:
      return 3;
  }
}

/// Flags shared by every training-shaped subcommand.
struct HyperFlags {
  uint32_t seq_len = 512;
  uint32_t embed_dim = 64;
  uint32_t filters = 512;
  uint32_t kernel = 3;
  uint32_t hidden = 256;
  double dropout = 0.5;
  uint32_t epochs = 10;
  double lr = 1e-3;
  uint32_t batch = 32;
  bool no_batchnorm = false;
  std::string task = "detection";
  std::optional<uint32_t> vocab_cap;
  uint32_t preset = 0;  // 0 = not given; 1..4 mirror the model-size presets

  enum class TaskFlag { None, Optional, Required };

  void add_to(CLI::App* cmd, TaskFlag task_flag) {
    cmd->add_option("--seq-len", seq_len, "uniform sequence length L");
    cmd->add_option("--embed-dim", embed_dim, "embedding dimension K");
    cmd->add_option("--filters", filters, "convolution filter count");
    cmd->add_option("--kernel", kernel, "convolution window width");
    cmd->add_option("--hidden", hidden, "dense layer width");
    cmd->add_option("--dropout", dropout, "dropout rate");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--batch", batch, "mini-batch size");
    cmd->add_flag("--no-batchnorm", no_batchnorm, "disable batch normalization");
    cmd->add_option("--vocab-cap", vocab_cap, "keep only the N most frequent tokens");
    cmd->add_option("--preset", preset, "model size preset 1..4 (vocab cap 100k/70k/50k/20k)")
        ->check(CLI::Range(1u, 4u));
    if (task_flag != TaskFlag::None) {
      auto* opt = cmd->add_option("--task", task, "detection|attribution")
                      ->check(CLI::IsMember({"detection", "attribution"}));
      if (task_flag == TaskFlag::Required) opt->required();
    }
  }

  nn::Task parsed_task() const {
    return task == "attribution" ? nn::Task::Attribution : nn::Task::Detection;
  }

  nn::Hyperparams to_hyperparams() const {
    nn::Hyperparams hp;
    hp.seq_len = seq_len;
    hp.embed_dim = embed_dim;
    hp.filters = filters;
    hp.kernel = kernel;
    hp.hidden = hidden;
    hp.dropout_rate = dropout;
    hp.epochs = epochs;
    hp.learning_rate = lr;
    hp.batch_size = batch;
    hp.batchnorm = !no_batchnorm;
    hp.task = parsed_task();
    return hp;
  }

  /// Explicit --vocab-cap wins; otherwise a preset; otherwise the smallest
  /// preset, keeping the desk-scale default cheap.
  std::optional<uint32_t> effective_cap() const {
    if (vocab_cap) return vocab_cap;
    static constexpr uint32_t kPresetCaps[] = {100000, 70000, 50000, 20000};
    if (preset >= 1 && preset <= 4) return kPresetCaps[preset - 1];
    return kPresetCaps[3];
  }
};

struct CommonFlags {
  uint64_t seed = 42;
  uint32_t threads = 1;
  bool paper_compat = false;
  bool paper_formula_fpr = false;
  double threshold = 0.5;
  std::string report_path;
  std::string csv_path;
  std::vector<std::string> api_prefixes;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "PRNG seed; all randomness flows from it");
    cmd->add_option("--threads", threads, "worker threads for per-app preprocessing")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--paper-compat", paper_compat, "map unknown tokens to 0 instead of UNK");
    cmd->add_flag("--paper-formula-fpr", paper_formula_fpr,
                  "compute FPR as FP/(FP+TP) for comparison");
    cmd->add_option("--threshold", threshold, "detection decision threshold");
    cmd->add_option("--report", report_path, "write the JSON report here");
    cmd->add_option("--csv", csv_path, "write a flattened CSV of the report here");
    cmd->add_option("--api-prefix", api_prefixes,
                    "keep only calls starting with one of these prefixes");
  }

  eval::PipelineOptions pipeline_options(const HyperFlags& hyper) const {
    eval::PipelineOptions opts;
    opts.vocab_cap = hyper.effective_cap();
    opts.paper_compat_unk_zero = paper_compat;
    opts.paper_formula_fpr = paper_formula_fpr;
    opts.threshold = threshold;
    return opts;
  }
};

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

void write_report(const CommonFlags& common, const eval::ExperimentReport& report) {
  if (!common.report_path.empty()) {
    write_text(common.report_path, report.to_json().dump(2) + "\n");
  }
  if (!common.csv_path.empty()) {
    write_text(common.csv_path, report.to_csv());
  }
}

store::ModelArtifact load_model_checked(const std::string& model_path,
                                        const std::string& dict_path,
                                        seq::ApiDictionary* dict_out) {
  store::ModelArtifact artifact = store::load_model(model_path);
  seq::ApiDictionary dict = seq::ApiDictionary::load(dict_path);
  if (dict.digest() != artifact.dict_digest) {
    raise(ErrorKind::ConfigError,
          "dictionary " + dict_path + " does not match the one the model was trained with");
  }
  if (dict.size() != artifact.params.hp.vocab_size) {
    raise(ErrorKind::ConfigError, "dictionary size does not match the model vocabulary");
  }
  *dict_out = std::move(dict);
  return artifact;
}

/// Preprocess many apps, optionally in parallel; results keep input order.
std::vector<std::pair<dex::ApiCallSequence, std::string>> load_apps(
    const std::vector<std::string>& paths, uint32_t threads,
    const std::vector<std::string>& prefix_filter) {
  std::vector<std::pair<dex::ApiCallSequence, std::string>> out(paths.size());
  auto worker = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < paths.size(); i += step) {
      try {
        out[i].first = corpus::load_call_sequence(paths[i], nullptr, prefix_filter);
      } catch (const std::exception& e) {
        out[i].second = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (uint32_t t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (std::thread& t : pool) t.join();
  }
  return out;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::string dict_out;
  HyperFlags hyper;
  CommonFlags common;
};

int cmd_train(const TrainArgs& args) {
  Diagnostics diagnostics;
  const corpus::LabeledSequences data = corpus::load_corpus(
      args.manifest, args.common.threads, false, &diagnostics, args.common.api_prefixes);
  for (const std::string& d : diagnostics) std::cerr << "note: " << d << '\n';
  if (data.size() == 0) raise(ErrorKind::EmptyCorpus, "manifest lists no apps");

  nn::Hyperparams hp = args.hyper.to_hyperparams();
  if (hp.task == nn::Task::Detection) {
    if (data.manifest.count(apk::Label::Malware) == 0) {
      raise(ErrorKind::ConfigError, "detection task needs malware samples; manifest has none");
    }
    if (data.manifest.count(apk::Label::Benign) == 0) {
      raise(ErrorKind::ConfigError, "detection task needs benign samples; manifest has none");
    }
  }

  std::vector<size_t> all(data.size());
  std::iota(all.begin(), all.end(), size_t{0});
  const eval::PipelineOptions opts = args.common.pipeline_options(args.hyper);
  const eval::TrainedModel model =
      eval::train_pipeline(data, all, hp, args.common.seed, opts);

  for (size_t e = 0; e < model.epoch_mean_loss.size(); ++e) {
    std::cerr << "epoch " << e << " mean loss " << model.epoch_mean_loss[e] << '\n';
  }

  const std::string dict_path = args.dict_out.empty() ? args.out + ".dict" : args.dict_out;
  model.dict.save(dict_path);
  store::save_model(model.params, model.dict.digest(), model.class_names, args.out);

  std::cout << "model\t" << args.out << "\tdict\t" << dict_path << "\tvocab\t"
            << model.dict.size() << "\tfinal_loss\t" << model.epoch_mean_loss.back() << '\n';

  if (!args.common.report_path.empty()) {
    eval::Json j;
    j["kind"] = "train";
    j["seed"] = args.common.seed;
    j["task"] = args.hyper.task;
    j["vocab_size"] = model.dict.size();
    j["families"] = model.class_names;
    j["epoch_mean_loss"] = model.epoch_mean_loss;
    write_text(args.common.report_path, j.dump(2) + "\n");
  }
  return 0;
}

// --- detect / attribute ---------------------------------------------------

struct ScanArgs {
  std::string model;
  std::string dict;
  std::vector<std::string> apps;
  uint32_t topk = 1;
  CommonFlags common;
};

int cmd_detect(const ScanArgs& args) {
  seq::ApiDictionary dict;
  const store::ModelArtifact artifact = load_model_checked(args.model, args.dict, &dict);
  if (artifact.params.hp.task != nn::Task::Detection) {
    raise(ErrorKind::ConfigError, "model was trained for attribution, not detection");
  }

  const auto loaded = load_apps(args.apps, args.common.threads, args.common.api_prefixes);
  size_t failures = 0;
  for (size_t i = 0; i < loaded.size(); ++i) {
    if (!loaded[i].second.empty()) {
      ++failures;
      std::cerr << "error: " << args.apps[i] << ": " << loaded[i].second << '\n';
      continue;
    }
    const seq::UnifiedSequence x =
        seq::unify(seq::discretize(loaded[i].first, dict, args.common.paper_compat),
                   artifact.params.hp.seq_len);
    const nn::Prediction pred = nn::predict(artifact.params, x, args.common.threshold);
    char score[32];
    std::snprintf(score, sizeof(score), "%.6f", pred.malware_score);
    std::cout << args.apps[i] << '\t' << score << '\t'
              << (pred.is_malware ? "malware" : "benign") << '\n';
  }
  return failures == loaded.size() && !loaded.empty() ? 2 : 0;
}

int cmd_attribute(const ScanArgs& args) {
  seq::ApiDictionary dict;
  const store::ModelArtifact artifact = load_model_checked(args.model, args.dict, &dict);
  if (artifact.params.hp.task != nn::Task::Attribution) {
    raise(ErrorKind::ConfigError, "model was trained for detection, not attribution");
  }
  const auto& families = artifact.class_names;
  const uint32_t topk =
      std::min<uint32_t>(std::max<uint32_t>(args.topk, 1), static_cast<uint32_t>(families.size()));

  eval::Json report_apps = eval::Json::array();
  const auto loaded = load_apps(args.apps, args.common.threads, args.common.api_prefixes);
  size_t failures = 0;
  for (size_t i = 0; i < loaded.size(); ++i) {
    if (!loaded[i].second.empty()) {
      ++failures;
      std::cerr << "error: " << args.apps[i] << ": " << loaded[i].second << '\n';
      continue;
    }
    const seq::UnifiedSequence x =
        seq::unify(seq::discretize(loaded[i].first, dict, args.common.paper_compat),
                   artifact.params.hp.seq_len);
    const nn::Prediction pred = nn::predict(artifact.params, x);

    std::vector<uint32_t> order(pred.probs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return pred.probs[a] > pred.probs[b]; });
    for (uint32_t r = 0; r < topk; ++r) {
      char prob[32];
      std::snprintf(prob, sizeof(prob), "%.6f", pred.probs[order[r]]);
      std::cout << args.apps[i] << '\t' << (r + 1) << '\t' << families[order[r]] << '\t' << prob
                << '\n';
    }

    eval::Json app;
    app["path"] = args.apps[i];
    app["family"] = families[pred.argmax];
    app["probs"] = pred.probs;
    report_apps.push_back(app);
  }
  if (!args.common.report_path.empty()) {
    eval::Json j;
    j["kind"] = "attribute";
    j["families"] = families;
    j["apps"] = report_apps;
    write_text(args.common.report_path, j.dump(2) + "\n");
  }
  return failures == loaded.size() && !loaded.empty() ? 2 : 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string manifest;
  uint32_t kfold = 10;
  bool no_stratify = false;
  HyperFlags hyper;
  CommonFlags common;
};

int cmd_eval(const EvalArgs& args) {
  const corpus::LabeledSequences data = corpus::load_corpus(
      args.manifest, args.common.threads, false, nullptr, args.common.api_prefixes);
  const eval::ExperimentReport report =
      eval::run_kfold_eval(data, args.kfold, args.hyper.to_hyperparams(), args.common.seed,
                           !args.no_stratify, args.common.pipeline_options(args.hyper));
  for (const eval::ExperimentPoint& p : report.points) {
    std::cout << "fold\t" << p.axis["fold"].get<uint32_t>() << "\tweighted_f1\t"
              << p.metrics.weighted_f1 << "\taccuracy\t" << p.metrics.accuracy << '\n';
  }
  std::cout << "aggregate\tweighted_f1\t" << report.aggregate->weighted_f1 << "\tfpr\t"
            << report.aggregate->fpr << '\n';
  write_report(args.common, report);
  return 0;
}

// --- experiment -------------------------------------------------------------

struct ExperimentArgs {
  std::string manifest;
  std::string model;
  std::string dict;
  std::string blocks = "4,16,64,max";
  std::string family;
  std::string train_sizes = "0,5,10,20";
  double test_fraction = 0.2;
  HyperFlags hyper;
  CommonFlags common;
};

std::vector<uint32_t> parse_uint_list(const std::string& text, bool allow_max) {
  std::vector<uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (allow_max && item == "max") {
      out.push_back(0);  // sentinel: element-level
      continue;
    }
    try {
      out.push_back(static_cast<uint32_t>(std::stoul(item)));
    } catch (const std::exception&) {
      raise(ErrorKind::ConfigError, "bad list item '" + item + "'");
    }
  }
  if (out.empty()) raise(ErrorKind::ConfigError, "empty list '" + text + "'");
  return out;
}

int cmd_experiment_shuffle(const ExperimentArgs& args) {
  const corpus::LabeledSequences data = corpus::load_corpus(
      args.manifest, args.common.threads, false, nullptr, args.common.api_prefixes);
  const eval::PipelineOptions opts = args.common.pipeline_options(args.hyper);
  const std::vector<uint32_t> blocks = parse_uint_list(args.blocks, true);

  eval::TrainedModel model;
  corpus::LabeledSequences test;
  if (!args.model.empty()) {
    // Reuse a trained model; the whole manifest is the test set.
    if (args.dict.empty()) raise(ErrorKind::ConfigError, "--model requires --dict");
    seq::ApiDictionary dict;
    store::ModelArtifact artifact = load_model_checked(args.model, args.dict, &dict);
    model.params = std::move(artifact.params);
    model.dict = std::move(dict);
    model.class_names = std::move(artifact.class_names);
    test = data;
  } else {
    // Stratified holdout: train on the big side, shuffle-test on the rest.
    const uint32_t k = std::max<uint32_t>(2, static_cast<uint32_t>(1.0 / args.test_fraction));
    const auto folds = eval::kfold_split(data.manifest, k, args.common.seed, true);
    model = eval::train_pipeline(data, folds[0].train_idx, args.hyper.to_hyperparams(),
                                 args.common.seed, opts);
    for (const size_t idx : folds[0].test_idx) {
      test.manifest.records.push_back(data.manifest.records[idx]);
      test.sequences.push_back(data.sequences[idx]);
    }
  }

  const eval::ExperimentReport report =
      eval::run_shuffle_experiment(model, test, blocks, args.common.seed, opts);
  for (const eval::ExperimentPoint& p : report.points) {
    std::cout << "blocks\t" << p.axis["blocks"].dump() << "\tweighted_f1\t"
              << p.metrics.weighted_f1 << '\n';
  }
  write_report(args.common, report);
  return 0;
}

int cmd_experiment_unknown_family(const ExperimentArgs& args) {
  const corpus::LabeledSequences data = corpus::load_corpus(
      args.manifest, args.common.threads, false, nullptr, args.common.api_prefixes);
  const eval::ExperimentReport report = eval::run_unknown_family_experiment(
      data, args.family, parse_uint_list(args.train_sizes, false), args.hyper.to_hyperparams(),
      args.common.seed, args.common.pipeline_options(args.hyper));
  for (const eval::ExperimentPoint& p : report.points) {
    std::cout << "n_train\t" << p.axis["n_train"].get<uint32_t>() << "\tdetection_recall\t"
              << p.metrics.per_class[1].recall << '\n';
  }
  write_report(args.common, report);
  return 0;
}

int cmd_experiment_time_split(const ExperimentArgs& args) {
  const corpus::LabeledSequences data = corpus::load_corpus(
      args.manifest, args.common.threads, false, nullptr, args.common.api_prefixes);
  const eval::ExperimentReport report =
      eval::run_time_split_experiment(data, args.hyper.to_hyperparams(), args.common.seed,
                                      args.common.pipeline_options(args.hyper));
  for (const eval::ExperimentPoint& p : report.points) {
    std::cout << "train_year\t" << p.axis["train_year"].get<int>() << "\ttest_year\t"
              << p.axis["test_year"].get<int>() << (p.axis.contains("holdout") ? "\tholdout" : "")
              << "\tweighted_f1\t" << p.metrics.weighted_f1 << '\n';
  }
  write_report(args.common, report);
  return 0;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string manifest;
  std::string model;
  std::string dict;
  CommonFlags common;
};

int cmd_bench(const BenchArgs& args) {
  const apk::CorpusManifest manifest = apk::load_manifest(args.manifest);
  const std::string base_dir = fs::path(args.manifest).parent_path().string();

  seq::ApiDictionary dict;
  store::ModelArtifact artifact = load_model_checked(args.model, args.dict, &dict);
  eval::TrainedModel model;
  model.params = std::move(artifact.params);
  model.dict = std::move(dict);
  model.class_names = std::move(artifact.class_names);

  eval::PipelineOptions opts;
  opts.paper_compat_unk_zero = args.common.paper_compat;
  opts.threshold = args.common.threshold;
  const eval::BenchReport report = eval::benchmark_runtime(manifest, base_dir, model, opts);

  for (const eval::BenchEntry& e : report.entries) {
    if (e.error.empty()) {
      std::cout << e.path << '\t' << e.apk_size << '\t' << e.dex_size << '\t' << e.preprocess_ms
                << '\t' << e.predict_ms << '\n';
    } else {
      std::cerr << "error: " << e.path << ": " << e.error << '\n';
    }
  }
  std::cout << "corr_preprocess_dex\t" << report.corr_preprocess_dex << "\tcorr_preprocess_apk\t"
            << report.corr_preprocess_apk << '\n';
  if (!args.common.report_path.empty()) {
    write_text(args.common.report_path, report.to_json().dump(2) + "\n");
  }
  return 0;
}

// --- synth --------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  uint32_t families = 1;
  uint32_t samples = 200;
  uint32_t motifs = 2;
  uint32_t vocab = 400;
  uint32_t min_len = 200;
  uint32_t max_len = 600;
  double noise = 0.0;
  double year_drift = 0.0;
  uint32_t years = 1;
  CommonFlags common;
};

int cmd_synth(const SynthArgs& args) {
  eval::SynthSpec spec;
  spec.n_families = args.families;
  spec.samples_per_class = args.samples;
  spec.motifs_per_family = args.motifs;
  spec.vocab_size = args.vocab;
  spec.min_len = args.min_len;
  spec.max_len = args.max_len;
  spec.noise_rate = args.noise;
  spec.year_drift = args.year_drift;
  spec.n_years = args.years;

  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(spec, args.common.seed);

  const fs::path root(args.out_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + args.out_dir + ": " + ec.message());

  for (size_t i = 0; i < data.size(); ++i) {
    const fs::path path = root / data.manifest.records[i].app_path;
    fs::create_directories(path.parent_path(), ec);
    if (ec) raise(ErrorKind::IoError, "cannot create " + path.parent_path().string());
    corpus::save_call_sequence(data.sequences[i], path.string());
  }
  apk::save_manifest(data.manifest, (root / "manifest.tsv").string());

  std::cout << "manifest\t" << (root / "manifest.tsv").string() << "\tapps\t" << data.size()
            << "\tfamilies\t" << args.families << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Android malware detection and family attribution from API call sequences"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model from a labeled manifest");
  train_cmd->add_option("--manifest", train_args.manifest, "labeled corpus manifest")->required();
  train_cmd->add_option("--out", train_args.out, "output model path")->required();
  train_cmd->add_option("--dict", train_args.dict_out, "output dictionary path (default <out>.dict)");
  train_args.hyper.add_to(train_cmd, HyperFlags::TaskFlag::Required);
  train_args.common.add_to(train_cmd);

  ScanArgs detect_args;
  auto* detect_cmd = app.add_subcommand("detect", "score apps as benign or malware");
  detect_cmd->add_option("--model", detect_args.model, "trained detection model")->required();
  detect_cmd->add_option("--dict", detect_args.dict, "dictionary the model was trained with")
      ->required();
  detect_cmd->add_option("apps", detect_args.apps, "APK/DEX/call-list files")->required();
  detect_args.common.add_to(detect_cmd);

  ScanArgs attribute_args;
  auto* attribute_cmd = app.add_subcommand("attribute", "attribute malware to a family");
  attribute_cmd->add_option("--model", attribute_args.model, "trained attribution model")
      ->required();
  attribute_cmd->add_option("--dict", attribute_args.dict, "dictionary the model was trained with")
      ->required();
  attribute_cmd->add_option("apps", attribute_args.apps, "APK/DEX/call-list files")->required();
  attribute_cmd->add_option("--topk", attribute_args.topk, "families to print per app");
  attribute_args.common.add_to(attribute_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "k-fold cross-validation on a manifest");
  eval_cmd->add_option("--manifest", eval_args.manifest, "labeled corpus manifest")->required();
  eval_cmd->add_option("--kfold", eval_args.kfold, "fold count")->check(CLI::Range(2u, 1000u));
  eval_cmd->add_flag("--no-stratify", eval_args.no_stratify, "disable stratified folds");
  eval_args.hyper.add_to(eval_cmd, HyperFlags::TaskFlag::Optional);
  eval_args.common.add_to(eval_cmd);

  auto* experiment_cmd = app.add_subcommand("experiment", "robustness experiment drivers");
  experiment_cmd->require_subcommand(1);

  ExperimentArgs shuffle_args;
  auto* shuffle_cmd =
      experiment_cmd->add_subcommand("shuffle", "block-shuffle the test sequences and track F1");
  shuffle_cmd->add_option("--manifest", shuffle_args.manifest, "labeled corpus manifest")
      ->required();
  shuffle_cmd->add_option("--blocks", shuffle_args.blocks,
                          "comma list of block counts; `max` = one call per block");
  shuffle_cmd->add_option("--model", shuffle_args.model, "reuse a trained model");
  shuffle_cmd->add_option("--dict", shuffle_args.dict, "dictionary for --model");
  shuffle_cmd->add_option("--test-fraction", shuffle_args.test_fraction,
                          "holdout fraction when training in-place");
  shuffle_args.hyper.add_to(shuffle_cmd, HyperFlags::TaskFlag::None);
  shuffle_args.common.add_to(shuffle_cmd);

  ExperimentArgs unknown_args;
  auto* unknown_cmd = experiment_cmd->add_subcommand(
      "unknown-family", "hold a family out, plant n samples, track detection recall");
  unknown_cmd->add_option("--manifest", unknown_args.manifest, "labeled corpus manifest")
      ->required();
  unknown_cmd->add_option("--family", unknown_args.family, "family to hold out")->required();
  unknown_cmd->add_option("--train-sizes", unknown_args.train_sizes,
                          "comma list of planted training sample counts");
  unknown_args.hyper.add_to(unknown_cmd, HyperFlags::TaskFlag::None);
  unknown_args.common.add_to(unknown_cmd);

  ExperimentArgs time_args;
  auto* time_cmd = experiment_cmd->add_subcommand(
      "time-split", "train on one year, evaluate on the others");
  time_cmd->add_option("--manifest", time_args.manifest, "labeled corpus manifest")->required();
  time_args.hyper.add_to(time_cmd, HyperFlags::TaskFlag::None);
  time_args.common.add_to(time_cmd);

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "per-app preprocessing/prediction timing");
  bench_cmd->add_option("--manifest", bench_args.manifest, "manifest of APK paths")->required();
  bench_cmd->add_option("--model", bench_args.model, "trained model")->required();
  bench_cmd->add_option("--dict", bench_args.dict, "dictionary")->required();
  bench_args.common.add_to(bench_cmd);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth_cmd->add_option("--families", synth_args.families, "malware family count");
  synth_cmd->add_option("--samples", synth_args.samples, "samples per class");
  synth_cmd->add_option("--motifs", synth_args.motifs, "motifs per family");
  synth_cmd->add_option("--vocab", synth_args.vocab, "synthetic vocabulary size");
  synth_cmd->add_option("--min-len", synth_args.min_len, "minimum sequence length");
  synth_cmd->add_option("--max-len", synth_args.max_len, "maximum sequence length");
  synth_cmd->add_option("--noise", synth_args.noise, "per-token motif corruption rate");
  synth_cmd->add_option("--year-drift", synth_args.year_drift,
                        "background distribution shift per year step");
  synth_cmd->add_option("--years", synth_args.years, "number of distinct years");
  synth_args.common.add_to(synth_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    std::cerr << app.help() << '\n';
    return 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*detect_cmd) return cmd_detect(detect_args);
    if (*attribute_cmd) return cmd_attribute(attribute_args);
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*experiment_cmd) {
      if (*shuffle_cmd) return cmd_experiment_shuffle(shuffle_args);
      if (*unknown_cmd) return cmd_experiment_unknown_family(unknown_args);
      if (*time_cmd) return cmd_experiment_time_split(time_args);
    }
    if (*bench_cmd) return cmd_bench(bench_args);
    if (*synth_cmd) return cmd_synth(synth_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace mdzr::cli
