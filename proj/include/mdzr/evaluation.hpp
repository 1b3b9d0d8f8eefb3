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

#ifndef MDZR_EVALUATION_HPP
#define MDZR_EVALUATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdzr/corpus.hpp"
#include "mdzr/neuralnet.hpp"
#include "mdzr/seq_pipeline.hpp"

namespace mdzr::eval {

using Json = nlohmann::ordered_json;

/// One-vs-rest counts for a single class.
struct ClassCounts {
  uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  uint64_t support() const { return tp + fn; }
  uint64_t total() const { return tp + fp + fn + tn; }
};

/// Raw confusion matrix, [actual][predicted]. For detection the classes are
/// {benign, malware} with malware as the positive class; for attribution one
/// row/column per family.
struct ConfusionCounts {
  std::vector<std::string> class_names;
  std::vector<uint64_t> matrix;  // C*C row-major

  static ConfusionCounts binary(uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn);
  static ConfusionCounts from_predictions(std::vector<std::string> class_names,
                                          std::span<const uint32_t> y_true,
                                          std::span<const uint32_t> y_pred);

  size_t num_classes() const { return class_names.size(); }
  uint64_t& at(size_t actual, size_t predicted);
  uint64_t at(size_t actual, size_t predicted) const;
  uint64_t total() const;
  uint64_t correct() const;
  ClassCounts one_vs_rest(size_t cls) const;
  void merge(const ConfusionCounts& other);
  void validate() const;  // InconsistentCounts
};

struct ClassMetrics {
  std::string name;
  uint64_t support = 0;
  double precision = 0, recall = 0, f1 = 0, fpr = 0, fnr = 0;
  // 0/0 components report 0 with the flag cleared.
  bool precision_defined = true, recall_defined = true, f1_defined = true, fpr_defined = true,
       fnr_defined = true;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
  double accuracy = 0;
  /// Positive-class rates for the binary detection layout; support-weighted
  /// one-vs-rest rates otherwise.
  double fpr = 0, fnr = 0;
  bool any_undefined = false;
  ConfusionCounts counts;

  Json to_json() const;
};

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R), FNR = FN/(FN+TP),
/// ACC = correct/total. FPR = FP/(FP+TN); `paper_formula_fpr` switches to the
/// FP/(FP+TP) variant for comparison runs.
MetricsReport compute_metrics(const ConfusionCounts& counts, bool paper_formula_fpr = false);

struct FoldSplit {
  std::vector<size_t> train_idx, test_idx;
};

/// k disjoint folds covering the corpus, sizes differing by at most one,
/// stratified by label and family by default, deterministic per seed.
std::vector<FoldSplit> kfold_split(const apk::CorpusManifest& manifest, uint32_t k, uint64_t seed,
                                   bool stratify = true);

/// Pipeline knobs shared by the experiment drivers and the CLI.
struct PipelineOptions {
  std::optional<uint32_t> vocab_cap;
  bool paper_compat_unk_zero = false;  // discretize unknown tokens to 0
  bool paper_formula_fpr = false;
  double threshold = 0.5;
};

/// A trained classifier bound to the dictionary built from its training
/// split.
struct TrainedModel {
  nn::ModelParams params;
  seq::ApiDictionary dict;
  std::vector<std::string> class_names;  // families for attribution, empty otherwise
  std::vector<double> epoch_mean_loss;
};

std::vector<uint32_t> make_labels(const apk::CorpusManifest& manifest, nn::Task task,
                                  const std::vector<std::string>& families);

/// Dictionary built on the training split only; test-time novel tokens take
/// the UNK path.
TrainedModel train_pipeline(const corpus::LabeledSequences& data,
                            std::span<const size_t> train_idx, nn::Hyperparams hp, uint64_t seed,
                            const PipelineOptions& opts,
                            std::vector<std::string> class_names = {});

MetricsReport evaluate_model(const TrainedModel& model, const corpus::LabeledSequences& data,
                             std::span<const size_t> test_idx, const PipelineOptions& opts);

struct ExperimentPoint {
  Json axis;
  MetricsReport metrics;
  double wall_ms = 0;
};

struct ExperimentReport {
  std::string kind;
  uint64_t seed = 0;
  Json config;
  std::vector<ExperimentPoint> points;
  std::optional<MetricsReport> aggregate;  // pooled over folds, when meaningful

  Json to_json() const;
  std::string to_csv() const;
};

ExperimentReport run_kfold_eval(const corpus::LabeledSequences& data, uint32_t k,
                                nn::Hyperparams hp, uint64_t seed, bool stratify,
                                const PipelineOptions& opts);

/// Trains without the target family plus n planted samples, reports detection
/// recall on the remaining family samples for each n (n = 0 is the zero-shot
/// point).
ExperimentReport run_unknown_family_experiment(const corpus::LabeledSequences& data,
                                               const std::string& family,
                                               const std::vector<uint32_t>& train_sizes,
                                               nn::Hyperparams hp, uint64_t seed,
                                               const PipelineOptions& opts);

/// Applies block_shuffle to every test sequence before unify and reports the
/// metric per block count. Block count 0 means element-level (one call per
/// block).
ExperimentReport run_shuffle_experiment(const TrainedModel& model,
                                        const corpus::LabeledSequences& test,
                                        const std::vector<uint32_t>& block_counts, uint64_t seed,
                                        const PipelineOptions& opts);

/// Trains per year bucket and evaluates every other year; adds a same-year
/// 80/20 holdout point per train year for reference.
ExperimentReport run_time_split_experiment(const corpus::LabeledSequences& data,
                                           nn::Hyperparams hp, uint64_t seed,
                                           const PipelineOptions& opts);

struct BenchEntry {
  std::string path;
  uint64_t apk_size = 0;
  uint64_t dex_size = 0;
  double preprocess_ms = 0;
  double predict_ms = 0;
  std::string error;  // empty = success
};

struct BenchReport {
  std::vector<BenchEntry> entries;
  double corr_preprocess_dex = 0;
  double corr_preprocess_apk = 0;
  double predict_mean_ms = 0;
  double predict_stddev_ms = 0;

  Json to_json() const;
};

/// Wall-clock preprocessing (extract+discretize+unify) and prediction per
/// app, single-threaded; per-app failures are recorded, not fatal.
BenchReport benchmark_runtime(const apk::CorpusManifest& manifest, const std::string& base_dir,
                              const TrainedModel& model, const PipelineOptions& opts);

double pearson(std::span<const double> xs, std::span<const double> ys);

/// Synthetic corpus: benign apps draw from a background token distribution;
/// each malware family plants its distinctive 3-token motifs. Deterministic
/// per seed.
struct SynthSpec {
  uint32_t n_families = 1;
  uint32_t motifs_per_family = 2;
  uint32_t vocab_size = 400;
  uint32_t min_len = 200;
  uint32_t max_len = 600;
  uint32_t samples_per_class = 200;  // benign total; malware total (split per family)
  double noise_rate = 0.0;           // per-token corruption of planted motifs
  double year_drift = 0.0;           // background distribution shift per year step
  uint32_t n_years = 1;
  int base_year = 2013;
};

corpus::LabeledSequences generate_synthetic_corpus(const SynthSpec& spec, uint64_t seed);

/// The 3-token motif of (family, motif index); exposed so tests can scan for
/// planted motifs independently of the generator internals.
std::vector<std::string> synth_motif_tokens(uint32_t family, uint32_t motif);
std::string synth_family_name(uint32_t family);

}  // namespace mdzr::eval

#endif  // MDZR_EVALUATION_HPP
