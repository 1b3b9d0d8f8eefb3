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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "mdzr/evaluation.hpp"
#include "mdzr/rng.hpp"
#include "support/test_util.hpp"

using namespace mdzr;
using namespace mdzr::testsupport;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

/// Exact-rational reference for the binary two-class metrics, computed in
/// long double from integer counts; independent of the implementation.
struct BinaryOracle {
  long double f1_weighted, precision_weighted, recall_weighted, fpr, fnr, acc;
};

BinaryOracle binary_oracle(uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn) {
  auto f1_of = [](long double tpx, long double fpx, long double fnx) {
    const long double p = tpx / (tpx + fpx);
    const long double r = tpx / (tpx + fnx);
    return 2.0L * p * r / (p + r);
  };
  const long double support_m = static_cast<long double>(tp + fn);
  const long double support_b = static_cast<long double>(tn + fp);
  const long double total = support_m + support_b;
  BinaryOracle o;
  const long double f1_m = f1_of(tp, fp, fn);
  const long double f1_b = f1_of(tn, fn, fp);
  o.f1_weighted = (support_m * f1_m + support_b * f1_b) / total;
  const long double p_m = static_cast<long double>(tp) / (tp + fp);
  const long double p_b = static_cast<long double>(tn) / (tn + fn);
  o.precision_weighted = (support_m * p_m + support_b * p_b) / total;
  const long double r_m = static_cast<long double>(tp) / (tp + fn);
  const long double r_b = static_cast<long double>(tn) / (tn + fp);
  o.recall_weighted = (support_m * r_m + support_b * r_b) / total;
  o.fpr = static_cast<long double>(fp) / (fp + tn);
  o.fnr = static_cast<long double>(fn) / (fn + tp);
  o.acc = static_cast<long double>(tp + tn) / total;
  return o;
}

nn::Hyperparams small_hp(nn::Task task = nn::Task::Detection) {
  nn::Hyperparams hp;
  hp.seq_len = 96;  // covers the small_spec length range; nothing truncated
  hp.embed_dim = 8;
  hp.filters = 16;
  hp.kernel = 3;
  hp.hidden = 12;
  hp.dropout_rate = 0.2;
  hp.epochs = 8;
  hp.learning_rate = 5e-3;
  hp.batch_size = 16;
  hp.task = task;
  return hp;
}

eval::SynthSpec small_spec() {
  eval::SynthSpec spec;
  spec.n_families = 2;
  spec.motifs_per_family = 2;
  spec.vocab_size = 120;
  spec.min_len = 40;
  spec.max_len = 90;
  spec.samples_per_class = 60;
  spec.noise_rate = 0.0;
  return spec;
}

}  // namespace

TEST_CASE("metrics reproduce the reference 10-fold detection rates") {
  // Confusion counts from four reference 10-fold detection runs, with the
  // reference weighted F1 (%) and FPR (%) they must reproduce.
  struct Case {
    const char* name;
    uint64_t tn, fp, fn, tp;
    double f1_pct, fpr_pct;
  };
  const std::vector<Case> cases = {
      {"malgenome", 37612, 15, 44, 1214, 99.8482, 0.04},
      {"drebin", 37457, 170, 168, 5387, 99.2173, 0.45},
      {"corpus20k", 37193, 434, 611, 19478, 98.1875, 1.15},
      {"all", 36426, 1201, 1417, 31649, 96.2958, 3.19},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    const eval::MetricsReport report =
        eval::compute_metrics(eval::ConfusionCounts::binary(c.tp, c.fp, c.fn, c.tn));
    // Weighted F1 within 0.01 percentage points of the reference value.
    CHECK(std::abs(report.weighted_f1 * 100.0 - c.f1_pct) < 0.01);
    // FPR matches the reference percentage at 4 decimal places of the rate.
    CHECK(std::round(report.fpr * 1e4) == doctest::Approx(c.fpr_pct * 100.0));

    // And every rate agrees with exact rational arithmetic to 1e-9.
    const BinaryOracle oracle = binary_oracle(c.tp, c.fp, c.fn, c.tn);
    CHECK(std::abs(report.weighted_f1 - static_cast<double>(oracle.f1_weighted)) < 1e-9);
    CHECK(std::abs(report.weighted_precision - static_cast<double>(oracle.precision_weighted)) <
          1e-9);
    CHECK(std::abs(report.weighted_recall - static_cast<double>(oracle.recall_weighted)) < 1e-9);
    CHECK(std::abs(report.fpr - static_cast<double>(oracle.fpr)) < 1e-9);
    CHECK(std::abs(report.fnr - static_cast<double>(oracle.fnr)) < 1e-9);
    CHECK(std::abs(report.accuracy - static_cast<double>(oracle.acc)) < 1e-9);
  }
}

TEST_CASE("the text-formula FPR variant divides by FP+TP") {
  const auto counts = eval::ConfusionCounts::binary(1214, 15, 44, 37612);
  const eval::MetricsReport standard = eval::compute_metrics(counts, false);
  const eval::MetricsReport text = eval::compute_metrics(counts, true);
  CHECK(standard.fpr == doctest::Approx(15.0 / 37627.0));
  CHECK(text.fpr == doctest::Approx(15.0 / 1229.0));
}

TEST_CASE("perfect classifier yields unit metrics") {
  const eval::MetricsReport report =
      eval::compute_metrics(eval::ConfusionCounts::binary(10, 0, 0, 0));
  CHECK(report.per_class[1].precision == 1.0);
  CHECK(report.per_class[1].recall == 1.0);
  CHECK(report.per_class[1].f1 == 1.0);
  CHECK(report.accuracy == 1.0);
  // The benign class has no samples: flagged zeros, not a crash.
  CHECK(report.any_undefined);
  CHECK(report.per_class[0].recall == 0.0);
  CHECK(!report.per_class[0].recall_defined);
}

TEST_CASE("zero denominators report flagged zeros") {
  // No positive predictions at all: precision undefined for malware.
  const eval::MetricsReport report =
      eval::compute_metrics(eval::ConfusionCounts::binary(0, 0, 5, 5));
  CHECK(report.per_class[1].precision == 0.0);
  CHECK(!report.per_class[1].precision_defined);
  CHECK(report.any_undefined);
}

TEST_CASE("inconsistent matrices are rejected") {
  eval::ConfusionCounts bad;
  bad.class_names = {"a", "b"};
  bad.matrix = {1, 2, 3};  // not 2x2
  CHECK(kind_of([&] { eval::compute_metrics(bad); }) == ErrorKind::InconsistentCounts);
}

TEST_CASE("metrics match exact rational arithmetic on random counts") {
  Rng rng(7777);
  for (int trial = 0; trial < 200; ++trial) {
    const uint64_t tp = 1 + rng.index(40000);
    const uint64_t fp = 1 + rng.index(4000);
    const uint64_t fn = 1 + rng.index(4000);
    const uint64_t tn = 1 + rng.index(60000);
    const eval::MetricsReport report =
        eval::compute_metrics(eval::ConfusionCounts::binary(tp, fp, fn, tn));
    const BinaryOracle oracle = binary_oracle(tp, fp, fn, tn);
    CHECK(std::abs(report.weighted_f1 - static_cast<double>(oracle.f1_weighted)) < 1e-9);
    CHECK(std::abs(report.fpr - static_cast<double>(oracle.fpr)) < 1e-9);
    CHECK(std::abs(report.accuracy - static_cast<double>(oracle.acc)) < 1e-9);
  }
}

TEST_CASE("multiclass one-vs-rest counts add up") {
  const std::vector<std::string> names = {"famA", "famB", "famC"};
  const std::vector<uint32_t> y_true = {0, 0, 1, 1, 2, 2, 2};
  const std::vector<uint32_t> y_pred = {0, 1, 1, 1, 2, 0, 2};
  const auto counts = eval::ConfusionCounts::from_predictions(names, y_true, y_pred);
  CHECK(counts.total() == 7);
  CHECK(counts.correct() == 5);
  const eval::ClassCounts a = counts.one_vs_rest(0);
  CHECK(a.tp == 1);
  CHECK(a.fn == 1);
  CHECK(a.fp == 1);
  CHECK(a.tn == 4);
  const eval::MetricsReport report = eval::compute_metrics(counts);
  CHECK(report.accuracy == doctest::Approx(5.0 / 7.0));
}

TEST_CASE("kfold splits form balanced partitions") {
  apk::CorpusManifest manifest;
  for (int i = 0; i < 10; ++i) {
    apk::ManifestRecord r;
    r.app_path = "a" + std::to_string(i);
    r.label = apk::Label::Benign;
    manifest.records.push_back(r);
  }

  const auto halves = eval::kfold_split(manifest, 2, 1, false);
  REQUIRE(halves.size() == 2);
  CHECK(halves[0].test_idx.size() == 5);
  CHECK(halves[1].test_idx.size() == 5);

  const auto thirds = eval::kfold_split(manifest, 3, 1, false);
  std::multiset<size_t> sizes;
  for (const auto& f : thirds) sizes.insert(f.test_idx.size());
  CHECK(sizes == std::multiset<size_t>{3, 3, 4});

  // Same seed, same folds.
  const auto again = eval::kfold_split(manifest, 3, 1, false);
  for (size_t f = 0; f < 3; ++f) CHECK(again[f].test_idx == thirds[f].test_idx);
}

TEST_CASE("kfold partition property holds for the spec fold counts") {
  apk::CorpusManifest manifest;
  Rng rng(31337);
  for (int i = 0; i < 64; ++i) {
    apk::ManifestRecord r;
    r.app_path = "app" + std::to_string(i);
    r.label = rng.index(3) == 0 ? apk::Label::Benign : apk::Label::Malware;
    if (r.label == apk::Label::Malware) r.family = "fam" + std::to_string(rng.index(2));
    manifest.records.push_back(r);
  }
  for (const uint32_t k : {2u, 3u, 5u, 10u}) {
    CAPTURE(k);
    const auto folds = eval::kfold_split(manifest, k, 99, true);
    REQUIRE(folds.size() == k);
    std::set<size_t> seen;
    size_t min_size = SIZE_MAX, max_size = 0;
    for (const auto& f : folds) {
      for (const size_t idx : f.test_idx) {
        CHECK(seen.insert(idx).second);  // pairwise disjoint
      }
      min_size = std::min(min_size, f.test_idx.size());
      max_size = std::max(max_size, f.test_idx.size());
      // train = complement
      CHECK(f.train_idx.size() + f.test_idx.size() == manifest.records.size());
    }
    CHECK(seen.size() == manifest.records.size());  // union covers
    CHECK(max_size - min_size <= 1);
  }
}

TEST_CASE("kfold rejects undersized strata") {
  apk::CorpusManifest manifest;
  for (int i = 0; i < 12; ++i) {
    apk::ManifestRecord r;
    r.app_path = "a" + std::to_string(i);
    r.label = i == 0 ? apk::Label::Malware : apk::Label::Benign;
    if (i == 0) r.family = "lonely";
    manifest.records.push_back(r);
  }
  CHECK(kind_of([&] { eval::kfold_split(manifest, 3, 1, true); }) == ErrorKind::TooFewSamples);
  CHECK_NOTHROW(eval::kfold_split(manifest, 3, 1, false));
}

TEST_CASE("synthetic corpus is deterministic and separable at zero noise") {
  const eval::SynthSpec spec = small_spec();
  const corpus::LabeledSequences a = eval::generate_synthetic_corpus(spec, 11);
  const corpus::LabeledSequences b = eval::generate_synthetic_corpus(spec, 11);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == 120);  // 60 benign + 60 malware
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.sequences[i].calls == b.sequences[i].calls);
    CHECK(a.manifest.records[i].app_path == b.manifest.records[i].app_path);
  }

  // Independent oracle: a direct scan for planted motif tokens. At zero
  // noise malware always carries a full motif, benign never does.
  std::set<std::string> motif_tokens;
  for (uint32_t f = 0; f < spec.n_families; ++f) {
    for (uint32_t m = 0; m < spec.motifs_per_family; ++m) {
      for (const std::string& t : eval::synth_motif_tokens(f, m)) motif_tokens.insert(t);
    }
  }
  for (size_t i = 0; i < a.size(); ++i) {
    const bool has_motif_token =
        std::any_of(a.sequences[i].calls.begin(), a.sequences[i].calls.end(),
                    [&](const std::string& c) { return motif_tokens.count(c) != 0; });
    CHECK(has_motif_token == (a.manifest.records[i].label == apk::Label::Malware));
  }
}

TEST_CASE("synthetic generator validates its spec") {
  eval::SynthSpec spec = small_spec();
  spec.vocab_size = spec.n_families * spec.motifs_per_family * 3;  // too small
  CHECK(kind_of([&] { eval::generate_synthetic_corpus(spec, 1); }) == ErrorKind::SpecInfeasible);
}

TEST_CASE("train/evaluate pipeline separates the synthetic classes") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 5);
  const auto folds = eval::kfold_split(data.manifest, 5, 5, true);
  eval::PipelineOptions opts;
  const eval::TrainedModel model =
      eval::train_pipeline(data, folds[0].train_idx, small_hp(), 5, opts);
  const eval::MetricsReport report = eval::evaluate_model(model, data, folds[0].test_idx, opts);
  CHECK(report.weighted_f1 > 0.9);
}

TEST_CASE("kfold eval pools fold confusions") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 6);
  eval::PipelineOptions opts;
  const eval::ExperimentReport report =
      eval::run_kfold_eval(data, 3, small_hp(), 6, true, opts);
  REQUIRE(report.points.size() == 3);
  REQUIRE(report.aggregate.has_value());
  CHECK(report.aggregate->counts.total() == data.size());
  // Pooled counts equal the sum over folds.
  uint64_t sum = 0;
  for (const auto& p : report.points) sum += p.metrics.counts.total();
  CHECK(sum == data.size());
  // JSON shape sanity.
  const eval::Json j = report.to_json();
  CHECK(j["points"].size() == 3);
  CHECK(j.contains("aggregate"));
}

TEST_CASE("unknown-family experiment improves with planted samples") {
  eval::SynthSpec spec = small_spec();
  spec.n_families = 2;
  spec.samples_per_class = 80;
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(spec, 9);
  eval::PipelineOptions opts;
  const eval::ExperimentReport report = eval::run_unknown_family_experiment(
      data, "fam01", {0, 20}, small_hp(), 9, opts);
  REQUIRE(report.points.size() == 2);
  const double zero_shot = report.points[0].metrics.per_class[1].recall;
  const double planted = report.points[1].metrics.per_class[1].recall;
  CHECK(report.points[0].axis["n_train"] == 0);
  CHECK(planted >= zero_shot);
  CHECK(planted > 0.8);  // with 20 planted samples the family is learnable
}

TEST_CASE("unknown-family experiment input validation") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 10);
  eval::PipelineOptions opts;
  CHECK(kind_of([&] {
          eval::run_unknown_family_experiment(data, "nope", {0}, small_hp(), 1, opts);
        }) == ErrorKind::UnknownFamily);
  CHECK(kind_of([&] {
          eval::run_unknown_family_experiment(data, "fam01", {1000}, small_hp(), 1, opts);
        }) == ErrorKind::NotEnoughSamples);
}

TEST_CASE("shuffle experiment: one block equals the unshuffled baseline") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 12);
  const auto folds = eval::kfold_split(data.manifest, 5, 12, true);
  eval::PipelineOptions opts;
  const eval::TrainedModel model =
      eval::train_pipeline(data, folds[0].train_idx, small_hp(), 12, opts);

  corpus::LabeledSequences test;
  for (const size_t idx : folds[0].test_idx) {
    test.manifest.records.push_back(data.manifest.records[idx]);
    test.sequences.push_back(data.sequences[idx]);
  }
  const eval::MetricsReport baseline = eval::evaluate_model(model, data, folds[0].test_idx, opts);
  const eval::ExperimentReport report =
      eval::run_shuffle_experiment(model, test, {1, 4, 0}, 12, opts);
  REQUIRE(report.points.size() == 3);
  CHECK(report.points[0].metrics.weighted_f1 == baseline.weighted_f1);
  CHECK(report.points[0].metrics.counts.matrix == baseline.counts.matrix);
  CHECK(report.points[2].axis["blocks"] == "element-level");

  CHECK(kind_of([&] { eval::run_shuffle_experiment(model, test, {100000}, 1, opts); }) ==
        ErrorKind::InvalidBlockCount);
}

TEST_CASE("time-split experiment structure and drift direction") {
  eval::SynthSpec spec = small_spec();
  spec.samples_per_class = 100;
  spec.n_years = 2;
  spec.year_drift = 0.45;
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(spec, 13);
  eval::PipelineOptions opts;
  nn::Hyperparams hp = small_hp();
  hp.epochs = 5;
  const eval::ExperimentReport report = eval::run_time_split_experiment(data, hp, 13, opts);

  // Two years: per year one holdout point and one cross-year point.
  REQUIRE(report.points.size() == 4);
  double holdout_sum = 0, cross_sum = 0;
  int holdouts = 0, crosses = 0;
  for (const auto& p : report.points) {
    if (p.axis.contains("holdout")) {
      holdout_sum += p.metrics.weighted_f1;
      ++holdouts;
    } else {
      CHECK(p.axis["train_year"] != p.axis["test_year"]);
      cross_sum += p.metrics.weighted_f1;
      ++crosses;
    }
  }
  CHECK(holdouts == 2);
  CHECK(crosses == 2);
  // Vocabulary drift makes cross-year transfer no better than same-year.
  CHECK(cross_sum / crosses <= holdout_sum / holdouts + 1e-12);
}

TEST_CASE("time-split requires two distinct years") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 14);
  eval::PipelineOptions opts;
  CHECK(kind_of([&] { eval::run_time_split_experiment(data, small_hp(), 1, opts); }) ==
        ErrorKind::InsufficientYears);
}

TEST_CASE("benchmark of an empty manifest is an empty report") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 15);
  eval::PipelineOptions opts;
  const auto folds = eval::kfold_split(data.manifest, 5, 15, true);
  const eval::TrainedModel model =
      eval::train_pipeline(data, folds[0].train_idx, small_hp(), 15, opts);
  const eval::BenchReport report =
      eval::benchmark_runtime(apk::CorpusManifest{}, "", model, opts);
  CHECK(report.entries.empty());
  CHECK(report.corr_preprocess_dex == 0.0);
}

TEST_CASE("benchmark does not mutate the model") {
  const corpus::LabeledSequences data = eval::generate_synthetic_corpus(small_spec(), 16);
  eval::PipelineOptions opts;
  const auto folds = eval::kfold_split(data.manifest, 5, 16, true);
  const eval::TrainedModel model =
      eval::train_pipeline(data, folds[0].train_idx, small_hp(), 16, opts);
  const std::vector<double> before = model.params.conv_w;

  apk::CorpusManifest manifest;
  apk::ManifestRecord r;
  r.app_path = "does-not-exist.apk";
  manifest.records.push_back(r);
  const eval::BenchReport report = eval::benchmark_runtime(manifest, "", model, opts);
  REQUIRE(report.entries.size() == 1);
  CHECK(!report.entries[0].error.empty());
  CHECK(model.params.conv_w == before);
}

TEST_CASE("pearson correlation basics") {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  const std::vector<double> up = {2, 4, 6, 8, 10};
  const std::vector<double> down = {10, 8, 6, 4, 2};
  CHECK(eval::pearson(xs, up) == doctest::Approx(1.0));
  CHECK(eval::pearson(xs, down) == doctest::Approx(-1.0));
  const std::vector<double> flat = {3, 3, 3, 3, 3};
  CHECK(eval::pearson(xs, flat) == 0.0);
}
