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

#include "mdzr/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "mdzr/io_util.hpp"
#include "mdzr/rng.hpp"

namespace mdzr::eval {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// value/denominator with the 0/0 convention: flagged 0.
double rate(uint64_t num, uint64_t den, bool& defined) {
  if (den == 0) {
    defined = false;
    return 0.0;
  }
  defined = true;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string format_index(const char* prefix, uint32_t value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02u", prefix, value);
  return buf;
}

}  // namespace

ConfusionCounts ConfusionCounts::binary(uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn) {
  ConfusionCounts c;
  c.class_names = {"benign", "malware"};
  c.matrix = {tn, fp, fn, tp};  // rows: actual benign, actual malware
  return c;
}

ConfusionCounts ConfusionCounts::from_predictions(std::vector<std::string> class_names,
                                                  std::span<const uint32_t> y_true,
                                                  std::span<const uint32_t> y_pred) {
  if (y_true.size() != y_pred.size()) {
    raise(ErrorKind::InconsistentCounts, "y_true and y_pred differ in length");
  }
  ConfusionCounts c;
  const size_t n = class_names.size();
  c.class_names = std::move(class_names);
  c.matrix.assign(n * n, 0);
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= n || y_pred[i] >= n) {
      raise(ErrorKind::InconsistentCounts, "label outside the class set");
    }
    ++c.matrix[size_t{y_true[i]} * n + y_pred[i]];
  }
  return c;
}

uint64_t& ConfusionCounts::at(size_t actual, size_t predicted) {
  return matrix[actual * num_classes() + predicted];
}

uint64_t ConfusionCounts::at(size_t actual, size_t predicted) const {
  return matrix[actual * num_classes() + predicted];
}

uint64_t ConfusionCounts::total() const {
  return std::accumulate(matrix.begin(), matrix.end(), uint64_t{0});
}

uint64_t ConfusionCounts::correct() const {
  uint64_t sum = 0;
  for (size_t c = 0; c < num_classes(); ++c) sum += at(c, c);
  return sum;
}

ClassCounts ConfusionCounts::one_vs_rest(size_t cls) const {
  ClassCounts out;
  const size_t n = num_classes();
  for (size_t a = 0; a < n; ++a) {
    for (size_t p = 0; p < n; ++p) {
      const uint64_t v = at(a, p);
      if (a == cls && p == cls) {
        out.tp += v;
      } else if (a == cls) {
        out.fn += v;
      } else if (p == cls) {
        out.fp += v;
      } else {
        out.tn += v;
      }
    }
  }
  return out;
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (other.class_names != class_names || other.matrix.size() != matrix.size()) {
    raise(ErrorKind::InconsistentCounts, "cannot merge confusion matrices of different shapes");
  }
  for (size_t i = 0; i < matrix.size(); ++i) matrix[i] += other.matrix[i];
}

void ConfusionCounts::validate() const {
  const size_t n = class_names.size();
  if (n == 0 || matrix.size() != n * n) {
    raise(ErrorKind::InconsistentCounts,
          "matrix shape " + std::to_string(matrix.size()) + " does not match " +
              std::to_string(n) + " classes");
  }
}

MetricsReport compute_metrics(const ConfusionCounts& counts, bool paper_formula_fpr) {
  counts.validate();
  MetricsReport report;
  report.counts = counts;

  const size_t n = counts.num_classes();
  uint64_t support_sum = 0;
  double wp = 0, wr = 0, wf = 0, wfpr = 0, wfnr = 0;
  for (size_t c = 0; c < n; ++c) {
    const ClassCounts cc = counts.one_vs_rest(c);
    ClassMetrics m;
    m.name = counts.class_names[c];
    m.support = cc.support();
    m.precision = rate(cc.tp, cc.tp + cc.fp, m.precision_defined);
    m.recall = rate(cc.tp, cc.tp + cc.fn, m.recall_defined);
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
      m.f1_defined = m.precision_defined && m.recall_defined;
    } else {
      m.f1 = 0.0;
      m.f1_defined = false;
    }
    m.fpr = paper_formula_fpr ? rate(cc.fp, cc.fp + cc.tp, m.fpr_defined)
                              : rate(cc.fp, cc.fp + cc.tn, m.fpr_defined);
    m.fnr = rate(cc.fn, cc.fn + cc.tp, m.fnr_defined);

    support_sum += m.support;
    wp += static_cast<double>(m.support) * m.precision;
    wr += static_cast<double>(m.support) * m.recall;
    wf += static_cast<double>(m.support) * m.f1;
    wfpr += static_cast<double>(m.support) * m.fpr;
    wfnr += static_cast<double>(m.support) * m.fnr;
    report.any_undefined = report.any_undefined || !m.precision_defined || !m.recall_defined ||
                           !m.f1_defined || !m.fpr_defined || !m.fnr_defined;
    report.per_class.push_back(std::move(m));
  }

  if (support_sum > 0) {
    const double inv = 1.0 / static_cast<double>(support_sum);
    report.weighted_precision = wp * inv;
    report.weighted_recall = wr * inv;
    report.weighted_f1 = wf * inv;
    wfpr *= inv;
    wfnr *= inv;
  } else {
    report.any_undefined = true;
  }

  bool acc_defined = true;
  report.accuracy = rate(counts.correct(), counts.total(), acc_defined);
  report.any_undefined = report.any_undefined || !acc_defined;

  const bool binary_detection = n == 2 && counts.class_names[1] == "malware";
  if (binary_detection) {
    report.fpr = report.per_class[1].fpr;
    report.fnr = report.per_class[1].fnr;
  } else {
    report.fpr = wfpr;
    report.fnr = wfnr;
  }
  return report;
}

Json MetricsReport::to_json() const {
  Json j;
  j["accuracy"] = accuracy;
  j["weighted"] = {{"precision", weighted_precision},
                   {"recall", weighted_recall},
                   {"f1", weighted_f1}};
  j["fpr"] = fpr;
  j["fnr"] = fnr;
  j["any_undefined"] = any_undefined;
  Json per;
  for (const ClassMetrics& m : per_class) {
    Json c;
    c["name"] = m.name;
    c["support"] = m.support;
    c["precision"] = m.precision;
    c["recall"] = m.recall;
    c["f1"] = m.f1;
    c["fpr"] = m.fpr;
    c["fnr"] = m.fnr;
    c["defined"] = m.precision_defined && m.recall_defined && m.f1_defined;
    per.push_back(c);
  }
  j["per_class"] = per.is_null() ? Json::array() : per;
  Json rows = Json::array();
  const size_t n = counts.num_classes();
  for (size_t a = 0; a < n; ++a) {
    Json row = Json::array();
    for (size_t p = 0; p < n; ++p) row.push_back(counts.at(a, p));
    rows.push_back(row);
  }
  j["confusion"] = {{"classes", counts.class_names}, {"matrix", rows}};
  return j;
}

std::vector<FoldSplit> kfold_split(const apk::CorpusManifest& manifest, uint32_t k, uint64_t seed,
                                   bool stratify) {
  if (k < 2) raise(ErrorKind::ConfigError, "k must be >= 2");
  const size_t n = manifest.records.size();
  if (n < k) {
    raise(ErrorKind::TooFewSamples,
          std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  }

  // Strata keyed by label (and family for malware); a single stratum when
  // stratification is off. std::map iteration keeps the order deterministic.
  std::map<std::string, std::vector<size_t>> strata;
  for (size_t i = 0; i < n; ++i) {
    std::string key = "all";
    if (stratify) {
      const apk::ManifestRecord& r = manifest.records[i];
      key = r.label == apk::Label::Malware ? "m\x1f" + r.family : "b";
    }
    strata[key].push_back(i);
  }

  Rng rng(seed);
  std::vector<uint32_t> assignment(n, 0);
  size_t cursor = 0;  // continues across strata so global fold sizes stay balanced
  for (auto& [key, members] : strata) {
    if (stratify && members.size() < k) {
      raise(ErrorKind::TooFewSamples, "stratum '" + key + "' has " +
                                          std::to_string(members.size()) + " members for k=" +
                                          std::to_string(k));
    }
    rng.shuffle(members);
    for (const size_t idx : members) {
      assignment[idx] = static_cast<uint32_t>(cursor % k);
      ++cursor;
    }
  }

  std::vector<FoldSplit> folds(k);
  for (size_t i = 0; i < n; ++i) {
    for (uint32_t f = 0; f < k; ++f) {
      (f == assignment[i] ? folds[f].test_idx : folds[f].train_idx).push_back(i);
    }
  }
  return folds;
}

std::vector<uint32_t> make_labels(const apk::CorpusManifest& manifest, nn::Task task,
                                  const std::vector<std::string>& families) {
  std::vector<uint32_t> labels;
  labels.reserve(manifest.records.size());
  if (task == nn::Task::Detection) {
    for (const apk::ManifestRecord& r : manifest.records) {
      labels.push_back(r.label == apk::Label::Malware ? 1 : 0);
    }
    return labels;
  }
  std::map<std::string, uint32_t> index;
  for (size_t i = 0; i < families.size(); ++i) index[families[i]] = static_cast<uint32_t>(i);
  for (const apk::ManifestRecord& r : manifest.records) {
    if (r.label != apk::Label::Malware || !r.has_family()) {
      raise(ErrorKind::ConfigError,
            "attribution corpus must contain only malware with families; offending app " +
                r.app_path);
    }
    const auto it = index.find(r.family);
    if (it == index.end()) {
      raise(ErrorKind::UnknownFamily, "family '" + r.family + "' not in the class set");
    }
    labels.push_back(it->second);
  }
  return labels;
}

TrainedModel train_pipeline(const corpus::LabeledSequences& data,
                            std::span<const size_t> train_idx, nn::Hyperparams hp, uint64_t seed,
                            const PipelineOptions& opts, std::vector<std::string> class_names) {
  if (train_idx.empty()) raise(ErrorKind::EmptyCorpus, "empty training split");

  std::vector<const dex::ApiCallSequence*> train_seqs;
  train_seqs.reserve(train_idx.size());
  for (const size_t idx : train_idx) train_seqs.push_back(&data.sequences.at(idx));
  seq::ApiDictionary dict = seq::build_dictionary(train_seqs, opts.vocab_cap);

  hp.vocab_size = dict.size();
  if (hp.task == nn::Task::Attribution) {
    if (class_names.empty()) class_names = data.manifest.families();
    hp.n_families = static_cast<uint32_t>(class_names.size());
  } else {
    class_names.clear();
  }

  const std::vector<uint32_t> all_labels = make_labels(data.manifest, hp.task, class_names);
  std::vector<seq::UnifiedSequence> xs;
  std::vector<uint32_t> ys;
  xs.reserve(train_idx.size());
  ys.reserve(train_idx.size());
  for (const size_t idx : train_idx) {
    xs.push_back(seq::unify(seq::discretize(data.sequences[idx], dict, opts.paper_compat_unk_zero),
                            hp.seq_len));
    ys.push_back(all_labels[idx]);
  }

  nn::TrainResult trained = nn::train(xs, ys, hp, seed);
  TrainedModel model;
  model.params = std::move(trained.params);
  model.dict = std::move(dict);
  model.class_names = std::move(class_names);
  model.epoch_mean_loss = std::move(trained.epoch_mean_loss);
  return model;
}

MetricsReport evaluate_model(const TrainedModel& model, const corpus::LabeledSequences& data,
                             std::span<const size_t> test_idx, const PipelineOptions& opts) {
  const nn::Task task = model.params.hp.task;
  const std::vector<uint32_t> all_labels = make_labels(data.manifest, task, model.class_names);

  std::vector<uint32_t> y_true, y_pred;
  y_true.reserve(test_idx.size());
  y_pred.reserve(test_idx.size());
  for (const size_t idx : test_idx) {
    const seq::UnifiedSequence x = seq::unify(
        seq::discretize(data.sequences[idx], model.dict, opts.paper_compat_unk_zero),
        model.params.hp.seq_len);
    const nn::Prediction pred = nn::predict(model.params, x, opts.threshold);
    y_true.push_back(all_labels[idx]);
    y_pred.push_back(task == nn::Task::Detection ? (pred.is_malware ? 1 : 0) : pred.argmax);
  }

  const std::vector<std::string> names =
      task == nn::Task::Detection ? std::vector<std::string>{"benign", "malware"}
                                  : model.class_names;
  return compute_metrics(ConfusionCounts::from_predictions(names, y_true, y_pred),
                         opts.paper_formula_fpr);
}

Json ExperimentReport::to_json() const {
  Json j;
  j["kind"] = kind;
  j["seed"] = seed;
  j["config"] = config;
  Json pts = Json::array();
  for (const ExperimentPoint& p : points) {
    Json pj;
    pj["axis"] = p.axis;
    pj["metrics"] = p.metrics.to_json();
    pj["wall_ms"] = p.wall_ms;
    pts.push_back(pj);
  }
  j["points"] = pts;
  if (aggregate) j["aggregate"] = aggregate->to_json();
  return j;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out << "axis,weighted_f1,weighted_precision,weighted_recall,accuracy,fpr,fnr\n";
  for (const ExperimentPoint& p : points) {
    std::string axis = p.axis.dump();
    std::replace(axis.begin(), axis.end(), ',', ';');
    out << '"' << axis << "\"," << p.metrics.weighted_f1 << ',' << p.metrics.weighted_precision
        << ',' << p.metrics.weighted_recall << ',' << p.metrics.accuracy << ',' << p.metrics.fpr
        << ',' << p.metrics.fnr << '\n';
  }
  return out.str();
}

ExperimentReport run_kfold_eval(const corpus::LabeledSequences& data, uint32_t k,
                                nn::Hyperparams hp, uint64_t seed, bool stratify,
                                const PipelineOptions& opts) {
  ExperimentReport report;
  report.kind = "kfold";
  report.seed = seed;
  report.config = {{"k", k}, {"stratify", stratify},
                   {"task", hp.task == nn::Task::Detection ? "detection" : "attribution"}};

  const std::vector<FoldSplit> folds = kfold_split(data.manifest, k, seed, stratify);
  std::optional<ConfusionCounts> pooled;
  for (uint32_t f = 0; f < folds.size(); ++f) {
    const auto start = Clock::now();
    const TrainedModel model =
        train_pipeline(data, folds[f].train_idx, hp, Rng::derive(seed, f), opts);
    MetricsReport metrics = evaluate_model(model, data, folds[f].test_idx, opts);
    ExperimentPoint point;
    point.axis = {{"fold", f}};
    point.wall_ms = elapsed_ms(start);
    if (!pooled) {
      pooled = metrics.counts;
    } else {
      pooled->merge(metrics.counts);
    }
    point.metrics = std::move(metrics);
    report.points.push_back(std::move(point));
  }
  report.aggregate = compute_metrics(*pooled, opts.paper_formula_fpr);
  return report;
}

ExperimentReport run_unknown_family_experiment(const corpus::LabeledSequences& data,
                                               const std::string& family,
                                               const std::vector<uint32_t>& train_sizes,
                                               nn::Hyperparams hp, uint64_t seed,
                                               const PipelineOptions& opts) {
  std::vector<size_t> family_idx, other_idx;
  for (size_t i = 0; i < data.manifest.records.size(); ++i) {
    const apk::ManifestRecord& r = data.manifest.records[i];
    if (r.label == apk::Label::Malware && r.family == family) {
      family_idx.push_back(i);
    } else {
      other_idx.push_back(i);
    }
  }
  if (family_idx.empty()) {
    raise(ErrorKind::UnknownFamily, "family '" + family + "' not present in the corpus");
  }

  // The planted samples are drawn from one fixed shuffle so larger n extends
  // smaller n.
  Rng rng(Rng::derive(seed, 0x554E4B46));  // "UNKF"
  rng.shuffle(family_idx);

  hp.task = nn::Task::Detection;

  ExperimentReport report;
  report.kind = "unknown-family";
  report.seed = seed;
  report.config = {{"family", family},
                   {"family_size", family_idx.size()},
                   {"train_sizes", train_sizes}};

  for (const uint32_t n : train_sizes) {
    if (n >= family_idx.size()) {
      raise(ErrorKind::NotEnoughSamples,
            "train size " + std::to_string(n) + " leaves no test samples of '" + family +
                "' (family has " + std::to_string(family_idx.size()) + ")");
    }
    const auto start = Clock::now();
    std::vector<size_t> train_idx = other_idx;
    train_idx.insert(train_idx.end(), family_idx.begin(), family_idx.begin() + n);
    const std::vector<size_t> test_idx(family_idx.begin() + n, family_idx.end());

    const TrainedModel model = train_pipeline(data, train_idx, hp, Rng::derive(seed, 100 + n), opts);
    ExperimentPoint point;
    point.axis = {{"n_train", n}, {"n_test", test_idx.size()}};
    point.metrics = evaluate_model(model, data, test_idx, opts);
    point.wall_ms = elapsed_ms(start);
    report.points.push_back(std::move(point));
  }
  return report;
}

ExperimentReport run_shuffle_experiment(const TrainedModel& model,
                                        const corpus::LabeledSequences& test,
                                        const std::vector<uint32_t>& block_counts, uint64_t seed,
                                        const PipelineOptions& opts) {
  const nn::Task task = model.params.hp.task;
  const std::vector<uint32_t> all_labels = make_labels(test.manifest, task, model.class_names);

  // Discretize once; shuffling happens on the discrete sequences, before
  // unify, so truncation applies to the shuffled order.
  std::vector<seq::DiscreteSequence> discrete;
  discrete.reserve(test.sequences.size());
  size_t min_nonempty = SIZE_MAX;
  for (const dex::ApiCallSequence& s : test.sequences) {
    discrete.push_back(seq::discretize(s, model.dict, opts.paper_compat_unk_zero));
    if (!discrete.back().ids.empty()) {
      min_nonempty = std::min(min_nonempty, discrete.back().ids.size());
    }
  }
  for (const uint32_t n : block_counts) {
    if (n > 1 && min_nonempty != SIZE_MAX && n > min_nonempty) {
      raise(ErrorKind::InvalidBlockCount, "block count " + std::to_string(n) +
                                              " exceeds shortest test sequence (" +
                                              std::to_string(min_nonempty) + ")");
    }
  }

  ExperimentReport report;
  report.kind = "shuffle";
  report.seed = seed;
  report.config = {{"block_counts", block_counts}, {"n_test", test.sequences.size()}};

  const std::vector<std::string> names =
      task == nn::Task::Detection ? std::vector<std::string>{"benign", "malware"}
                                  : model.class_names;

  for (const uint32_t n : block_counts) {
    const auto start = Clock::now();
    std::vector<uint32_t> y_true, y_pred;
    y_true.reserve(discrete.size());
    y_pred.reserve(discrete.size());
    for (size_t i = 0; i < discrete.size(); ++i) {
      const uint64_t sample_seed = Rng::derive(Rng::derive(seed, 0x53484600ULL + n), i);
      const uint32_t blocks =
          n == 0 ? static_cast<uint32_t>(std::max<size_t>(discrete[i].ids.size(), 1)) : n;
      const seq::DiscreteSequence shuffled =
          discrete[i].ids.empty() ? discrete[i] : seq::block_shuffle(discrete[i], blocks, sample_seed);
      const seq::UnifiedSequence x = seq::unify(shuffled, model.params.hp.seq_len);
      const nn::Prediction pred = nn::predict(model.params, x, opts.threshold);
      y_true.push_back(all_labels[i]);
      y_pred.push_back(task == nn::Task::Detection ? (pred.is_malware ? 1 : 0) : pred.argmax);
    }
    ExperimentPoint point;
    point.axis = {{"blocks", n == 0 ? Json("element-level") : Json(n)}};
    point.metrics = compute_metrics(ConfusionCounts::from_predictions(names, y_true, y_pred),
                                    opts.paper_formula_fpr);
    point.wall_ms = elapsed_ms(start);
    report.points.push_back(std::move(point));
  }
  return report;
}

ExperimentReport run_time_split_experiment(const corpus::LabeledSequences& data,
                                           nn::Hyperparams hp, uint64_t seed,
                                           const PipelineOptions& opts) {
  std::map<int, std::vector<size_t>> buckets;
  for (size_t i = 0; i < data.manifest.records.size(); ++i) {
    if (data.manifest.records[i].has_year()) buckets[data.manifest.records[i].year].push_back(i);
  }
  if (buckets.size() < 2) {
    raise(ErrorKind::InsufficientYears, "time-split experiment needs >= 2 distinct years, found " +
                                            std::to_string(buckets.size()));
  }

  hp.task = nn::Task::Detection;

  ExperimentReport report;
  report.kind = "time-split";
  report.seed = seed;
  {
    Json years = Json::array();
    for (const auto& [year, members] : buckets) {
      years.push_back({{"year", year}, {"samples", members.size()}});
    }
    report.config = {{"years", years}};
  }

  for (const auto& [train_year, members] : buckets) {
    // Same-year 80/20 holdout as the reference point.
    {
      const auto start = Clock::now();
      std::vector<size_t> shuffled = members;
      Rng rng(Rng::derive(seed, 0x484F4C44ULL + static_cast<uint64_t>(train_year)));  // "HOLD"
      rng.shuffle(shuffled);
      const size_t test_n = std::max<size_t>(1, shuffled.size() / 5);
      const std::vector<size_t> test_idx(shuffled.begin(), shuffled.begin() + test_n);
      const std::vector<size_t> train_idx(shuffled.begin() + test_n, shuffled.end());
      const TrainedModel model =
          train_pipeline(data, train_idx, hp, Rng::derive(seed, 7000 + train_year), opts);
      ExperimentPoint point;
      point.axis = {{"train_year", train_year}, {"test_year", train_year}, {"holdout", true}};
      point.metrics = evaluate_model(model, data, test_idx, opts);
      point.wall_ms = elapsed_ms(start);
      report.points.push_back(std::move(point));
    }

    // Full-bucket model evaluated on every other year.
    const TrainedModel model =
        train_pipeline(data, members, hp, Rng::derive(seed, 8000 + train_year), opts);
    for (const auto& [test_year, test_members] : buckets) {
      if (test_year == train_year) continue;
      const auto start = Clock::now();
      ExperimentPoint point;
      point.axis = {{"train_year", train_year}, {"test_year", test_year}};
      point.metrics = evaluate_model(model, data, test_members, opts);
      point.wall_ms = elapsed_ms(start);
      report.points.push_back(std::move(point));
    }
  }
  return report;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return 0.0;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

BenchReport benchmark_runtime(const apk::CorpusManifest& manifest, const std::string& base_dir,
                              const TrainedModel& model, const PipelineOptions& opts) {
  BenchReport report;
  for (const apk::ManifestRecord& rec : manifest.records) {
    BenchEntry entry;
    entry.path = rec.app_path;
    const std::string path = corpus::resolve_app_path(rec.app_path, base_dir);
    try {
      const auto t0 = Clock::now();
      const apk::ApkPackage pkg = apk::open_apk(path);
      std::vector<uint8_t> dex_bytes = apk::extract_dex(pkg, nullptr);
      entry.apk_size = pkg.file_size;
      entry.dex_size = dex_bytes.size();
      const dex::DexFile parsed = dex::parse_dex(std::move(dex_bytes));
      const dex::ApiCallSequence calls = dex::extract_call_sequence(parsed);
      const seq::UnifiedSequence x = seq::unify(
          seq::discretize(calls, model.dict, opts.paper_compat_unk_zero), model.params.hp.seq_len);
      const auto t1 = Clock::now();
      entry.preprocess_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      nn::predict(model.params, x, opts.threshold);
      entry.predict_ms = elapsed_ms(t1);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    report.entries.push_back(std::move(entry));
  }

  std::vector<double> pre, dex_sizes, apk_sizes, predict;
  for (const BenchEntry& e : report.entries) {
    if (!e.error.empty()) continue;
    pre.push_back(e.preprocess_ms);
    dex_sizes.push_back(static_cast<double>(e.dex_size));
    apk_sizes.push_back(static_cast<double>(e.apk_size));
    predict.push_back(e.predict_ms);
  }
  report.corr_preprocess_dex = pearson(pre, dex_sizes);
  report.corr_preprocess_apk = pearson(pre, apk_sizes);
  if (!predict.empty()) {
    double mean = 0;
    for (const double v : predict) mean += v;
    mean /= static_cast<double>(predict.size());
    double var = 0;
    for (const double v : predict) var += (v - mean) * (v - mean);
    var /= static_cast<double>(predict.size());
    report.predict_mean_ms = mean;
    report.predict_stddev_ms = std::sqrt(var);
  }
  return report;
}

Json BenchReport::to_json() const {
  Json j;
  j["corr_preprocess_dex"] = corr_preprocess_dex;
  j["corr_preprocess_apk"] = corr_preprocess_apk;
  j["predict_mean_ms"] = predict_mean_ms;
  j["predict_stddev_ms"] = predict_stddev_ms;
  Json apps = Json::array();
  for (const BenchEntry& e : entries) {
    Json a;
    a["path"] = e.path;
    if (e.error.empty()) {
      a["apk_size"] = e.apk_size;
      a["dex_size"] = e.dex_size;
      a["preprocess_ms"] = e.preprocess_ms;
      a["predict_ms"] = e.predict_ms;
    } else {
      a["error"] = e.error;
    }
    apps.push_back(a);
  }
  j["apps"] = apps;
  return j;
}

std::string synth_family_name(uint32_t family) { return format_index("fam", family); }

std::vector<std::string> synth_motif_tokens(uint32_t family, uint32_t motif) {
  std::vector<std::string> tokens;
  tokens.reserve(3);
  for (uint32_t s = 0; s < 3; ++s) {
    tokens.push_back("synth/" + synth_family_name(family) + "/Motif" + std::to_string(motif) +
                     ";->step" + std::to_string(s));
  }
  return tokens;
}

namespace {

constexpr uint32_t kMotifLen = 3;

std::string background_token(uint32_t index) {
  return "synth/bg/Lib" + std::to_string(index) + ";->call" + std::to_string(index);
}

void validate_synth_spec(const SynthSpec& spec) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) raise(ErrorKind::SpecInfeasible, what);
  };
  need(spec.n_families >= 1, "need at least one family");
  need(spec.motifs_per_family >= 1, "need at least one motif per family");
  need(spec.samples_per_class >= spec.n_families, "not enough samples to cover every family");
  need(spec.min_len >= 1 && spec.min_len <= spec.max_len, "bad sequence length range");
  const uint64_t motif_tokens =
      uint64_t{spec.n_families} * spec.motifs_per_family * kMotifLen;
  need(spec.vocab_size > motif_tokens,
       "vocab size " + std::to_string(spec.vocab_size) + " must exceed " +
           std::to_string(motif_tokens) + " motif tokens");
  // Up to 3 non-overlapping copies of each motif must fit.
  need(spec.min_len / kMotifLen >= spec.motifs_per_family * 3,
       "min sequence length " + std::to_string(spec.min_len) + " too short to plant " +
           std::to_string(spec.motifs_per_family) + " motifs");
  need(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0, "noise rate must be in [0, 1]");
  need(spec.year_drift >= 0.0, "year drift must be >= 0");
  need(spec.n_years >= 1, "need at least one year");
}

}  // namespace

corpus::LabeledSequences generate_synthetic_corpus(const SynthSpec& spec, uint64_t seed) {
  validate_synth_spec(spec);
  const uint32_t background_count =
      spec.vocab_size - spec.n_families * spec.motifs_per_family * kMotifLen;

  Rng rng(seed);

  // Skewed background draw so dictionary frequencies are uneven, shifted per
  // year to model API evolution.
  auto draw_background = [&](int year) {
    const double u = rng.uniform();
    const auto base = static_cast<uint32_t>(u * u * background_count);
    uint64_t offset = 0;
    if (year != 0 && spec.year_drift > 0.0) {
      const auto step = static_cast<uint64_t>(spec.year_drift * background_count);
      offset = step * static_cast<uint64_t>(year - spec.base_year);
    }
    return background_token(static_cast<uint32_t>((base + offset) % background_count));
  };

  auto sample_year = [&](size_t counter) {
    return spec.n_years > 1 ? spec.base_year + static_cast<int>(counter % spec.n_years) : 0;
  };

  corpus::LabeledSequences out;

  // Benign: background tokens only; motif tokens never appear.
  for (uint32_t i = 0; i < spec.samples_per_class; ++i) {
    const int year = sample_year(i);
    const size_t len = spec.min_len + rng.index(spec.max_len - spec.min_len + 1);
    dex::ApiCallSequence seq;
    seq.calls.reserve(len);
    for (size_t p = 0; p < len; ++p) seq.calls.push_back(draw_background(year));

    apk::ManifestRecord rec;
    char name[48];
    std::snprintf(name, sizeof(name), "apps/benign/b%05u.seq", i);
    rec.app_path = name;
    rec.label = apk::Label::Benign;
    rec.year = year;
    seq.source_id = rec.app_path;
    out.manifest.records.push_back(std::move(rec));
    out.sequences.push_back(std::move(seq));
  }

  // Malware: per-family motifs planted into non-overlapping 3-token slots.
  size_t malware_counter = 0;
  for (uint32_t fam = 0; fam < spec.n_families; ++fam) {
    const uint32_t count = spec.samples_per_class / spec.n_families +
                           (fam < spec.samples_per_class % spec.n_families ? 1 : 0);
    for (uint32_t j = 0; j < count; ++j, ++malware_counter) {
      const int year = sample_year(malware_counter);
      const size_t len = spec.min_len + rng.index(spec.max_len - spec.min_len + 1);
      dex::ApiCallSequence seq;
      seq.calls.reserve(len);
      for (size_t p = 0; p < len; ++p) seq.calls.push_back(draw_background(year));

      std::vector<uint32_t> free_slots(len / kMotifLen);
      std::iota(free_slots.begin(), free_slots.end(), 0u);
      for (uint32_t m = 0; m < spec.motifs_per_family; ++m) {
        const std::vector<std::string> motif = synth_motif_tokens(fam, m);
        const uint64_t copies = 1 + rng.index(3);
        for (uint64_t c = 0; c < copies && !free_slots.empty(); ++c) {
          const uint64_t pick = rng.index(free_slots.size());
          const uint32_t slot = free_slots[pick];
          free_slots.erase(free_slots.begin() + static_cast<ptrdiff_t>(pick));
          for (uint32_t s = 0; s < kMotifLen; ++s) {
            std::string token = motif[s];
            if (spec.noise_rate > 0.0 && rng.uniform() < spec.noise_rate) {
              token = draw_background(year);
            }
            seq.calls[size_t{slot} * kMotifLen + s] = std::move(token);
          }
        }
      }

      apk::ManifestRecord rec;
      char name[64];
      std::snprintf(name, sizeof(name), "apps/%s/m%05zu.seq", synth_family_name(fam).c_str(),
                    malware_counter);
      rec.app_path = name;
      rec.label = apk::Label::Malware;
      rec.family = synth_family_name(fam);
      rec.year = year;
      seq.source_id = rec.app_path;
      out.manifest.records.push_back(std::move(rec));
      out.sequences.push_back(std::move(seq));
    }
  }
  return out;
}

}  // namespace mdzr::eval
