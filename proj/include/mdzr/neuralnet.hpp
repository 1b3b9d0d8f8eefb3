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

#ifndef MDZR_NEURALNET_HPP
#define MDZR_NEURALNET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdzr/errors.hpp"
#include "mdzr/seq_pipeline.hpp"

namespace mdzr::nn {

enum class Task { Detection, Attribution };

/// Embedding + 1-D convolution + global max pool + dense classifier.
/// Detection uses a single logistic output; attribution a softmax over
/// families.
struct Hyperparams {
  uint32_t seq_len = 512;     // L (desk-scale default; raise via --seq-len)
  uint32_t embed_dim = 64;    // K
  uint32_t vocab_size = 2;    // A, set from the dictionary at training time
  uint32_t filters = 512;
  uint32_t kernel = 3;
  uint32_t hidden = 256;
  double dropout_rate = 0.5;
  uint32_t epochs = 10;
  double learning_rate = 1e-3;
  uint32_t batch_size = 32;
  Task task = Task::Detection;
  uint32_t n_families = 0;    // F, attribution only
  bool batchnorm = true;

  uint32_t outputs() const { return task == Task::Detection ? 1 : n_families; }
  uint32_t conv_positions() const { return seq_len - kernel + 1; }
  void validate() const;  // ConfigError on nonsense dimensions
};

/// The full trainable parameter set. Embedding row 0 (PAD) stays all-zero and
/// is excluded from updates.
struct ModelParams {
  Hyperparams hp;
  std::vector<double> embedding;        // A x K
  std::vector<double> conv_w;           // filters x (kernel*K)
  std::vector<double> conv_b;           // filters
  std::vector<double> dense_w;          // hidden x filters
  std::vector<double> dense_b;          // hidden
  std::vector<double> bn_gamma;         // hidden
  std::vector<double> bn_beta;          // hidden
  std::vector<double> bn_running_mean;  // hidden
  std::vector<double> bn_running_var;   // hidden
  std::vector<double> out_w;            // outputs x hidden
  std::vector<double> out_b;            // outputs

  bool all_finite() const;
  /// Tensors in serialization order, paired with their names.
  std::vector<std::pair<const char*, const std::vector<double>*>> tensors() const;
  std::vector<std::pair<const char*, std::vector<double>*>> tensors();
};

enum class Mode { Train, Infer };

/// Per-sample activations retained for exact backprop. Together with the
/// (unchanged) parameters and the stored ids this reconstructs every
/// intermediate the backward pass needs; full conv maps are not kept because
/// only the argmax positions carry gradient.
struct SampleTrace {
  std::vector<uint32_t> ids;        // L
  std::vector<uint32_t> pool_argmax;  // filters: position of the max
  std::vector<double> pool_pre;     // filters: pre-ReLU value at that position
  std::vector<double> pooled;       // filters: post-ReLU max
  std::vector<double> dense_pre;    // hidden
  std::vector<double> bn_xhat;      // hidden (batchnorm on, train mode)
  std::vector<double> act2;         // hidden, post-ReLU
  std::vector<uint8_t> drop_mask;   // hidden (train mode with dropout)
  std::vector<double> hidden_out;   // hidden
  std::vector<double> logits;       // outputs
  std::vector<double> probs;        // outputs (sigmoid scalar or softmax)
};

struct ForwardTrace {
  Mode mode = Mode::Infer;
  uint32_t conv_positions = 0;
  std::vector<SampleTrace> samples;
  // Batch statistics (train mode with batchnorm).
  std::vector<double> bn_mean, bn_var, bn_invstd;
};

/// Gradients of the batch-mean loss w.r.t. every parameter.
struct Gradients {
  std::vector<double> embedding, conv_w, conv_b, dense_w, dense_b;
  std::vector<double> bn_gamma, bn_beta;
  std::vector<double> out_w, out_b;

  static Gradients zeros_like(const ModelParams& params);
};

struct Prediction {
  std::vector<double> probs;   // size 1 (detection) or F (attribution)
  double malware_score = 0.0;  // detection only
  bool is_malware = false;     // detection only
  uint32_t argmax = 0;         // attribution: family index (ties -> smallest)
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_mean_loss;
};

/// Seeded init: embedding uniform in [-0.05, 0.05], conv/dense/output uniform
/// scaled by fan-in, biases zero, PAD row zeroed.
ModelParams init_params(const Hyperparams& hp, uint64_t seed);

ForwardTrace forward(const ModelParams& params, const seq::UnifiedSequence& x, Mode mode,
                     uint64_t dropout_seed = 0);
ForwardTrace forward_batch(const ModelParams& params, std::span<const seq::UnifiedSequence> batch,
                           Mode mode, uint64_t dropout_seed = 0);
ForwardTrace forward_batch(const ModelParams& params,
                           std::span<const seq::UnifiedSequence* const> batch, Mode mode,
                           uint64_t dropout_seed = 0);

/// Mean cross-entropy over the traced batch, probabilities clamped to
/// [1e-12, 1 - 1e-12].
double compute_loss(const ForwardTrace& trace, std::span<const uint32_t> labels, Task task);
double compute_loss(const ForwardTrace& trace, uint32_t label, Task task);

/// Exact gradients; requires a train-mode trace (StaleTrace otherwise).
/// Max-pool routes gradient to the argmax position, PAD's embedding row is
/// forced to zero.
Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const uint32_t> labels);
Gradients backward(const ModelParams& params, const ForwardTrace& trace, uint32_t label);

/// Seeded shuffled mini-batches with Adam (beta1=0.9, beta2=0.999, eps=1e-8).
/// Deterministic given the seed; updates batchnorm running statistics with
/// momentum 0.9.
TrainResult train(const std::vector<seq::UnifiedSequence>& corpus,
                  const std::vector<uint32_t>& labels, const Hyperparams& hp, uint64_t seed);

Prediction predict(const ModelParams& params, const seq::UnifiedSequence& x,
                   double threshold = 0.5);

}  // namespace mdzr::nn

#endif  // MDZR_NEURALNET_HPP
