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

#include "mdzr/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdzr/rng.hpp"

namespace mdzr::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;
constexpr double kProbClamp = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

// Four independent accumulators so the compiler can vectorize the reduction
// without reassociation flags; the summation order is fixed, keeping results
// bit-reproducible across runs.
double dot(const double* a, const double* b, size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

uint64_t epoch_seed(uint64_t seed, uint32_t epoch) {
  return Rng::derive(seed, 0x45504F4300ULL + epoch);
}

}  // namespace

void Hyperparams::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) raise(ErrorKind::ConfigError, what);
  };
  need(seq_len >= 1, "seq_len must be >= 1");
  need(embed_dim >= 1, "embed_dim must be >= 1");
  need(vocab_size >= 2, "vocab_size must cover PAD and UNK");
  need(filters >= 1, "filters must be >= 1");
  need(kernel >= 1, "kernel must be >= 1");
  need(kernel <= seq_len, "kernel wider than the sequence");
  need(hidden >= 1, "hidden must be >= 1");
  need(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout rate must be in [0, 1)");
  need(epochs >= 1, "epochs must be >= 1");
  need(learning_rate > 0.0, "learning rate must be positive");
  need(batch_size >= 1, "batch size must be >= 1");
  if (task == Task::Attribution) {
    need(n_families >= 2, "attribution needs at least 2 families");
  }
}

bool ModelParams::all_finite() const {
  for (const auto& [name, tensor] : tensors()) {
    if (!finite_all(*tensor)) return false;
  }
  return true;
}

std::vector<std::pair<const char*, const std::vector<double>*>> ModelParams::tensors() const {
  return {{"embedding", &embedding}, {"conv_w", &conv_w},
          {"conv_b", &conv_b},       {"dense_w", &dense_w},
          {"dense_b", &dense_b},     {"bn_gamma", &bn_gamma},
          {"bn_beta", &bn_beta},     {"bn_running_mean", &bn_running_mean},
          {"bn_running_var", &bn_running_var}, {"out_w", &out_w},
          {"out_b", &out_b}};
}

std::vector<std::pair<const char*, std::vector<double>*>> ModelParams::tensors() {
  return {{"embedding", &embedding}, {"conv_w", &conv_w},
          {"conv_b", &conv_b},       {"dense_w", &dense_w},
          {"dense_b", &dense_b},     {"bn_gamma", &bn_gamma},
          {"bn_beta", &bn_beta},     {"bn_running_mean", &bn_running_mean},
          {"bn_running_var", &bn_running_var}, {"out_w", &out_w},
          {"out_b", &out_b}};
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.embedding.assign(params.embedding.size(), 0.0);
  g.conv_w.assign(params.conv_w.size(), 0.0);
  g.conv_b.assign(params.conv_b.size(), 0.0);
  g.dense_w.assign(params.dense_w.size(), 0.0);
  g.dense_b.assign(params.dense_b.size(), 0.0);
  g.bn_gamma.assign(params.bn_gamma.size(), 0.0);
  g.bn_beta.assign(params.bn_beta.size(), 0.0);
  g.out_w.assign(params.out_w.size(), 0.0);
  g.out_b.assign(params.out_b.size(), 0.0);
  return g;
}

ModelParams init_params(const Hyperparams& hp, uint64_t seed) {
  hp.validate();
  Rng rng(seed);
  ModelParams p;
  p.hp = hp;

  const size_t K = hp.embed_dim;
  p.embedding.assign(size_t{hp.vocab_size} * K, 0.0);
  // Row 0 (PAD) stays zero so padding cannot leak into conv features.
  for (size_t i = K; i < p.embedding.size(); ++i) p.embedding[i] = rng.uniform(-0.05, 0.05);

  auto fan_in_uniform = [&rng](std::vector<double>& w, size_t count, size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    w.resize(count);
    for (double& x : w) x = rng.uniform(-bound, bound);
  };
  const size_t window = size_t{hp.kernel} * K;
  fan_in_uniform(p.conv_w, size_t{hp.filters} * window, window);
  p.conv_b.assign(hp.filters, 0.0);
  fan_in_uniform(p.dense_w, size_t{hp.hidden} * hp.filters, hp.filters);
  p.dense_b.assign(hp.hidden, 0.0);
  p.bn_gamma.assign(hp.hidden, 1.0);
  p.bn_beta.assign(hp.hidden, 0.0);
  p.bn_running_mean.assign(hp.hidden, 0.0);
  p.bn_running_var.assign(hp.hidden, 1.0);
  fan_in_uniform(p.out_w, size_t{hp.outputs()} * hp.hidden, hp.hidden);
  p.out_b.assign(hp.outputs(), 0.0);
  return p;
}

ForwardTrace forward_batch(const ModelParams& params,
                           std::span<const seq::UnifiedSequence* const> batch, Mode mode,
                           uint64_t dropout_seed) {
  const Hyperparams& hp = params.hp;
  const size_t L = hp.seq_len;
  const size_t K = hp.embed_dim;
  const size_t F = hp.filters;
  const size_t H = hp.hidden;
  const size_t C = hp.outputs();
  const size_t W = hp.kernel;
  const size_t P = L - W + 1;
  const size_t window = W * K;
  if (batch.empty()) raise(ErrorKind::DimensionMismatch, "empty batch");

  ForwardTrace trace;
  trace.mode = mode;
  trace.conv_positions = static_cast<uint32_t>(P);
  trace.samples.resize(batch.size());

  std::vector<double> emb(L * K);
  for (size_t i = 0; i < batch.size(); ++i) {
    const seq::UnifiedSequence& x = *batch[i];
    if (x.ids.size() != L) {
      raise(ErrorKind::DimensionMismatch, "input length " + std::to_string(x.ids.size()) +
                                              " != configured L " + std::to_string(L));
    }
    SampleTrace& s = trace.samples[i];
    s.ids = x.ids;

    for (size_t pos = 0; pos < L; ++pos) {
      const uint32_t id = x.ids[pos];
      if (id >= hp.vocab_size) {
        raise(ErrorKind::IndexOutOfPool,
              "id " + std::to_string(id) + " >= vocab " + std::to_string(hp.vocab_size));
      }
      std::copy_n(params.embedding.data() + size_t{id} * K, K, emb.data() + pos * K);
    }

    // Convolution fused with the global max pool: ReLU is monotone, so the
    // post-ReLU max sits at the pre-activation argmax.
    s.pool_argmax.resize(F);
    s.pool_pre.resize(F);
    s.pooled.resize(F);
    for (size_t f = 0; f < F; ++f) {
      const double* wf = params.conv_w.data() + f * window;
      const double bias = params.conv_b[f];
      double best = -std::numeric_limits<double>::infinity();
      size_t best_pos = 0;
      for (size_t pos = 0; pos < P; ++pos) {
        const double v = bias + dot(emb.data() + pos * K, wf, window);
        if (v > best) {
          best = v;
          best_pos = pos;
        }
      }
      s.pool_argmax[f] = static_cast<uint32_t>(best_pos);
      s.pool_pre[f] = best;
      s.pooled[f] = best > 0.0 ? best : 0.0;
    }

    s.dense_pre.resize(H);
    for (size_t h = 0; h < H; ++h) {
      s.dense_pre[h] = params.dense_b[h] + dot(params.dense_w.data() + h * F, s.pooled.data(), F);
    }
  }

  const bool bn_batch_stats = hp.batchnorm && mode == Mode::Train;
  if (bn_batch_stats) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    trace.bn_mean.assign(H, 0.0);
    trace.bn_var.assign(H, 0.0);
    trace.bn_invstd.assign(H, 0.0);
    for (const SampleTrace& s : trace.samples) {
      for (size_t h = 0; h < H; ++h) trace.bn_mean[h] += s.dense_pre[h];
    }
    for (size_t h = 0; h < H; ++h) trace.bn_mean[h] *= inv_b;
    for (const SampleTrace& s : trace.samples) {
      for (size_t h = 0; h < H; ++h) {
        const double d = s.dense_pre[h] - trace.bn_mean[h];
        trace.bn_var[h] += d * d;
      }
    }
    for (size_t h = 0; h < H; ++h) {
      trace.bn_var[h] *= inv_b;
      trace.bn_invstd[h] = 1.0 / std::sqrt(trace.bn_var[h] + kBnEps);
    }
  }

  const bool use_dropout = mode == Mode::Train && hp.dropout_rate > 0.0;
  Rng drop_rng(dropout_seed);
  const double keep_scale = use_dropout ? 1.0 / (1.0 - hp.dropout_rate) : 1.0;

  for (SampleTrace& s : trace.samples) {
    std::vector<double> y(H);
    if (hp.batchnorm) {
      if (mode == Mode::Train) {
        s.bn_xhat.resize(H);
        for (size_t h = 0; h < H; ++h) {
          s.bn_xhat[h] = (s.dense_pre[h] - trace.bn_mean[h]) * trace.bn_invstd[h];
          y[h] = params.bn_gamma[h] * s.bn_xhat[h] + params.bn_beta[h];
        }
      } else {
        for (size_t h = 0; h < H; ++h) {
          const double xhat = (s.dense_pre[h] - params.bn_running_mean[h]) /
                              std::sqrt(params.bn_running_var[h] + kBnEps);
          y[h] = params.bn_gamma[h] * xhat + params.bn_beta[h];
        }
      }
    } else {
      y = s.dense_pre;
    }

    s.act2.resize(H);
    for (size_t h = 0; h < H; ++h) s.act2[h] = y[h] > 0.0 ? y[h] : 0.0;

    s.hidden_out.resize(H);
    if (use_dropout) {
      s.drop_mask.resize(H);
      for (size_t h = 0; h < H; ++h) {
        const bool keep = drop_rng.uniform() >= hp.dropout_rate;
        s.drop_mask[h] = keep ? 1 : 0;
        s.hidden_out[h] = keep ? s.act2[h] * keep_scale : 0.0;
      }
    } else {
      s.hidden_out = s.act2;
    }

    s.logits.resize(C);
    for (size_t c = 0; c < C; ++c) {
      s.logits[c] = params.out_b[c] + dot(params.out_w.data() + c * H, s.hidden_out.data(), H);
    }

    s.probs.resize(C);
    if (hp.task == Task::Detection) {
      s.probs[0] = sigmoid(s.logits[0]);
    } else {
      const double max_logit = *std::max_element(s.logits.begin(), s.logits.end());
      double sum = 0.0;
      for (size_t c = 0; c < C; ++c) {
        s.probs[c] = std::exp(s.logits[c] - max_logit);
        sum += s.probs[c];
      }
      for (size_t c = 0; c < C; ++c) s.probs[c] /= sum;
    }
  }
  return trace;
}

ForwardTrace forward_batch(const ModelParams& params, std::span<const seq::UnifiedSequence> batch,
                           Mode mode, uint64_t dropout_seed) {
  std::vector<const seq::UnifiedSequence*> ptrs(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) ptrs[i] = &batch[i];
  return forward_batch(params, std::span<const seq::UnifiedSequence* const>(ptrs), mode,
                       dropout_seed);
}

ForwardTrace forward(const ModelParams& params, const seq::UnifiedSequence& x, Mode mode,
                     uint64_t dropout_seed) {
  const seq::UnifiedSequence* ptr = &x;
  return forward_batch(params, std::span<const seq::UnifiedSequence* const>(&ptr, 1), mode,
                       dropout_seed);
}

double compute_loss(const ForwardTrace& trace, std::span<const uint32_t> labels, Task task) {
  if (labels.size() != trace.samples.size()) {
    raise(ErrorKind::DimensionMismatch, "labels/batch size mismatch");
  }
  double total = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const SampleTrace& s = trace.samples[i];
    const uint32_t label = labels[i];
    if (task == Task::Detection) {
      if (label > 1) raise(ErrorKind::BadLabel, "detection label must be 0 or 1");
      const double p = clamp_prob(s.probs[0]);
      total += label == 1 ? -std::log(p) : -std::log(1.0 - p);
    } else {
      if (label >= s.probs.size()) {
        raise(ErrorKind::BadLabel, "family label " + std::to_string(label) + " of " +
                                       std::to_string(s.probs.size()));
      }
      total += -std::log(clamp_prob(s.probs[label]));
    }
  }
  return total / static_cast<double>(labels.size());
}

double compute_loss(const ForwardTrace& trace, uint32_t label, Task task) {
  return compute_loss(trace, std::span<const uint32_t>(&label, 1), task);
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace,
                   std::span<const uint32_t> labels) {
  if (trace.mode != Mode::Train) {
    raise(ErrorKind::StaleTrace, "backward needs a train-mode trace with retained activations");
  }
  if (labels.size() != trace.samples.size()) {
    raise(ErrorKind::DimensionMismatch, "labels/batch size mismatch");
  }
  const Hyperparams& hp = params.hp;
  const size_t K = hp.embed_dim;
  const size_t F = hp.filters;
  const size_t H = hp.hidden;
  const size_t C = hp.outputs();
  const size_t W = hp.kernel;
  const size_t window = W * K;
  const size_t B = trace.samples.size();
  const double inv_b = 1.0 / static_cast<double>(B);

  Gradients g = Gradients::zeros_like(params);

  // Through the output layer, dropout, and ReLU; dy is kept per sample
  // because batchnorm couples the batch.
  std::vector<std::vector<double>> dy(B, std::vector<double>(H, 0.0));
  const double keep_scale =
      hp.dropout_rate > 0.0 ? 1.0 / (1.0 - hp.dropout_rate) : 1.0;
  std::vector<double> dlogits(C);
  for (size_t i = 0; i < B; ++i) {
    const SampleTrace& s = trace.samples[i];
    const uint32_t label = labels[i];
    if (hp.task == Task::Detection) {
      if (label > 1) raise(ErrorKind::BadLabel, "detection label must be 0 or 1");
      dlogits[0] = (s.probs[0] - static_cast<double>(label)) * inv_b;
    } else {
      if (label >= C) {
        raise(ErrorKind::BadLabel, "label " + std::to_string(label) + " of " + std::to_string(C));
      }
      for (size_t c = 0; c < C; ++c) {
        dlogits[c] = (s.probs[c] - (c == label ? 1.0 : 0.0)) * inv_b;
      }
    }

    for (size_t c = 0; c < C; ++c) {
      const double dl = dlogits[c];
      double* wrow = g.out_w.data() + c * H;
      for (size_t h = 0; h < H; ++h) wrow[h] += dl * s.hidden_out[h];
      g.out_b[c] += dl;
    }

    std::vector<double>& dyi = dy[i];
    for (size_t c = 0; c < C; ++c) {
      const double dl = dlogits[c];
      const double* wrow = params.out_w.data() + c * H;
      for (size_t h = 0; h < H; ++h) dyi[h] += dl * wrow[h];
    }
    for (size_t h = 0; h < H; ++h) {
      if (!s.drop_mask.empty()) dyi[h] = s.drop_mask[h] ? dyi[h] * keep_scale : 0.0;
      if (s.act2[h] <= 0.0) dyi[h] = 0.0;  // ReLU
    }
  }

  // Batchnorm backward (batch statistics), or pass-through.
  std::vector<std::vector<double>> ddense(B, std::vector<double>(H, 0.0));
  if (hp.batchnorm) {
    for (size_t h = 0; h < H; ++h) {
      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (size_t i = 0; i < B; ++i) {
        sum_dy += dy[i][h];
        sum_dy_xhat += dy[i][h] * trace.samples[i].bn_xhat[h];
      }
      g.bn_gamma[h] = sum_dy_xhat;
      g.bn_beta[h] = sum_dy;
      const double scale = params.bn_gamma[h] * trace.bn_invstd[h] / static_cast<double>(B);
      for (size_t i = 0; i < B; ++i) {
        ddense[i][h] = scale * (static_cast<double>(B) * dy[i][h] - sum_dy -
                                trace.samples[i].bn_xhat[h] * sum_dy_xhat);
      }
    }
  } else {
    ddense = dy;
  }

  // Dense layer, then the sparse conv/embedding path: only each filter's
  // argmax position carries gradient.
  std::vector<double> dpooled(F);
  for (size_t i = 0; i < B; ++i) {
    const SampleTrace& s = trace.samples[i];
    const std::vector<double>& dd = ddense[i];
    std::fill(dpooled.begin(), dpooled.end(), 0.0);
    for (size_t h = 0; h < H; ++h) {
      const double d = dd[h];
      g.dense_b[h] += d;
      double* wrow = g.dense_w.data() + h * F;
      const double* prow = params.dense_w.data() + h * F;
      for (size_t f = 0; f < F; ++f) {
        wrow[f] += d * s.pooled[f];
        dpooled[f] += d * prow[f];
      }
    }

    for (size_t f = 0; f < F; ++f) {
      if (s.pool_pre[f] <= 0.0) continue;  // filter inactive everywhere
      const double gconv = dpooled[f];
      if (gconv == 0.0) continue;
      g.conv_b[f] += gconv;
      const size_t pos = s.pool_argmax[f];
      double* wgrad = g.conv_w.data() + f * window;
      const double* wparam = params.conv_w.data() + f * window;
      for (size_t w = 0; w < W; ++w) {
        const uint32_t id = s.ids[pos + w];
        const double* erow = params.embedding.data() + size_t{id} * K;
        for (size_t k = 0; k < K; ++k) wgrad[w * K + k] += gconv * erow[k];
        if (id != seq::kPadId) {
          double* egrad = g.embedding.data() + size_t{id} * K;
          for (size_t k = 0; k < K; ++k) egrad[k] += gconv * wparam[w * K + k];
        }
      }
    }
  }
  return g;
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace, uint32_t label) {
  return backward(params, trace, std::span<const uint32_t>(&label, 1));
}

namespace {

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad, AdamState& state,
               double lr, uint64_t t, size_t skip_prefix = 0) {
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (size_t i = skip_prefix; i < param.size(); ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    param[i] -= lr * (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + kAdamEps);
  }
}

}  // namespace

TrainResult train(const std::vector<seq::UnifiedSequence>& corpus,
                  const std::vector<uint32_t>& labels, const Hyperparams& hp, uint64_t seed) {
  hp.validate();
  if (corpus.empty()) raise(ErrorKind::EmptyCorpus, "training corpus is empty");
  if (labels.size() != corpus.size()) {
    raise(ErrorKind::DimensionMismatch, "labels/corpus size mismatch");
  }
  const uint32_t n_classes = hp.task == Task::Detection ? 2 : hp.outputs();
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) {
      raise(ErrorKind::LabelOutOfRange, "label " + std::to_string(labels[i]) + " at sample " +
                                            std::to_string(i) + " exceeds " +
                                            std::to_string(n_classes - 1));
    }
  }

  TrainResult result;
  result.params = init_params(hp, seed);
  ModelParams& params = result.params;

  std::vector<AdamState> states;
  // Optimizer slots in a fixed order; the PAD row of the embedding is frozen.
  std::vector<std::vector<double>*> slots = {&params.embedding, &params.conv_w,  &params.conv_b,
                                             &params.dense_w,   &params.dense_b, &params.bn_gamma,
                                             &params.bn_beta,   &params.out_w,   &params.out_b};
  states.reserve(slots.size());
  for (auto* tensor : slots) states.emplace_back(tensor->size());

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), size_t{0});

  uint64_t step = 0;
  for (uint32_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const uint64_t eseed = epoch_seed(seed, epoch);
    Rng shuffle_rng(Rng::derive(eseed, 1));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    size_t batch_index = 0;
    for (size_t start = 0; start < order.size(); start += hp.batch_size, ++batch_index) {
      const size_t end = std::min(order.size(), start + hp.batch_size);
      std::vector<const seq::UnifiedSequence*> batch;
      std::vector<uint32_t> batch_labels;
      batch.reserve(end - start);
      batch_labels.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        batch.push_back(&corpus[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }

      const uint64_t dropout_seed = Rng::derive(eseed, 2 + batch_index);
      const ForwardTrace trace = forward_batch(
          params, std::span<const seq::UnifiedSequence* const>(batch), Mode::Train, dropout_seed);
      loss_sum += compute_loss(trace, batch_labels, hp.task) * static_cast<double>(batch.size());
      const Gradients grads = backward(params, trace, batch_labels);

      ++step;
      const std::vector<const std::vector<double>*> grad_slots = {
          &grads.embedding, &grads.conv_w,  &grads.conv_b, &grads.dense_w, &grads.dense_b,
          &grads.bn_gamma,  &grads.bn_beta, &grads.out_w,  &grads.out_b};
      for (size_t s = 0; s < slots.size(); ++s) {
        const size_t skip = slots[s] == &params.embedding ? hp.embed_dim : 0;
        adam_step(*slots[s], *grad_slots[s], states[s], hp.learning_rate, step, skip);
      }

      if (hp.batchnorm) {
        for (size_t h = 0; h < hp.hidden; ++h) {
          params.bn_running_mean[h] =
              kBnMomentum * params.bn_running_mean[h] + (1.0 - kBnMomentum) * trace.bn_mean[h];
          params.bn_running_var[h] =
              kBnMomentum * params.bn_running_var[h] + (1.0 - kBnMomentum) * trace.bn_var[h];
        }
      }
    }

    if (!params.all_finite()) {
      raise(ErrorKind::NumericError,
            "non-finite parameter after epoch " + std::to_string(epoch));
    }
    result.epoch_mean_loss.push_back(loss_sum / static_cast<double>(corpus.size()));
  }
  return result;
}

Prediction predict(const ModelParams& params, const seq::UnifiedSequence& x, double threshold) {
  const ForwardTrace trace = forward(params, x, Mode::Infer);
  const SampleTrace& s = trace.samples[0];
  Prediction pred;
  pred.probs = s.probs;
  if (params.hp.task == Task::Detection) {
    pred.malware_score = s.probs[0];
    pred.is_malware = pred.malware_score >= threshold;
  } else {
    pred.argmax = 0;
    for (uint32_t c = 1; c < s.probs.size(); ++c) {
      if (s.probs[c] > s.probs[pred.argmax]) pred.argmax = c;
    }
  }
  return pred;
}

}  // namespace mdzr::nn
