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

#include "mdzr/model_store.hpp"

#include <bit>
#include <cstring>

#include "mdzr/io_util.hpp"

namespace mdzr::store {

namespace {

constexpr char kMagic[4] = {'M', 'D', 'Z', '1'};
constexpr uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void bytes(const void* data, size_t size) {
    const auto* p = static_cast<const uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + size);
  }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::vector<uint8_t>& buf, std::string context)
      : buf_(buf), context_(std::move(context)) {}

  void require(size_t n) const {
    if (pos_ + n > buf_.size()) {
      raise(ErrorKind::CorruptTensor, context_ + ": truncated at byte " + std::to_string(pos_));
    }
  }
  uint32_t u32() {
    require(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    require(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void bytes(void* out, size_t n) {
    require(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == buf_.size(); }
  size_t pos() const { return pos_; }

 private:
  const std::vector<uint8_t>& buf_;
  std::string context_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<uint8_t> serialize_model(const nn::ModelParams& params,
                                     const std::array<uint8_t, 32>& dict_digest,
                                     const std::vector<std::string>& class_names) {
  if (!params.all_finite()) {
    raise(ErrorKind::NumericError, "refusing to save non-finite parameters");
  }
  const nn::Hyperparams& hp = params.hp;
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kFormatVersion);

  w.u32(hp.task == nn::Task::Detection ? 0 : 1);
  w.u32(hp.seq_len);
  w.u32(hp.embed_dim);
  w.u32(hp.vocab_size);
  w.u32(hp.filters);
  w.u32(hp.kernel);
  w.u32(hp.hidden);
  w.f64(hp.dropout_rate);
  w.u32(hp.epochs);
  w.f64(hp.learning_rate);
  w.u32(hp.batch_size);
  w.u32(hp.batchnorm ? 1 : 0);
  w.u32(hp.n_families);

  w.bytes(dict_digest.data(), dict_digest.size());

  w.u32(static_cast<uint32_t>(class_names.size()));
  for (const std::string& name : class_names) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
  }

  for (const auto& [name, tensor] : params.tensors()) {
    w.u64(tensor->size());
    for (const double v : *tensor) w.f64(v);
  }
  return w.take();
}

ModelArtifact deserialize_model(const std::vector<uint8_t>& bytes, const std::string& context) {
  if (bytes.size() < 8) raise(ErrorKind::BadMagic, context + ": too short for a model file");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    // `MDZ` prefix with a different version digit is a format we recognize
    // but cannot read.
    if (std::memcmp(bytes.data(), kMagic, 3) == 0) {
      raise(ErrorKind::VersionUnsupported,
            context + ": model format '" + std::string(bytes.begin(), bytes.begin() + 4) +
                "' not supported (expected MDZ1)");
    }
    raise(ErrorKind::BadMagic, context + ": not a model file");
  }

  Reader r(bytes, context);
  uint8_t magic[4];
  r.bytes(magic, 4);
  const uint32_t version = r.u32();
  if (version != kFormatVersion) {
    raise(ErrorKind::VersionUnsupported,
          context + ": model format version " + std::to_string(version));
  }

  ModelArtifact artifact;
  nn::Hyperparams hp;
  hp.task = r.u32() == 0 ? nn::Task::Detection : nn::Task::Attribution;
  hp.seq_len = r.u32();
  hp.embed_dim = r.u32();
  hp.vocab_size = r.u32();
  hp.filters = r.u32();
  hp.kernel = r.u32();
  hp.hidden = r.u32();
  hp.dropout_rate = r.f64();
  hp.epochs = r.u32();
  hp.learning_rate = r.f64();
  hp.batch_size = r.u32();
  hp.batchnorm = r.u32() != 0;
  hp.n_families = r.u32();
  artifact.params.hp = hp;

  r.bytes(artifact.dict_digest.data(), artifact.dict_digest.size());

  const uint32_t name_count = r.u32();
  artifact.class_names.reserve(name_count);
  for (uint32_t i = 0; i < name_count; ++i) {
    const uint32_t len = r.u32();
    r.require(len);
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    artifact.class_names.push_back(std::move(name));
  }

  // Expected tensor sizes follow from the hyperparams alone.
  const uint64_t K = hp.embed_dim;
  const std::vector<std::pair<const char*, uint64_t>> expected = {
      {"embedding", uint64_t{hp.vocab_size} * K},
      {"conv_w", uint64_t{hp.filters} * hp.kernel * K},
      {"conv_b", hp.filters},
      {"dense_w", uint64_t{hp.hidden} * hp.filters},
      {"dense_b", hp.hidden},
      {"bn_gamma", hp.hidden},
      {"bn_beta", hp.hidden},
      {"bn_running_mean", hp.hidden},
      {"bn_running_var", hp.hidden},
      {"out_w", uint64_t{hp.outputs()} * hp.hidden},
      {"out_b", hp.outputs()}};

  auto slots = artifact.params.tensors();
  for (size_t t = 0; t < expected.size(); ++t) {
    const uint64_t declared = r.u64();
    if (declared != expected[t].second) {
      raise(ErrorKind::CorruptTensor,
            context + ": tensor " + expected[t].first + " declares " + std::to_string(declared) +
                " elements, hyperparams imply " + std::to_string(expected[t].second));
    }
    r.require(declared * 8);
    std::vector<double>& out = *slots[t].second;
    out.resize(declared);
    for (uint64_t i = 0; i < declared; ++i) out[i] = r.f64();
  }
  if (!r.at_end()) {
    raise(ErrorKind::CorruptTensor, context + ": trailing bytes after tensor data");
  }
  return artifact;
}

void save_model(const nn::ModelParams& params, const std::array<uint8_t, 32>& dict_digest,
                const std::vector<std::string>& class_names, const std::string& path) {
  const std::vector<uint8_t> bytes = serialize_model(params, dict_digest, class_names);
  write_file_atomic(path, bytes.data(), bytes.size());
}

ModelArtifact load_model(const std::string& path) {
  return deserialize_model(read_file(path), path);
}

}  // namespace mdzr::store
