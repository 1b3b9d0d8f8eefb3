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

#include "mdzr/seq_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mdzr/io_util.hpp"
#include "mdzr/rng.hpp"

namespace mdzr::seq {

namespace {
const std::string kPadToken = "<PAD>";
const std::string kUnkToken = "<UNK>";
}  // namespace

ApiDictionary::ApiDictionary() : id_to_token_{kPadToken, kUnkToken} {}

uint32_t ApiDictionary::id_of(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool ApiDictionary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

const std::string& ApiDictionary::token_of(uint32_t id) const {
  if (id >= id_to_token_.size()) {
    raise(ErrorKind::IndexOutOfPool,
          "id " + std::to_string(id) + " of " + std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

std::string ApiDictionary::serialize() const {
  std::ostringstream out;
  out << "MDZDICT 1 " << size() << '\n';
  for (uint32_t id = kFirstTokenId; id < size(); ++id) {
    out << id << '\t' << id_to_token_[id] << '\n';
  }
  return out.str();
}

void ApiDictionary::save(const std::string& path) const {
  const std::string text = serialize();
  write_file_atomic(path, text.data(), text.size());
}

ApiDictionary ApiDictionary::from_tokens(std::vector<std::string> tokens_in_id_order) {
  ApiDictionary dict;
  dict.id_to_token_.reserve(tokens_in_id_order.size() + 2);
  for (std::string& token : tokens_in_id_order) {
    const auto id = static_cast<uint32_t>(dict.id_to_token_.size());
    if (!dict.token_to_id_.emplace(token, id).second) {
      raise(ErrorKind::SchemaError, "duplicate dictionary token " + token);
    }
    dict.id_to_token_.push_back(std::move(token));
  }
  return dict;
}

ApiDictionary ApiDictionary::load(const std::string& path) {
  const std::vector<uint8_t> raw = read_file(path);
  std::istringstream in(std::string(raw.begin(), raw.end()));
  std::string header;
  if (!std::getline(in, header)) {
    raise(ErrorKind::SchemaError, path + ": empty dictionary file");
  }
  std::istringstream hs(header);
  std::string magic;
  uint32_t version = 0;
  uint32_t declared_size = 0;
  if (!(hs >> magic >> version >> declared_size) || magic != "MDZDICT") {
    raise(ErrorKind::SchemaError, path + ": bad dictionary header '" + header + "'");
  }
  if (version != 1) {
    raise(ErrorKind::VersionUnsupported, path + ": dictionary version " + std::to_string(version));
  }

  std::vector<std::string> tokens;
  std::string line;
  size_t line_no = 1;
  uint32_t expected_id = kFirstTokenId;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      raise(ErrorKind::SchemaError, path + ":" + std::to_string(line_no) + ": missing TAB");
    }
    uint32_t id = 0;
    const auto rc = std::from_chars(line.data(), line.data() + tab, id);
    if (rc.ec != std::errc() || rc.ptr != line.data() + tab || id != expected_id) {
      raise(ErrorKind::SchemaError,
            path + ":" + std::to_string(line_no) + ": ids must be dense starting at 2");
    }
    tokens.push_back(line.substr(tab + 1));
    ++expected_id;
  }
  if (tokens.size() + 2 != declared_size) {
    raise(ErrorKind::SchemaError, path + ": header declares " + std::to_string(declared_size) +
                                      " ids, found " + std::to_string(tokens.size() + 2));
  }
  return from_tokens(std::move(tokens));
}

std::array<uint8_t, 32> ApiDictionary::digest() const {
  const std::string text = serialize();
  return sha256(text.data(), text.size());
}

ApiDictionary build_dictionary(const std::vector<const dex::ApiCallSequence*>& corpus,
                               std::optional<uint32_t> cap) {
  if (corpus.empty()) {
    raise(ErrorKind::EmptyCorpus, "cannot build a dictionary from an empty corpus");
  }
  std::unordered_map<std::string, uint64_t> freq;
  for (const dex::ApiCallSequence* seq : corpus) {
    for (const std::string& call : seq->calls) ++freq[call];
  }

  std::vector<std::pair<std::string, uint64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (cap && ranked.size() > *cap) ranked.resize(*cap);

  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [token, count] : ranked) tokens.push_back(std::move(token));
  return ApiDictionary::from_tokens(std::move(tokens));
}

ApiDictionary build_dictionary(const std::vector<dex::ApiCallSequence>& corpus,
                               std::optional<uint32_t> cap) {
  std::vector<const dex::ApiCallSequence*> ptrs;
  ptrs.reserve(corpus.size());
  for (const auto& seq : corpus) ptrs.push_back(&seq);
  return build_dictionary(ptrs, cap);
}

DiscreteSequence discretize(const dex::ApiCallSequence& seq, const ApiDictionary& dict,
                            bool paper_compat_unk_zero) {
  DiscreteSequence out;
  out.source_id = seq.source_id;
  out.ids.reserve(seq.calls.size());
  for (const std::string& call : seq.calls) {
    uint32_t id = dict.id_of(call);
    if (id == kUnkId && paper_compat_unk_zero) id = kPadId;
    out.ids.push_back(id);
  }
  return out;
}

UnifiedSequence unify(const DiscreteSequence& seq, uint32_t length) {
  if (length < 1) {
    raise(ErrorKind::InvalidLength, "uniform length must be >= 1, got " + std::to_string(length));
  }
  UnifiedSequence out;
  out.original_length = static_cast<uint32_t>(std::min<size_t>(seq.ids.size(), length));
  out.ids.assign(seq.ids.begin(), seq.ids.begin() + out.original_length);
  out.ids.resize(length, kPadId);
  return out;
}

DiscreteSequence block_shuffle(const DiscreteSequence& seq, uint32_t n_blocks, uint64_t seed) {
  if (n_blocks < 1 || (!seq.ids.empty() && n_blocks > seq.ids.size())) {
    raise(ErrorKind::InvalidBlockCount,
          "block count " + std::to_string(n_blocks) + " invalid for sequence of length " +
              std::to_string(seq.ids.size()));
  }
  DiscreteSequence out;
  out.source_id = seq.source_id;
  if (seq.ids.empty()) return out;

  const size_t len = seq.ids.size();
  const size_t base = len / n_blocks;
  const size_t extra = len % n_blocks;  // first `extra` blocks are one longer

  std::vector<uint32_t> order(n_blocks);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  rng.shuffle(order);

  out.ids.reserve(len);
  for (const uint32_t block : order) {
    const size_t begin = block < extra ? block * (base + 1) : extra * (base + 1) + (block - extra) * base;
    const size_t size = block < extra ? base + 1 : base;
    out.ids.insert(out.ids.end(), seq.ids.begin() + begin, seq.ids.begin() + begin + size);
  }
  return out;
}

}  // namespace mdzr::seq
