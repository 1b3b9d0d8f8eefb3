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

#ifndef MDZR_SEQ_PIPELINE_HPP
#define MDZR_SEQ_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mdzr/dex_parser.hpp"
#include "mdzr/errors.hpp"

namespace mdzr::seq {

/// Reserved identifiers. Padding and unknown are distinct on purpose; the
/// paper-compat mode folds unknown into 0 at discretization time.
inline constexpr uint32_t kPadId = 0;
inline constexpr uint32_t kUnkId = 1;
inline constexpr uint32_t kFirstTokenId = 2;

/// Canonical-string -> dense integer id map. Ids 2.. are assigned by
/// descending corpus frequency, ties broken lexicographically.
class ApiDictionary {
 public:
  /// An empty dictionary holding only the reserved ids.
  ApiDictionary();

  /// Total size including the two reserved ids.
  uint32_t size() const { return static_cast<uint32_t>(id_to_token_.size()); }

  /// Id of a known token, kUnkId otherwise. Never returns kPadId.
  uint32_t id_of(std::string_view token) const;

  bool contains(std::string_view token) const;

  /// Token text for ids >= 2; "<PAD>"/"<UNK>" sentinels for the reserved ids.
  const std::string& token_of(uint32_t id) const;

  /// Versioned line format: `MDZDICT 1 <size>` header, then `id TAB token`
  /// lines for ids >= 2. Round-trips bit-exactly.
  std::string serialize() const;
  void save(const std::string& path) const;
  static ApiDictionary load(const std::string& path);
  static ApiDictionary from_tokens(std::vector<std::string> tokens_in_id_order);

  /// SHA-256 of the serialized form; binds models to the dictionary they
  /// were trained with.
  std::array<uint8_t, 32> digest() const;

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, uint32_t> token_to_id_;
};

struct DiscreteSequence {
  std::vector<uint32_t> ids;
  std::string source_id;
};

struct UnifiedSequence {
  std::vector<uint32_t> ids;      // exactly L entries
  uint32_t original_length = 0;   // pre-padding length, capped at L
};

/// Builds the dictionary over a corpus; if `cap` is set, only the `cap` most
/// frequent tokens are kept (dictionary size = cap + 2).
ApiDictionary build_dictionary(const std::vector<const dex::ApiCallSequence*>& corpus,
                               std::optional<uint32_t> cap = std::nullopt);
ApiDictionary build_dictionary(const std::vector<dex::ApiCallSequence>& corpus,
                               std::optional<uint32_t> cap = std::nullopt);

/// Known tokens map to their ids, unknown to kUnkId (or kPadId when
/// `paper_compat_unk_zero` replicates the original scheme).
DiscreteSequence discretize(const dex::ApiCallSequence& seq, const ApiDictionary& dict,
                            bool paper_compat_unk_zero = false);

/// Truncates to the first L ids or pads with kPadId up to L.
UnifiedSequence unify(const DiscreteSequence& seq, uint32_t length);

/// Splits into `n_blocks` contiguous blocks (first `len % n_blocks` blocks one
/// element longer), permutes block order with a seeded PRNG, preserves order
/// within blocks.
DiscreteSequence block_shuffle(const DiscreteSequence& seq, uint32_t n_blocks, uint64_t seed);

}  // namespace mdzr::seq

#endif  // MDZR_SEQ_PIPELINE_HPP
