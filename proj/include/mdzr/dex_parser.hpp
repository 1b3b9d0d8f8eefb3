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

#ifndef MDZR_DEX_PARSER_HPP
#define MDZR_DEX_PARSER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mdzr/errors.hpp"

namespace mdzr::dex {

/// A resolved `class;->name` pair.
struct MethodRef {
  std::string class_descriptor;  // e.g. "Landroid/telephony/SmsManager;"
  std::string name;              // e.g. "sendTextMessage"
};

struct DexMethodId {
  uint16_t class_type_idx = 0;  // into type descriptors
  uint16_t proto_idx = 0;
  uint32_t name_idx = 0;  // into string pool
};

struct DexEncodedMethod {
  uint32_t method_idx = 0;  // into method_ids
  uint32_t access_flags = 0;
  uint32_t code_offset = 0;  // 0 = no body (abstract/native)
};

struct DexClassDef {
  uint32_t class_type_idx = 0;
  /// Direct then virtual methods, in encoded order.
  std::vector<DexEncodedMethod> methods;
};

/// Parsed pools and class table. The raw buffer is retained because code
/// items are scanned lazily by extract_call_sequence.
struct DexFile {
  std::string version;  // "035", "037", "038", "039"
  std::vector<std::string> strings;
  std::vector<uint32_t> type_descriptor_idx;  // into strings
  std::vector<DexMethodId> method_ids;
  std::vector<DexClassDef> class_defs;  // file order
  std::vector<uint8_t> bytes;

  MethodRef method_ref(uint32_t method_idx) const;
};

/// Ordered method-call references extracted from one app: instruction order
/// within each body, bodies in encoded order, classes in file order.
struct ApiCallSequence {
  std::vector<std::string> calls;
  std::string source_id;
};

/// Validates the header (magic `dex\n0NN\0`, declared size, section bounds)
/// and materializes the string/type/method pools and class table.
DexFile parse_dex(std::vector<uint8_t> bytes);

/// Canonical display form: leading `L` stripped, trailing `;` kept,
/// `->`, method name. The prototype is omitted, so overloads collapse.
std::string format_method_ref(const MethodRef& ref);

/// Linear sweep of every method body; appends the canonical string of each
/// invoke-kind instruction's referenced method. No filtering by default; when
/// `prefix_filter` is non-empty, only calls starting with one of the given
/// prefixes are kept.
ApiCallSequence extract_call_sequence(const DexFile& dex, Diagnostics* diagnostics = nullptr,
                                      const std::vector<std::string>& prefix_filter = {});

/// Lenient MUTF-8 decoding; invalid units become U+FFFD so one bad string
/// cannot abort extraction.
std::string decode_mutf8(const uint8_t* data, size_t size);

}  // namespace mdzr::dex

#endif  // MDZR_DEX_PARSER_HPP
