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

#include "mdzr/dex_parser.hpp"

#include <array>
#include <cstring>
#include <string_view>

namespace mdzr::dex {

namespace {

constexpr size_t kHeaderSize = 0x70;
constexpr uint32_t kEndianConstant = 0x12345678;

// Header field offsets.
constexpr size_t kOffFileSize = 32;
constexpr size_t kOffHeaderSize = 36;
constexpr size_t kOffEndianTag = 40;
constexpr size_t kOffStringIdsSize = 56;
constexpr size_t kOffStringIdsOff = 60;
constexpr size_t kOffTypeIdsSize = 64;
constexpr size_t kOffTypeIdsOff = 68;
constexpr size_t kOffProtoIdsSize = 72;
constexpr size_t kOffMethodIdsSize = 88;
constexpr size_t kOffMethodIdsOff = 92;
constexpr size_t kOffClassDefsSize = 96;
constexpr size_t kOffClassDefsOff = 100;

struct Cursor {
  const uint8_t* data;
  size_t size;

  void require(uint64_t offset, uint64_t length, const char* what) const {
    if (offset + length > size) {
      raise(ErrorKind::TruncatedFile, std::string(what) + " extends past end of file");
    }
  }
  uint8_t u8(uint64_t off, const char* what) const {
    require(off, 1, what);
    return data[off];
  }
  uint16_t u16(uint64_t off, const char* what) const {
    require(off, 2, what);
    return static_cast<uint16_t>(data[off] | (data[off + 1] << 8));
  }
  uint32_t u32(uint64_t off, const char* what) const {
    require(off, 4, what);
    return static_cast<uint32_t>(data[off]) | (static_cast<uint32_t>(data[off + 1]) << 8) |
           (static_cast<uint32_t>(data[off + 2]) << 16) |
           (static_cast<uint32_t>(data[off + 3]) << 24);
  }
  uint32_t uleb128(uint64_t& off, const char* what) const {
    uint32_t result = 0;
    for (int shift = 0; shift < 35; shift += 7) {
      const uint8_t byte = u8(off++, what);
      result |= static_cast<uint32_t>(byte & 0x7f) << shift;
      if ((byte & 0x80) == 0) return result;
    }
    raise(ErrorKind::TruncatedFile, std::string(what) + ": ULEB128 longer than 5 bytes");
  }
};

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

constexpr uint32_t kReplacementChar = 0xfffd;

bool is_continuation(uint8_t b) { return (b & 0xc0) == 0x80; }

/// Instruction widths in 16-bit code units, indexed by opcode.
/// 0 marks opcodes unused in standard DEX files.
std::array<uint8_t, 256> build_width_table() {
  std::array<uint8_t, 256> w{};
  auto fill = [&](uint8_t lo, uint8_t hi, uint8_t width) {
    for (int op = lo; op <= hi; ++op) w[static_cast<size_t>(op)] = width;
  };
  fill(0x00, 0x00, 1);  // nop (payloads handled separately)
  fill(0x01, 0x01, 1);
  fill(0x02, 0x02, 2);
  fill(0x03, 0x03, 3);
  fill(0x04, 0x04, 1);
  fill(0x05, 0x05, 2);
  fill(0x06, 0x06, 3);
  fill(0x07, 0x07, 1);
  fill(0x08, 0x08, 2);
  fill(0x09, 0x09, 3);
  fill(0x0a, 0x12, 1);  // move-result*..const/4
  fill(0x13, 0x13, 2);
  fill(0x14, 0x14, 3);
  fill(0x15, 0x16, 2);
  fill(0x17, 0x17, 3);
  fill(0x18, 0x18, 5);  // const-wide
  fill(0x19, 0x1a, 2);
  fill(0x1b, 0x1b, 3);  // const-string/jumbo
  fill(0x1c, 0x1c, 2);
  fill(0x1d, 0x1e, 1);
  fill(0x1f, 0x20, 2);
  fill(0x21, 0x21, 1);
  fill(0x22, 0x23, 2);
  fill(0x24, 0x26, 3);  // filled-new-array(/range), fill-array-data
  fill(0x27, 0x28, 1);
  fill(0x29, 0x29, 2);
  fill(0x2a, 0x2c, 3);  // goto/32, packed-switch, sparse-switch
  fill(0x2d, 0x3d, 2);  // cmp*, if-*
  // 0x3e..0x43 unused
  fill(0x44, 0x6d, 2);  // array/instance/static field ops
  fill(0x6e, 0x72, 3);  // invoke-kind
  // 0x73 unused
  fill(0x74, 0x78, 3);  // invoke-kind/range
  // 0x79..0x7a unused
  fill(0x7b, 0x8f, 1);  // unary ops
  fill(0x90, 0xaf, 2);  // binops
  fill(0xb0, 0xcf, 1);  // binop/2addr
  fill(0xd0, 0xd7, 2);  // binop/lit16
  fill(0xd8, 0xe2, 2);  // binop/lit8
  // 0xe3..0xf9 unused
  fill(0xfa, 0xfb, 4);  // invoke-polymorphic(/range)
  fill(0xfc, 0xfd, 3);  // invoke-custom(/range)
  fill(0xfe, 0xff, 2);  // const-method-handle/type
  return w;
}

const std::array<uint8_t, 256>& width_table() {
  static const std::array<uint8_t, 256> table = build_width_table();
  return table;
}

bool is_method_invoke(uint8_t op) {
  return (op >= 0x6e && op <= 0x72) || (op >= 0x74 && op <= 0x78) || op == 0xfa || op == 0xfb;
}

bool matches_prefix(const std::string& call, const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) return true;
  for (const std::string& p : prefixes) {
    if (call.compare(0, p.size(), p) == 0) return true;
  }
  return false;
}

}  // namespace

std::string decode_mutf8(const uint8_t* data, size_t size) {
  std::string out;
  out.reserve(size);
  size_t i = 0;
  while (i < size) {
    const uint8_t b = data[i];
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
      ++i;
      continue;
    }
    if ((b & 0xe0) == 0xc0) {
      if (i + 1 >= size || !is_continuation(data[i + 1])) {
        append_utf8(out, kReplacementChar);
        ++i;
        continue;
      }
      // C0 80 is the MUTF-8 encoding of U+0000.
      append_utf8(out, (static_cast<uint32_t>(b & 0x1f) << 6) | (data[i + 1] & 0x3f));
      i += 2;
      continue;
    }
    if ((b & 0xf0) == 0xe0) {
      if (i + 2 >= size || !is_continuation(data[i + 1]) || !is_continuation(data[i + 2])) {
        append_utf8(out, kReplacementChar);
        ++i;
        continue;
      }
      const uint32_t cp = (static_cast<uint32_t>(b & 0x0f) << 12) |
                          (static_cast<uint32_t>(data[i + 1] & 0x3f) << 6) |
                          (data[i + 2] & 0x3f);
      i += 3;
      if (cp >= 0xd800 && cp <= 0xdbff) {
        // Supplementary characters are stored as surrogate pairs of two
        // 3-byte units; recombine when the low half follows.
        if (i + 2 < size && data[i] == 0xed && (data[i + 1] & 0xf0) == 0xb0) {
          const uint32_t lo = (static_cast<uint32_t>(data[i] & 0x0f) << 12) |
                              (static_cast<uint32_t>(data[i + 1] & 0x3f) << 6) |
                              (data[i + 2] & 0x3f);
          append_utf8(out, 0x10000 + ((cp - 0xd800) << 10) + (lo - 0xdc00));
          i += 3;
        } else {
          append_utf8(out, kReplacementChar);
        }
      } else if (cp >= 0xdc00 && cp <= 0xdfff) {
        append_utf8(out, kReplacementChar);  // stray low surrogate
      } else {
        append_utf8(out, cp);
      }
      continue;
    }
    append_utf8(out, kReplacementChar);
    ++i;
  }
  return out;
}

MethodRef DexFile::method_ref(uint32_t method_idx) const {
  const DexMethodId& id = method_ids.at(method_idx);
  return MethodRef{strings.at(type_descriptor_idx.at(id.class_type_idx)), strings.at(id.name_idx)};
}

DexFile parse_dex(std::vector<uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    raise(ErrorKind::TruncatedFile, "buffer smaller than the DEX header (" +
                                        std::to_string(bytes.size()) + " bytes)");
  }
  static const std::string_view kMagicPrefix{"dex\n", 4};
  if (std::memcmp(bytes.data(), kMagicPrefix.data(), 4) != 0 || bytes[7] != 0) {
    raise(ErrorKind::BadMagic, "not a DEX file");
  }
  const std::string version(reinterpret_cast<const char*>(bytes.data() + 4), 3);
  if (version != "035" && version != "037" && version != "038" && version != "039") {
    raise(ErrorKind::BadMagic, "unsupported DEX version '" + version + "'");
  }

  Cursor cur{bytes.data(), bytes.size()};
  if (cur.u32(kOffFileSize, "header") != bytes.size()) {
    raise(ErrorKind::TruncatedFile, "declared file size " +
                                        std::to_string(cur.u32(kOffFileSize, "header")) +
                                        " != buffer length " + std::to_string(bytes.size()));
  }
  if (cur.u32(kOffEndianTag, "header") != kEndianConstant) {
    raise(ErrorKind::BadMagic, "unexpected endian tag");
  }
  if (cur.u32(kOffHeaderSize, "header") != kHeaderSize) {
    raise(ErrorKind::TruncatedFile, "unexpected header size");
  }

  DexFile dex;
  dex.version = version;

  // String pool.
  const uint32_t string_count = cur.u32(kOffStringIdsSize, "header");
  const uint32_t string_ids_off = cur.u32(kOffStringIdsOff, "header");
  cur.require(string_ids_off, uint64_t{string_count} * 4, "string_ids");
  dex.strings.reserve(string_count);
  for (uint32_t i = 0; i < string_count; ++i) {
    uint64_t data_off = cur.u32(string_ids_off + uint64_t{i} * 4, "string_id");
    cur.uleb128(data_off, "string utf16 length");
    const uint64_t start = data_off;
    while (cur.u8(data_off, "string data") != 0) ++data_off;
    dex.strings.push_back(decode_mutf8(bytes.data() + start, data_off - start));
  }

  // Type descriptors.
  const uint32_t type_count = cur.u32(kOffTypeIdsSize, "header");
  const uint32_t type_ids_off = cur.u32(kOffTypeIdsOff, "header");
  cur.require(type_ids_off, uint64_t{type_count} * 4, "type_ids");
  dex.type_descriptor_idx.reserve(type_count);
  for (uint32_t i = 0; i < type_count; ++i) {
    const uint32_t descriptor_idx = cur.u32(type_ids_off + uint64_t{i} * 4, "type_id");
    if (descriptor_idx >= string_count) {
      raise(ErrorKind::IndexOutOfPool, "type " + std::to_string(i) + " names string " +
                                           std::to_string(descriptor_idx) + " of " +
                                           std::to_string(string_count));
    }
    dex.type_descriptor_idx.push_back(descriptor_idx);
  }

  const uint32_t proto_count = cur.u32(kOffProtoIdsSize, "header");

  // Method references.
  const uint32_t method_count = cur.u32(kOffMethodIdsSize, "header");
  const uint32_t method_ids_off = cur.u32(kOffMethodIdsOff, "header");
  cur.require(method_ids_off, uint64_t{method_count} * 8, "method_ids");
  dex.method_ids.reserve(method_count);
  for (uint32_t i = 0; i < method_count; ++i) {
    const uint64_t off = method_ids_off + uint64_t{i} * 8;
    DexMethodId id;
    id.class_type_idx = cur.u16(off, "method_id");
    id.proto_idx = cur.u16(off + 2, "method_id");
    id.name_idx = cur.u32(off + 4, "method_id");
    if (id.class_type_idx >= type_count || id.proto_idx >= proto_count ||
        id.name_idx >= string_count) {
      raise(ErrorKind::IndexOutOfPool, "method " + std::to_string(i) + " has a dangling index");
    }
    dex.method_ids.push_back(id);
  }

  // Class table, in file order.
  const uint32_t class_count = cur.u32(kOffClassDefsSize, "header");
  const uint32_t class_defs_off = cur.u32(kOffClassDefsOff, "header");
  cur.require(class_defs_off, uint64_t{class_count} * 32, "class_defs");
  dex.class_defs.reserve(class_count);
  for (uint32_t i = 0; i < class_count; ++i) {
    const uint64_t off = class_defs_off + uint64_t{i} * 32;
    DexClassDef def;
    def.class_type_idx = cur.u32(off, "class_def");
    if (def.class_type_idx >= type_count) {
      raise(ErrorKind::IndexOutOfPool, "class_def " + std::to_string(i) + " has a dangling type");
    }
    const uint32_t class_data_off = cur.u32(off + 24, "class_def");
    if (class_data_off != 0) {
      uint64_t p = class_data_off;
      const uint32_t static_fields = cur.uleb128(p, "class_data");
      const uint32_t instance_fields = cur.uleb128(p, "class_data");
      const uint32_t direct_methods = cur.uleb128(p, "class_data");
      const uint32_t virtual_methods = cur.uleb128(p, "class_data");
      for (uint32_t f = 0; f < static_fields + instance_fields; ++f) {
        cur.uleb128(p, "encoded_field");
        cur.uleb128(p, "encoded_field");
      }
      auto read_methods = [&](uint32_t n) {
        uint32_t method_idx = 0;
        for (uint32_t m = 0; m < n; ++m) {
          method_idx += cur.uleb128(p, "encoded_method");
          DexEncodedMethod em;
          em.method_idx = method_idx;
          em.access_flags = cur.uleb128(p, "encoded_method");
          em.code_offset = cur.uleb128(p, "encoded_method");
          if (em.method_idx >= method_count) {
            raise(ErrorKind::IndexOutOfPool, "encoded method index " +
                                                 std::to_string(em.method_idx) + " of " +
                                                 std::to_string(method_count));
          }
          def.methods.push_back(em);
        }
      };
      read_methods(direct_methods);
      read_methods(virtual_methods);
    }
    dex.class_defs.push_back(std::move(def));
  }

  dex.bytes = std::move(bytes);
  return dex;
}

std::string format_method_ref(const MethodRef& ref) {
  std::string out;
  const std::string& desc = ref.class_descriptor;
  if (desc.size() >= 2 && desc.front() == 'L' && desc.back() == ';') {
    out.assign(desc, 1, desc.size() - 1);
  } else {
    out = desc;  // array or primitive receiver, kept verbatim
  }
  out += "->";
  out += ref.name;
  return out;
}

ApiCallSequence extract_call_sequence(const DexFile& dex, Diagnostics* diagnostics,
                                      const std::vector<std::string>& prefix_filter) {
  Cursor cur{dex.bytes.data(), dex.bytes.size()};
  const auto& widths = width_table();
  ApiCallSequence seq;

  for (const DexClassDef& cls : dex.class_defs) {
    for (const DexEncodedMethod& method : cls.methods) {
      if (method.code_offset == 0) continue;
      const uint64_t code_off = method.code_offset;
      const uint32_t insns_size = cur.u32(code_off + 12, "code_item");
      const uint64_t insns_base = code_off + 16;
      cur.require(insns_base, uint64_t{insns_size} * 2, "insns");

      auto unit_at = [&](uint64_t pc) {
        return cur.u16(insns_base + pc * 2, "instruction");
      };

      uint64_t pc = 0;
      while (pc < insns_size) {
        const uint16_t unit = unit_at(pc);
        const uint8_t op = static_cast<uint8_t>(unit & 0xff);
        uint64_t width = 0;

        if (op == 0x00 && (unit >> 8) != 0) {
          // Switch/array payload pseudo-instructions embedded in the stream.
          switch (unit >> 8) {
            case 0x01: {  // packed-switch-payload
              if (pc + 1 >= insns_size) {
                raise(ErrorKind::MalformedCodeItem, "packed-switch payload overruns code item");
              }
              width = uint64_t{unit_at(pc + 1)} * 2 + 4;
              break;
            }
            case 0x02: {  // sparse-switch-payload
              if (pc + 1 >= insns_size) {
                raise(ErrorKind::MalformedCodeItem, "sparse-switch payload overruns code item");
              }
              width = uint64_t{unit_at(pc + 1)} * 4 + 2;
              break;
            }
            case 0x03: {  // fill-array-data-payload
              if (pc + 3 >= insns_size) {
                raise(ErrorKind::MalformedCodeItem, "array payload overruns code item");
              }
              const uint64_t element_width = unit_at(pc + 1);
              const uint64_t count =
                  uint64_t{unit_at(pc + 2)} | (uint64_t{unit_at(pc + 3)} << 16);
              width = (count * element_width + 1) / 2 + 4;
              break;
            }
            default:
              diag(diagnostics, "unknown payload kind in method " +
                                    std::to_string(method.method_idx) + "; skipping rest of body");
              pc = insns_size;
              continue;
          }
        } else {
          width = widths[op];
          if (width == 0) {
            // Undefined opcode: bail out of this body rather than risk
            // emitting tokens from a misaligned stream.
            diag(diagnostics, "undefined opcode 0x" + std::to_string(op) + " in method " +
                                  std::to_string(method.method_idx) + "; skipping rest of body");
            pc = insns_size;
            continue;
          }
          if (is_method_invoke(op)) {
            if (pc + 1 >= insns_size) {
              raise(ErrorKind::MalformedCodeItem, "invoke instruction overruns code item");
            }
            const uint16_t method_idx = unit_at(pc + 1);
            if (method_idx >= dex.method_ids.size()) {
              raise(ErrorKind::IndexOutOfPool,
                    "invoke references method " + std::to_string(method_idx) + " of " +
                        std::to_string(dex.method_ids.size()));
            }
            std::string call = format_method_ref(dex.method_ref(method_idx));
            if (matches_prefix(call, prefix_filter)) {
              seq.calls.push_back(std::move(call));
            }
          } else if (op == 0xfc || op == 0xfd) {
            // invoke-custom targets a dynamic call site, not a method id;
            // there is no static API method to record.
            diag(diagnostics, "invoke-custom in method " + std::to_string(method.method_idx) +
                                  " has no static target; skipped");
          }
        }

        pc += width;
        if (pc > insns_size) {
          raise(ErrorKind::MalformedCodeItem, "instruction stream overruns its declared size");
        }
      }
    }
  }
  return seq;
}

}  // namespace mdzr::dex
