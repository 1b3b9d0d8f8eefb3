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

#ifndef MDZR_TESTS_DEX_BUILDER_HPP
#define MDZR_TESTS_DEX_BUILDER_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mdzr::testsupport {

/// One instruction: raw code units, optionally patched with a resolved
/// method-id index in the second unit (the invoke formats all carry the
/// method index there).
struct Ins {
  std::vector<uint16_t> units;
  bool is_invoke = false;
  std::string ref_class;  // e.g. "Landroid/telephony/SmsManager;"
  std::string ref_name;   // e.g. "sendTextMessage"

  static Ins raw(std::initializer_list<uint16_t> u) { return Ins{std::vector<uint16_t>(u)}; }
  /// 35c-format invoke with zero arguments; opcode 0x6e..0x72.
  static Ins invoke(uint8_t opcode, std::string class_desc, std::string name);
  /// 3rc-format invoke/range with zero arguments; opcode 0x74..0x78.
  static Ins invoke_range(uint8_t opcode, std::string class_desc, std::string name);
  /// 45cc-format invoke-polymorphic (0xfa).
  static Ins invoke_polymorphic(std::string class_desc, std::string name);
  static Ins return_void() { return raw({0x000e}); }
  static Ins nop() { return raw({0x0000}); }
};

struct MethodSpec {
  std::string name;
  std::vector<Ins> body;   // empty body + has_code=false models abstract methods
  bool has_code = true;
};

struct ClassSpec {
  std::string descriptor;  // "Lcom/example/Foo;"
  std::vector<MethodSpec> methods;
};

struct BuiltDex {
  std::vector<uint8_t> bytes;
  /// The call sequence a correct extractor must produce, derived from the
  /// builder's layout rules (classes in declared order, methods in ascending
  /// method-id order within a class, instructions in stream order).
  std::vector<std::string> expected_calls;
};

/// Assembles a complete, internally consistent DEX file (version 035 by
/// default): sorted string/type/method pools, class data, 4-aligned code
/// items, map list, adler32 checksum and SHA-1 signature.
class DexBuilder {
 public:
  void add_class(ClassSpec cls) { classes_.push_back(std::move(cls)); }
  void set_version(std::string v) { version_ = std::move(v); }

  BuiltDex build() const;

 private:
  std::vector<ClassSpec> classes_;
  std::string version_ = "035";
};

/// The checked-in golden fixture (tests/fixtures/fixture.dex): two classes,
/// three method bodies, four calls in a known order.
BuiltDex reference_dex_fixture();

}  // namespace mdzr::testsupport

#endif  // MDZR_TESTS_DEX_BUILDER_HPP
