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

#include <fstream>
#include <functional>

#include "mdzr/apk_ingest.hpp"
#include "mdzr/io_util.hpp"
#include "mdzr/rng.hpp"
#include "support/test_util.hpp"
#include "support/zip_builder.hpp"

using namespace mdzr;
using namespace mdzr::testsupport;

namespace {

std::vector<uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

void write_bytes(const std::string& path, const std::vector<uint8_t>& data) {
  write_file_atomic(path, data.data(), data.size());
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("open_apk parses the entry table") {
  TempDir tmp;
  const std::string path = tmp.file("app.apk");
  write_zip(path, {{"AndroidManifest.xml", bytes_of("<manifest/>"), true},
                   {"classes.dex", bytes_of("not really dex"), true}});

  const apk::ApkPackage pkg = apk::open_apk(path);
  REQUIRE(pkg.entries.size() == 2);
  CHECK(pkg.find("AndroidManifest.xml") != nullptr);
  CHECK(pkg.find("classes.dex") != nullptr);
  CHECK(pkg.find("resources.arsc") == nullptr);
}

TEST_CASE("open_apk error paths") {
  TempDir tmp;
  CHECK(kind_of([&] { apk::open_apk(tmp.file("missing.apk")); }) == ErrorKind::NotFound);

  const std::string junk = tmp.file("junk.bin");
  write_bytes(junk, {0x13, 0x37, 0x00, 0x42, 0x99, 0x01, 0x02, 0x03, 0x04, 0x05});
  CHECK(kind_of([&] { apk::open_apk(junk); }) == ErrorKind::MalformedArchive);
}

TEST_CASE("open_apk rejects inconsistent entry tables") {
  TempDir tmp;
  const std::string path = tmp.file("bad.apk");
  std::vector<uint8_t> zip = build_zip({{"a.txt", bytes_of("hello"), false}});
  // Point the entry's local header offset beyond the file.
  // Central record starts after the local header (30 + 5 + 5 bytes); the
  // local offset field sits 42 bytes into the record.
  const size_t central = 30 + 5 + 5;
  zip[central + 42] = 0xff;
  zip[central + 43] = 0xff;
  write_bytes(path, zip);
  CHECK(kind_of([&] { apk::open_apk(path); }) == ErrorKind::MalformedArchive);
}

TEST_CASE("open_apk never reads entry bodies") {
  TempDir tmp;
  const std::string path = tmp.file("big.apk");
  std::vector<uint8_t> body(1 << 20);
  Rng rng(7);
  for (auto& b : body) b = static_cast<uint8_t>(rng.next_u64());
  write_zip(path, {{"assets/blob.bin", body, false}, {"classes.dex", bytes_of("x"), false}});

  const apk::ApkPackage pkg = apk::open_apk(path);
  REQUIRE(pkg.file_size > (1 << 20));
  // EOCD backward scan plus the central directory; far below the body size.
  CHECK(pkg.bytes_read_during_open < 8192);
}

TEST_CASE("extract_dex returns the decompressed payload") {
  TempDir tmp;
  std::vector<uint8_t> payload(1024);
  for (size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<uint8_t>(i * 7);

  for (const bool deflate : {true, false}) {
    const std::string path = tmp.file(deflate ? "d.apk" : "s.apk");
    write_zip(path, {{"classes.dex", payload, deflate}});
    const std::vector<uint8_t> out = apk::extract_dex(apk::open_apk(path));
    CHECK(out == payload);
  }
}

TEST_CASE("extract_dex ignores secondary dex files with a warning") {
  TempDir tmp;
  const std::string path = tmp.file("multi.apk");
  write_zip(path, {{"classes.dex", bytes_of("primary"), true},
                   {"classes2.dex", bytes_of("secondary"), true},
                   {"classes3.dex", bytes_of("tertiary"), true}});

  Diagnostics diagnostics;
  const std::vector<uint8_t> out = apk::extract_dex(apk::open_apk(path), &diagnostics);
  CHECK(out == bytes_of("primary"));
  CHECK(diagnostics.size() == 2);
}

TEST_CASE("extract_dex without classes.dex") {
  TempDir tmp;
  const std::string path = tmp.file("res.apk");
  write_zip(path, {{"resources.arsc", bytes_of("res"), true}});
  CHECK(kind_of([&] { apk::extract_dex(apk::open_apk(path)); }) == ErrorKind::NoDex);
}

TEST_CASE("extract_entry rejects corrupt streams") {
  TempDir tmp;
  const std::string path = tmp.file("corrupt.apk");
  std::vector<uint8_t> payload(512, 0xab);
  std::vector<uint8_t> zip = build_zip({{"classes.dex", payload, true}});
  // Flip bytes inside the deflate stream (after the 30+11 byte local header).
  zip[43] ^= 0xff;
  zip[44] ^= 0xff;
  write_bytes(path, zip);
  CHECK(kind_of([&] { apk::extract_dex(apk::open_apk(path)); }) == ErrorKind::DecompressFailed);
}

TEST_CASE("extract_entry rejects unsupported compression methods") {
  TempDir tmp;
  const std::string path = tmp.file("method.apk");
  std::vector<uint8_t> zip = build_zip({{"classes.dex", bytes_of("data"), false}});
  const size_t central = 30 + 11 + 4;  // local header + name + stored body
  // Method field: offset 8 in the local header, 10 in the central record.
  zip[8] = 99;
  zip[central + 10] = 99;
  write_bytes(path, zip);
  CHECK(kind_of([&] { apk::extract_dex(apk::open_apk(path)); }) == ErrorKind::DecompressFailed);
}

TEST_CASE("extract_dex is deterministic") {
  TempDir tmp;
  const std::string path = tmp.file("det.apk");
  std::vector<uint8_t> payload(4096);
  Rng rng(11);
  for (auto& b : payload) b = static_cast<uint8_t>(rng.next_u64());
  write_zip(path, {{"classes.dex", payload, true}});

  const apk::ApkPackage pkg = apk::open_apk(path);
  CHECK(apk::extract_dex(pkg) == apk::extract_dex(pkg));
}

TEST_CASE("mutated archives fail with typed errors, never crashes") {
  TempDir tmp;
  Rng rng(654321);
  std::vector<uint8_t> payload(600);
  for (auto& b : payload) b = static_cast<uint8_t>(rng.next_u64());
  const std::vector<uint8_t> zip =
      build_zip({{"classes.dex", payload, true}, {"res/x.bin", payload, false}});
  const std::string path = tmp.file("mut.apk");
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<uint8_t> bytes = zip;
    const int flips = 1 + static_cast<int>(rng.index(8));
    for (int f = 0; f < flips; ++f) {
      bytes[rng.index(bytes.size())] ^= static_cast<uint8_t>(1 + rng.index(255));
    }
    write_bytes(path, bytes);
    try {
      const apk::ApkPackage pkg = apk::open_apk(path);
      apk::extract_dex(pkg);
    } catch (const Error&) {
      // typed failure is the contract
    }
  }
}

TEST_CASE("load_manifest accepts well-formed records") {
  TempDir tmp;
  const std::string path = tmp.file("m.tsv");
  const std::string text =
      "# comment line\n"
      "apps/a.apk\tmalware\tdroidfoo\t2013\n"
      "apps/b.apk\tmalware\tdroidbar\t-\n"
      "apps/c.apk\tbenign\t-\t2014\n";
  write_file_atomic(path, text.data(), text.size());

  const apk::CorpusManifest m = apk::load_manifest(path);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[0].family == "droidfoo");
  CHECK(m.records[0].year == 2013);
  CHECK(m.records[1].year == 0);
  CHECK(m.records[2].label == apk::Label::Benign);
  CHECK(m.count(apk::Label::Malware) == 2);
  CHECK(m.families() == std::vector<std::string>{"droidbar", "droidfoo"});
  CHECK(m.years() == std::vector<int>{2013, 2014});
}

TEST_CASE("load_manifest error paths") {
  TempDir tmp;
  auto write_manifest = [&](const std::string& name, const std::string& text) {
    const std::string path = tmp.file(name);
    write_file_atomic(path, text.data(), text.size());
    return path;
  };

  const std::string bad_label = write_manifest("l.tsv", "a.apk\tmalicious\t-\t-\n");
  CHECK(kind_of([&] { apk::load_manifest(bad_label); }) == ErrorKind::SchemaError);

  const std::string dup = write_manifest("d.tsv", "a.apk\tbenign\t-\t-\na.apk\tbenign\t-\t-\n");
  CHECK(kind_of([&] { apk::load_manifest(dup); }) == ErrorKind::DuplicatePath);

  const std::string benign_family = write_manifest("f.tsv", "a.apk\tbenign\tfam\t-\n");
  CHECK(kind_of([&] { apk::load_manifest(benign_family); }) == ErrorKind::SchemaError);

  const std::string bad_year = write_manifest("y.tsv", "a.apk\tbenign\t-\t13\n");
  CHECK(kind_of([&] { apk::load_manifest(bad_year); }) == ErrorKind::SchemaError);

  const std::string no_family = write_manifest("nf.tsv", "a.apk\tmalware\t-\t-\n");
  CHECK_NOTHROW(apk::load_manifest(no_family));
  CHECK(kind_of([&] { apk::load_manifest(no_family, true); }) == ErrorKind::SchemaError);
}

TEST_CASE("manifest round-trips through serialization") {
  Rng rng(99);
  apk::CorpusManifest m;
  for (int i = 0; i < 50; ++i) {
    apk::ManifestRecord r;
    r.app_path = "apps/sample" + std::to_string(i) + ".apk";
    r.label = rng.index(2) == 0 ? apk::Label::Benign : apk::Label::Malware;
    if (r.label == apk::Label::Malware && rng.index(2) == 0) {
      r.family = "fam" + std::to_string(rng.index(5));
    }
    if (rng.index(2) == 0) r.year = 2010 + static_cast<int>(rng.index(8));
    m.records.push_back(std::move(r));
  }

  TempDir tmp;
  const std::string path = tmp.file("round.tsv");
  apk::save_manifest(m, path);
  const apk::CorpusManifest loaded = apk::load_manifest(path);
  CHECK(apk::serialize_manifest(loaded) == apk::serialize_manifest(m));
  REQUIRE(loaded.records.size() == m.records.size());
  for (size_t i = 0; i < m.records.size(); ++i) {
    CHECK(loaded.records[i].app_path == m.records[i].app_path);
    CHECK(loaded.records[i].label == m.records[i].label);
    CHECK(loaded.records[i].family == m.records[i].family);
    CHECK(loaded.records[i].year == m.records[i].year);
  }
}
