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

#ifndef MDZR_APK_INGEST_HPP
#define MDZR_APK_INGEST_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdzr/errors.hpp"

namespace mdzr::apk {

/// One central-directory record. `local_header_offset` points at the entry's
/// local header; the body starts after the (variable-length) local header and
/// is not touched until extraction.
struct ZipEntry {
  std::string name;
  uint16_t method = 0;  // 0 = stored, 8 = deflate
  uint32_t crc32 = 0;
  uint32_t compressed_size = 0;
  uint32_t uncompressed_size = 0;
  uint64_t local_header_offset = 0;
};

struct ApkPackage {
  std::vector<ZipEntry> entries;
  std::string source_path;
  uint64_t file_size = 0;
  /// Bytes read while opening (EOCD scan + central directory). Lets tests
  /// assert that opening never touches entry bodies.
  uint64_t bytes_read_during_open = 0;

  const ZipEntry* find(std::string_view name) const;
};

/// Parses the archive's entry table from the end-of-central-directory and
/// central directory records. No entry bodies are decompressed.
ApkPackage open_apk(const std::string& path);

/// Decompresses one entry (stored or deflate) and verifies its CRC-32.
std::vector<uint8_t> extract_entry(const ApkPackage& pkg, const ZipEntry& entry);

/// Returns the bytes of `classes.dex`. Secondary classesN.dex entries are
/// ignored with a warning.
std::vector<uint8_t> extract_dex(const ApkPackage& pkg, Diagnostics* diagnostics = nullptr);

enum class Label { Benign, Malware };

const char* to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

struct ManifestRecord {
  std::string app_path;
  Label label = Label::Benign;
  std::string family;  // empty = none; only meaningful for malware
  int year = 0;        // 0 = none

  bool has_family() const { return !family.empty(); }
  bool has_year() const { return year != 0; }
};

/// Labeled app inventory driving training and experiments.
struct CorpusManifest {
  std::vector<ManifestRecord> records;

  size_t count(Label label) const;
  /// Distinct malware family names, sorted.
  std::vector<std::string> families() const;
  /// Distinct years (records with a year), sorted.
  std::vector<int> years() const;
};

/// Manifest file: one record per line, TAB-separated
/// `app-path  label  family  year`; family/year are `-` when absent; lines
/// starting with `#` are comments.
CorpusManifest load_manifest(const std::string& path, bool require_family = false);

std::string serialize_manifest(const CorpusManifest& manifest);
void save_manifest(const CorpusManifest& manifest, const std::string& path);

}  // namespace mdzr::apk

#endif  // MDZR_APK_INGEST_HPP
