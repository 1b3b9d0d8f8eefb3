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

#include "mdzr/apk_ingest.hpp"

#include "mdzr/io_util.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace mdzr::apk {

namespace {

constexpr uint32_t kEocdSignature = 0x06054b50;
constexpr uint32_t kCentralHeaderSignature = 0x02014b50;
constexpr uint32_t kLocalHeaderSignature = 0x04034b50;
constexpr size_t kEocdFixedSize = 22;
constexpr size_t kLocalHeaderFixedSize = 30;
constexpr size_t kMaxCommentSize = 65535;

constexpr uint16_t kMethodStored = 0;
constexpr uint16_t kMethodDeflate = 8;

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

/// Seekable reader that counts every byte fetched from disk.
class CountingReader {
 public:
  explicit CountingReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) raise(ErrorKind::IoError, "cannot open " + path);
    in_.seekg(0, std::ios::end);
    size_ = static_cast<uint64_t>(in_.tellg());
  }

  uint64_t size() const { return size_; }
  uint64_t bytes_read() const { return bytes_read_; }

  std::vector<uint8_t> read_at(uint64_t offset, size_t length) {
    if (offset + length > size_) {
      raise(ErrorKind::MalformedArchive, path_ + ": read beyond end of file");
    }
    std::vector<uint8_t> buf(length);
    in_.seekg(static_cast<std::streamoff>(offset));
    in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(length));
    if (!in_) raise(ErrorKind::IoError, "short read on " + path_);
    bytes_read_ += length;
    return buf;
  }

 private:
  std::string path_;
  std::ifstream in_;
  uint64_t size_ = 0;
  uint64_t bytes_read_ = 0;
};

/// Locates the EOCD record scanning backwards in growing windows, so the cost
/// on comment-free archives stays a few hundred bytes.
struct Eocd {
  uint64_t position;
  uint16_t total_entries;
  uint32_t cd_size;
  uint32_t cd_offset;
};

Eocd find_eocd(CountingReader& reader, const std::string& path) {
  const uint64_t file_size = reader.size();
  const uint64_t max_scan = std::min<uint64_t>(file_size, kEocdFixedSize + kMaxCommentSize);
  uint64_t window = std::min<uint64_t>(max_scan, 1024);
  while (true) {
    const uint64_t start = file_size - window;
    std::vector<uint8_t> tail = reader.read_at(start, static_cast<size_t>(window));
    if (tail.size() >= kEocdFixedSize) {
      for (size_t i = tail.size() - kEocdFixedSize + 1; i-- > 0;) {
        if (read_u32(tail.data() + i) != kEocdSignature) continue;
        const uint8_t* rec = tail.data() + i;
        Eocd eocd;
        eocd.position = start + i;
        eocd.total_entries = read_u16(rec + 10);
        eocd.cd_size = read_u32(rec + 12);
        eocd.cd_offset = read_u32(rec + 16);
        const uint16_t disk = read_u16(rec + 4);
        const uint16_t cd_disk = read_u16(rec + 6);
        const uint16_t disk_entries = read_u16(rec + 8);
        if (disk != 0 || cd_disk != 0 || disk_entries != eocd.total_entries) {
          raise(ErrorKind::MalformedArchive, path + ": multi-disk archives unsupported");
        }
        return eocd;
      }
    }
    if (window >= max_scan) break;
    window = std::min<uint64_t>(max_scan, window * 4);
  }
  raise(ErrorKind::MalformedArchive, path + ": no end-of-central-directory signature");
}

std::vector<uint8_t> inflate_raw(const uint8_t* data, size_t compressed_size,
                                 size_t expected_size, const std::string& context) {
  std::vector<uint8_t> out(expected_size);
  z_stream strm{};
  // negative windowBits: raw deflate, no zlib wrapper, per the ZIP format
  if (inflateInit2(&strm, -MAX_WBITS) != Z_OK) {
    raise(ErrorKind::DecompressFailed, context + ": inflateInit failed");
  }
  strm.next_in = const_cast<Bytef*>(data);
  strm.avail_in = static_cast<uInt>(compressed_size);
  strm.next_out = out.data();
  strm.avail_out = static_cast<uInt>(expected_size);
  const int rc = inflate(&strm, Z_FINISH);
  const auto produced = static_cast<size_t>(strm.total_out);
  inflateEnd(&strm);
  if (rc != Z_STREAM_END || produced != expected_size) {
    raise(ErrorKind::DecompressFailed, context + ": corrupt deflate stream");
  }
  return out;
}

}  // namespace

const ZipEntry* ApkPackage::find(std::string_view name) const {
  for (const ZipEntry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

ApkPackage open_apk(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || ec) {
    raise(ErrorKind::NotFound, "no such file: " + path);
  }
  CountingReader reader(path);
  if (reader.size() < kEocdFixedSize) {
    raise(ErrorKind::MalformedArchive, path + ": too small to hold an archive");
  }
  const Eocd eocd = find_eocd(reader, path);
  if (static_cast<uint64_t>(eocd.cd_offset) + eocd.cd_size > eocd.position) {
    raise(ErrorKind::MalformedArchive, path + ": central directory out of range");
  }

  ApkPackage pkg;
  pkg.source_path = path;
  pkg.file_size = reader.size();

  const std::vector<uint8_t> cd = reader.read_at(eocd.cd_offset, eocd.cd_size);
  size_t pos = 0;
  std::unordered_set<std::string> seen;
  for (uint16_t i = 0; i < eocd.total_entries; ++i) {
    if (pos + 46 > cd.size() || read_u32(cd.data() + pos) != kCentralHeaderSignature) {
      raise(ErrorKind::MalformedArchive, path + ": bad central directory record");
    }
    const uint8_t* rec = cd.data() + pos;
    ZipEntry entry;
    entry.method = read_u16(rec + 10);
    entry.crc32 = read_u32(rec + 16);
    entry.compressed_size = read_u32(rec + 20);
    entry.uncompressed_size = read_u32(rec + 24);
    const uint16_t name_len = read_u16(rec + 28);
    const uint16_t extra_len = read_u16(rec + 30);
    const uint16_t comment_len = read_u16(rec + 32);
    entry.local_header_offset = read_u32(rec + 42);
    if (pos + 46 + name_len + extra_len + comment_len > cd.size()) {
      raise(ErrorKind::MalformedArchive, path + ": central record overruns directory");
    }
    entry.name.assign(reinterpret_cast<const char*>(rec + 46), name_len);
    if (!seen.insert(entry.name).second) {
      raise(ErrorKind::MalformedArchive, path + ": duplicate entry name " + entry.name);
    }
    if (entry.local_header_offset + entry.compressed_size > pkg.file_size) {
      raise(ErrorKind::MalformedArchive, path + ": entry " + entry.name + " exceeds file length");
    }
    pkg.entries.push_back(std::move(entry));
    pos += 46u + name_len + extra_len + comment_len;
  }
  pkg.bytes_read_during_open = reader.bytes_read();
  return pkg;
}

std::vector<uint8_t> extract_entry(const ApkPackage& pkg, const ZipEntry& entry) {
  CountingReader reader(pkg.source_path);
  const std::string context = pkg.source_path + ": " + entry.name;

  const std::vector<uint8_t> header =
      reader.read_at(entry.local_header_offset, kLocalHeaderFixedSize);
  if (read_u32(header.data()) != kLocalHeaderSignature) {
    raise(ErrorKind::MalformedArchive, context + ": bad local header signature");
  }
  // Sizes in the local header may be deferred to a data descriptor; the
  // central directory values are authoritative.
  const uint16_t name_len = read_u16(header.data() + 26);
  const uint16_t extra_len = read_u16(header.data() + 28);
  const uint64_t data_offset = entry.local_header_offset + kLocalHeaderFixedSize + name_len + extra_len;
  if (data_offset + entry.compressed_size > pkg.file_size) {
    raise(ErrorKind::MalformedArchive, context + ": entry body exceeds file length");
  }
  const std::vector<uint8_t> raw = reader.read_at(data_offset, entry.compressed_size);

  std::vector<uint8_t> out;
  switch (entry.method) {
    case kMethodStored:
      if (entry.compressed_size != entry.uncompressed_size) {
        raise(ErrorKind::DecompressFailed, context + ": stored entry with mismatched sizes");
      }
      out = raw;
      break;
    case kMethodDeflate:
      out = inflate_raw(raw.data(), raw.size(), entry.uncompressed_size, context);
      break;
    default:
      raise(ErrorKind::DecompressFailed,
            context + ": unsupported compression method " + std::to_string(entry.method));
  }
  const auto actual_crc = static_cast<uint32_t>(
      ::crc32(0L, out.empty() ? Z_NULL : out.data(), static_cast<uInt>(out.size())));
  if (actual_crc != entry.crc32) {
    raise(ErrorKind::DecompressFailed, context + ": CRC mismatch");
  }
  return out;
}

std::vector<uint8_t> extract_dex(const ApkPackage& pkg, Diagnostics* diagnostics) {
  const ZipEntry* primary = pkg.find("classes.dex");
  if (primary == nullptr) {
    raise(ErrorKind::NoDex, pkg.source_path + ": no classes.dex entry");
  }
  // Multidex: secondary DEX files are skipped, matching the single-DEX pipeline.
  for (const ZipEntry& e : pkg.entries) {
    if (e.name.size() >= 12 && e.name.compare(0, 7, "classes") == 0 &&
        e.name.compare(e.name.size() - 4, 4, ".dex") == 0) {
      const std::string num = e.name.substr(7, e.name.size() - 11);
      if (!num.empty() && num[0] != '0' &&
          std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        diag(diagnostics, pkg.source_path + ": ignoring secondary DEX entry " + e.name);
      }
    }
  }
  return extract_entry(pkg, *primary);
}

const char* to_string(Label label) noexcept {
  return label == Label::Benign ? "benign" : "malware";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "benign") return Label::Benign;
  if (text == "malware") return Label::Malware;
  return std::nullopt;
}

size_t CorpusManifest::count(Label label) const {
  return static_cast<size_t>(std::count_if(records.begin(), records.end(),
                                           [&](const ManifestRecord& r) { return r.label == label; }));
}

std::vector<std::string> CorpusManifest::families() const {
  std::set<std::string> out;
  for (const ManifestRecord& r : records) {
    if (r.label == Label::Malware && r.has_family()) out.insert(r.family);
  }
  return {out.begin(), out.end()};
}

std::vector<int> CorpusManifest::years() const {
  std::set<int> out;
  for (const ManifestRecord& r : records) {
    if (r.has_year()) out.insert(r.year);
  }
  return {out.begin(), out.end()};
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

[[noreturn]] void schema_error(const std::string& path, size_t line_no, const std::string& what) {
  raise(ErrorKind::SchemaError, path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

CorpusManifest load_manifest(const std::string& path, bool require_family) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || ec) {
    raise(ErrorKind::NotFound, "no such file: " + path);
  }
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path);

  CorpusManifest manifest;
  std::unordered_set<std::string> seen_paths;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      schema_error(path, line_no,
                   "expected 4 TAB-separated fields, got " + std::to_string(fields.size()));
    }
    ManifestRecord rec;
    rec.app_path = std::string(fields[0]);
    if (rec.app_path.empty()) schema_error(path, line_no, "empty app-path");

    const auto label = parse_label(fields[1]);
    if (!label) schema_error(path, line_no, "bad label '" + std::string(fields[1]) + "'");
    rec.label = *label;

    if (fields[2] != "-") {
      if (rec.label == Label::Benign) {
        schema_error(path, line_no, "benign record must not carry a family");
      }
      rec.family = std::string(fields[2]);
    } else if (require_family && rec.label == Label::Malware) {
      schema_error(path, line_no, "malware record lacks a family");
    }

    if (fields[3] != "-") {
      if (fields[3].size() != 4 ||
          !std::all_of(fields[3].begin(), fields[3].end(),
                       [](char c) { return c >= '0' && c <= '9'; })) {
        schema_error(path, line_no, "year must be '-' or a 4-digit integer");
      }
      std::from_chars(fields[3].data(), fields[3].data() + 4, rec.year);
    }

    if (!seen_paths.insert(rec.app_path).second) {
      raise(ErrorKind::DuplicatePath,
            path + ":" + std::to_string(line_no) + ": duplicate app-path " + rec.app_path);
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

std::string serialize_manifest(const CorpusManifest& manifest) {
  std::ostringstream out;
  for (const ManifestRecord& r : manifest.records) {
    out << r.app_path << '\t' << to_string(r.label) << '\t'
        << (r.has_family() ? r.family : "-") << '\t';
    if (r.has_year()) {
      out << r.year;
    } else {
      out << '-';
    }
    out << '\n';
  }
  return out.str();
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
  const std::string text = serialize_manifest(manifest);
  write_file_atomic(path, text.data(), text.size());
}

}  // namespace mdzr::apk
