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

#include "mdzr/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "mdzr/io_util.hpp"

namespace mdzr::corpus {

namespace {

bool looks_like_zip(const std::vector<uint8_t>& bytes) {
  return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K';
}

bool looks_like_dex(const std::vector<uint8_t>& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), "dex\n", 4) == 0;
}

dex::ApiCallSequence sequence_from_text(const std::vector<uint8_t>& bytes,
                                        const std::string& path) {
  dex::ApiCallSequence seq;
  seq.source_id = path;
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    seq.calls.push_back(line);
  }
  return seq;
}

}  // namespace

dex::ApiCallSequence load_call_sequence(const std::string& path, Diagnostics* diagnostics,
                                        const std::vector<std::string>& prefix_filter) {
  std::vector<uint8_t> bytes = read_file(path);
  if (looks_like_zip(bytes)) {
    const apk::ApkPackage pkg = apk::open_apk(path);
    dex::DexFile parsed = dex::parse_dex(apk::extract_dex(pkg, diagnostics));
    dex::ApiCallSequence seq = dex::extract_call_sequence(parsed, diagnostics, prefix_filter);
    seq.source_id = path;
    return seq;
  }
  if (looks_like_dex(bytes)) {
    dex::DexFile parsed = dex::parse_dex(std::move(bytes));
    dex::ApiCallSequence seq = dex::extract_call_sequence(parsed, diagnostics, prefix_filter);
    seq.source_id = path;
    return seq;
  }
  dex::ApiCallSequence seq = sequence_from_text(bytes, path);
  if (!prefix_filter.empty()) {
    std::erase_if(seq.calls, [&](const std::string& call) {
      return std::none_of(prefix_filter.begin(), prefix_filter.end(), [&](const std::string& p) {
        return call.compare(0, p.size(), p) == 0;
      });
    });
  }
  return seq;
}

std::string resolve_app_path(const std::string& app_path, const std::string& base_dir) {
  const std::filesystem::path p(app_path);
  if (p.is_absolute() || base_dir.empty()) return app_path;
  return (std::filesystem::path(base_dir) / p).string();
}

LabeledSequences load_corpus(const apk::CorpusManifest& manifest, const std::string& base_dir,
                             uint32_t threads, bool skip_errors, Diagnostics* diagnostics,
                             const std::vector<std::string>& prefix_filter) {
  const size_t n = manifest.records.size();
  std::vector<dex::ApiCallSequence> sequences(n);
  std::vector<std::exception_ptr> errors(n);

  auto worker = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < n; i += step) {
      const std::string path = resolve_app_path(manifest.records[i].app_path, base_dir);
      try {
        sequences[i] = load_call_sequence(path, nullptr, prefix_filter);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (uint32_t t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (std::thread& t : pool) t.join();
  }

  LabeledSequences out;
  for (size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      // Apps without a DEX payload (web-view shells and the like) are
      // excluded from corpora rather than aborting a build.
      bool is_no_dex = false;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        is_no_dex = e.kind() == ErrorKind::NoDex;
        if (is_no_dex || skip_errors) {
          diag(diagnostics, manifest.records[i].app_path + ": " + e.what());
        }
      } catch (const std::exception& e) {
        if (skip_errors) diag(diagnostics, manifest.records[i].app_path + ": " + e.what());
      }
      if (!is_no_dex && !skip_errors) std::rethrow_exception(errors[i]);
      continue;
    }
    out.manifest.records.push_back(manifest.records[i]);
    out.sequences.push_back(std::move(sequences[i]));
  }
  return out;
}

LabeledSequences load_corpus(const std::string& manifest_path, uint32_t threads, bool skip_errors,
                             Diagnostics* diagnostics,
                             const std::vector<std::string>& prefix_filter) {
  const apk::CorpusManifest manifest = apk::load_manifest(manifest_path);
  const std::string base_dir = std::filesystem::path(manifest_path).parent_path().string();
  return load_corpus(manifest, base_dir, threads, skip_errors, diagnostics, prefix_filter);
}

void save_call_sequence(const dex::ApiCallSequence& seq, const std::string& path) {
  std::string text;
  size_t total = 0;
  for (const std::string& call : seq.calls) total += call.size() + 1;
  text.reserve(total);
  for (const std::string& call : seq.calls) {
    text += call;
    text += '\n';
  }
  write_file_atomic(path, text.data(), text.size());
}

}  // namespace mdzr::corpus
