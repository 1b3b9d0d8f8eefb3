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

#ifndef MDZR_CORPUS_HPP
#define MDZR_CORPUS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mdzr/apk_ingest.hpp"
#include "mdzr/dex_parser.hpp"

namespace mdzr::corpus {

/// A manifest together with one call sequence per record (parallel vectors).
struct LabeledSequences {
  apk::CorpusManifest manifest;
  std::vector<dex::ApiCallSequence> sequences;

  size_t size() const { return manifest.records.size(); }
};

/// Reads one app and returns its call sequence. The input kind is sniffed:
/// ZIP (`PK`) is treated as an APK, `dex\n` as a bare DEX, anything else as a
/// call-list text file (one canonical call per line). A non-empty
/// `prefix_filter` keeps only calls starting with one of the prefixes.
dex::ApiCallSequence load_call_sequence(const std::string& path,
                                        Diagnostics* diagnostics = nullptr,
                                        const std::vector<std::string>& prefix_filter = {});

/// Loads every record of a manifest. Relative app paths resolve against the
/// manifest's directory. `threads` > 1 preprocesses apps in parallel; results
/// keep manifest order. Apps without a classes.dex are always excluded with a
/// diagnostic; other per-app failures abort unless `skip_errors`, in which
/// case failed records are dropped and noted in diagnostics.
LabeledSequences load_corpus(const std::string& manifest_path, uint32_t threads = 1,
                             bool skip_errors = false, Diagnostics* diagnostics = nullptr,
                             const std::vector<std::string>& prefix_filter = {});
LabeledSequences load_corpus(const apk::CorpusManifest& manifest, const std::string& base_dir,
                             uint32_t threads = 1, bool skip_errors = false,
                             Diagnostics* diagnostics = nullptr,
                             const std::vector<std::string>& prefix_filter = {});

/// Writes a call sequence as a call-list text file.
void save_call_sequence(const dex::ApiCallSequence& seq, const std::string& path);

std::string resolve_app_path(const std::string& app_path, const std::string& base_dir);

}  // namespace mdzr::corpus

#endif  // MDZR_CORPUS_HPP
