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

#ifndef MDZR_ERRORS_HPP
#define MDZR_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace mdzr {

/// Every failure the library reports, so callers can dispatch on kind
/// instead of parsing messages.
enum class ErrorKind {
  // apk_ingest
  NotFound,
  MalformedArchive,
  NoDex,
  DecompressFailed,
  SchemaError,
  DuplicatePath,
  // dex_parser
  BadMagic,
  TruncatedFile,
  IndexOutOfPool,
  MalformedCodeItem,
  // seq_pipeline
  EmptyCorpus,
  InvalidLength,
  InvalidBlockCount,
  // neuralnet
  DimensionMismatch,
  BadLabel,
  StaleTrace,
  LabelOutOfRange,
  NumericError,
  // evaluation
  InconsistentCounts,
  TooFewSamples,
  UnknownFamily,
  NotEnoughSamples,
  InsufficientYears,
  SpecInfeasible,
  // model_store / general
  IoError,
  VersionUnsupported,
  CorruptTensor,
  ConfigError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

/// Non-fatal findings (multidex warnings, skipped method bodies, per-app
/// batch failures). Callers that don't care pass nullptr.
using Diagnostics = std::vector<std::string>;

inline void diag(Diagnostics* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace mdzr

#endif  // MDZR_ERRORS_HPP
