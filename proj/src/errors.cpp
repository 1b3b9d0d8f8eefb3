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

#include "mdzr/errors.hpp"

namespace mdzr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::MalformedArchive: return "MalformedArchive";
    case ErrorKind::NoDex: return "NoDex";
    case ErrorKind::DecompressFailed: return "DecompressFailed";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::DuplicatePath: return "DuplicatePath";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::IndexOutOfPool: return "IndexOutOfPool";
    case ErrorKind::MalformedCodeItem: return "MalformedCodeItem";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::InvalidLength: return "InvalidLength";
    case ErrorKind::InvalidBlockCount: return "InvalidBlockCount";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::StaleTrace: return "StaleTrace";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::NumericError: return "NumericError";
    case ErrorKind::InconsistentCounts: return "InconsistentCounts";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::UnknownFamily: return "UnknownFamily";
    case ErrorKind::NotEnoughSamples: return "NotEnoughSamples";
    case ErrorKind::InsufficientYears: return "InsufficientYears";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::CorruptTensor: return "CorruptTensor";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace mdzr
