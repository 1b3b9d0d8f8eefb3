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

#ifndef MDZR_MODEL_STORE_HPP
#define MDZR_MODEL_STORE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mdzr/neuralnet.hpp"

namespace mdzr::store {

/// Everything needed to run a trained model: parameters (with hyperparams),
/// the digest of the dictionary it was trained with, and family names for
/// attribution models (empty for detection).
struct ModelArtifact {
  nn::ModelParams params;
  std::array<uint8_t, 32> dict_digest{};
  std::vector<std::string> class_names;
};

/// Binary layout (all little-endian):
///   magic `MDZ1` | u32 format version | hyperparam block (fixed-order
///   u32/f64 fields) | dictionary digest (32 bytes) | family-name table |
///   tensors in fixed order, each prefixed by a u64 element count of f64s.
/// Writing is canonical and atomic (temp file + fsync + rename), so repeated
/// saves of the same model are byte-identical.
void save_model(const nn::ModelParams& params, const std::array<uint8_t, 32>& dict_digest,
                const std::vector<std::string>& class_names, const std::string& path);

/// Validates magic, version, and declared-vs-actual tensor sizes before
/// returning.
ModelArtifact load_model(const std::string& path);

std::vector<uint8_t> serialize_model(const nn::ModelParams& params,
                                     const std::array<uint8_t, 32>& dict_digest,
                                     const std::vector<std::string>& class_names);
ModelArtifact deserialize_model(const std::vector<uint8_t>& bytes, const std::string& context);

}  // namespace mdzr::store

#endif  // MDZR_MODEL_STORE_HPP
