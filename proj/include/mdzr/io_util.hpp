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

#ifndef MDZR_IO_UTIL_HPP
#define MDZR_IO_UTIL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mdzr {

/// Whole-file read. NotFound if missing, IoError on read failure.
std::vector<uint8_t> read_file(const std::string& path);

/// Atomic whole-file write: temp file in the same directory, fsync, rename.
void write_file_atomic(const std::string& path, const void* data, size_t size);

/// SHA-256 of a byte buffer.
std::array<uint8_t, 32> sha256(const void* data, size_t size);

std::string hex_encode(const uint8_t* data, size_t size);

}  // namespace mdzr

#endif  // MDZR_IO_UTIL_HPP
