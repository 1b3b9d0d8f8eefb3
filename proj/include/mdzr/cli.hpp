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

#ifndef MDZR_CLI_HPP
#define MDZR_CLI_HPP

namespace mdzr::cli {

/// Entry point behind the `mdzr` binary. Exit codes: 0 success, 1 usage
/// error, 2 input/parse failure, 3 configuration or model mismatch.
int run(int argc, char** argv);

}  // namespace mdzr::cli

#endif  // MDZR_CLI_HPP
