/*
 *   Copyright 2026 The GAP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GAP_CLI_HPP
#define GAP_CLI_HPP

#include <string>
#include <vector>

namespace gap {

/// Runs the `gap` command line; args excludes the program name. Returns the
/// process exit code and reports errors on stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace gap

#endif  // GAP_CLI_HPP
