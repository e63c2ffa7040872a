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

#ifndef GAP_ERROR_HPP
#define GAP_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gap {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed binary or JSON payload. `offset()` is the byte offset at which
/// decoding failed, or -1 when not applicable.
class FormatError : public Error {
public:
    enum class Kind { bad_magic, bad_version, truncated, non_finite, invalid_class, bad_header, bad_json };

    FormatError(Kind kind, const std::string& what, std::int64_t offset = -1)
        : Error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")" : what),
          kind_(kind),
          offset_(offset) {}

    Kind kind() const noexcept { return kind_; }
    std::int64_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::int64_t offset_;
};

/// Numerical routine failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace gap

#endif  // GAP_ERROR_HPP
