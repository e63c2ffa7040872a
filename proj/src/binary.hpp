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

// Little-endian byte codecs shared by the GAPR/GAPL/GAPF/GAPS formats.

#ifndef GAP_SRC_BINARY_HPP
#define GAP_SRC_BINARY_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "gap/error.hpp"

namespace gap::detail {

class ByteWriter {
public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void reserve(std::size_t n) { bytes_.reserve(n); }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string_view what) : bytes_(bytes), what_(what) {}

    void magic(std::string_view expected) {
        need(expected.size());
        if (std::memcmp(bytes_.data() + pos_, expected.data(), expected.size()) != 0) {
            throw FormatError(FormatError::Kind::bad_magic,
                              std::string(what_) + ": bad magic, expected \"" + std::string(expected) + "\"", 0);
        }
        pos_ += expected.size();
    }

    void version(std::uint8_t expected) {
        const auto at = pos_;
        const auto v = u8();
        if (v != expected) {
            throw FormatError(FormatError::Kind::bad_version,
                              std::string(what_) + ": unsupported version " + std::to_string(v), at);
        }
    }

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    /// Throws a truncation error unless `n` more bytes are available.
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(FormatError::Kind::truncated,
                              std::string(what_) + ": truncated payload, needed " + std::to_string(n) +
                                  " more bytes but only " + std::to_string(bytes_.size() - pos_) + " remain",
                              static_cast<std::int64_t>(pos_));
        }
    }

    void expect_end() const {
        if (pos_ != bytes_.size()) {
            throw FormatError(FormatError::Kind::bad_header,
                              std::string(what_) + ": " + std::to_string(bytes_.size() - pos_) + " trailing bytes",
                              static_cast<std::int64_t>(pos_));
        }
    }

private:
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string_view what_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gap::detail

#endif  // GAP_SRC_BINARY_HPP
