// Shared helpers for the unit and acceptance tests.

#ifndef GAP_TEST_UTIL_HPP
#define GAP_TEST_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "gap/rng.hpp"

namespace gap::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        Rng rng(reinterpret_cast<std::uintptr_t>(this) ^ ++counter);
        path_ = std::filesystem::temp_directory_path() / ("gap_" + tag + "_" + std::to_string(rng.next() % 1000000007));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace gap::test

#endif  // GAP_TEST_UTIL_HPP
