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

/**
 * @file
 *
 * Raster patches, label masks, dataset manifests and the synthetic river-scene
 * generator, together with their binary (GAPR/GAPL) and JSON encodings.
 */

#ifndef GAP_RASTER_IO_HPP
#define GAP_RASTER_IO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gap {

/// Class codes stored in label masks.
inline constexpr std::uint8_t kLand = 0;
inline constexpr std::uint8_t kWater = 1;
inline constexpr std::uint8_t kSediment = 2;
inline constexpr std::uint8_t kIgnore = 255;
inline constexpr int kDefaultClassCount = 3;

inline constexpr bool is_valid_code(std::uint8_t code) noexcept {
    return code == kLand || code == kWater || code == kSediment || code == kIgnore;
}

/// H x W x B image, row-major and pixel-interleaved.
struct RasterPatch {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint16_t bands = 0;
    std::vector<float> samples;

    std::size_t pixels() const noexcept { return std::size_t{height} * width; }

    float at(std::size_t row, std::size_t col, std::size_t band) const noexcept {
        return samples[(row * width + col) * bands + band];
    }
    float& at(std::size_t row, std::size_t col, std::size_t band) noexcept {
        return samples[(row * width + col) * bands + band];
    }

    bool operator==(const RasterPatch&) const = default;
};

/// Throws InvalidArgument unless dimensions are positive, the sample count
/// matches and every sample is finite.
void validate(const RasterPatch& patch);

struct LabelMask {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint8_t> labels;

    std::size_t pixels() const noexcept { return std::size_t{height} * width; }

    std::uint8_t at(std::size_t row, std::size_t col) const noexcept { return labels[row * width + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) noexcept { return labels[row * width + col]; }

    bool operator==(const LabelMask&) const = default;
};

void validate(const LabelMask& mask);

RasterPatch load_patch(const std::filesystem::path& path);
void save_patch(const RasterPatch& patch, const std::filesystem::path& path);

LabelMask load_labels(const std::filesystem::path& path);
void save_labels(const LabelMask& mask, const std::filesystem::path& path);

/// In-memory codecs behind the file functions.
std::vector<std::uint8_t> encode_patch(const RasterPatch& patch);
RasterPatch decode_patch(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_labels(const LabelMask& mask);
LabelMask decode_labels(const std::vector<std::uint8_t>& bytes);

enum class Split { train, test };

struct ManifestEntry {
    std::filesystem::path patch;
    std::filesystem::path labels;
    Split split = Split::train;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    int class_count = kDefaultClassCount;

    std::vector<ManifestEntry> select(Split split) const;
};

/// Reads the JSON manifest. Relative paths are resolved against the
/// manifest's directory. Duplicate paths are rejected.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes paths relative to the manifest directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Reads the headers of every entry and checks patch and mask dimensions agree.
void validate_manifest_files(const DatasetManifest& manifest);

struct SynthConfig {
    std::uint32_t height = 64;
    std::uint32_t width = 64;
    std::uint16_t bands = 6;
    /// One length-`bands` mean vector per class (land, water, sediment).
    std::vector<std::vector<float>> class_means;
    double noise_sigma = 0.04;
    double channel_amplitude = 8.0;
    double channel_period = 48.0;
    double channel_halfwidth = 5.0;
    double sediment_halfwidth = 4.0;
    std::uint64_t seed = 0;

    SynthConfig();
};

void validate(const SynthConfig& config);

/**
 * Generates a river scene.
 *
 * The channel centerline is y(c) = H/2 + amplitude * sin(2 pi c / period + phase),
 * with the phase drawn from the seeded generator. A pixel at vertical distance
 * |r - y(c)| <= channel_halfwidth is water, within a further
 * sediment_halfwidth it is sediment, otherwise land. Each sample is the class
 * mean plus N(0, noise_sigma^2), drawn pixel by pixel with bands innermost.
 */
std::pair<RasterPatch, LabelMask> generate_synthetic(const SynthConfig& config);

/// Per-class pixel counts for codes 0..2 plus ignore in the last slot.
std::vector<std::size_t> class_histogram(const LabelMask& mask);

}  // namespace gap

#endif  // GAP_RASTER_IO_HPP
