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
 * Non-local-means pixel features: every pixel is described by its
 * Gaussian-weighted (2k+1) x (2k+1) neighbourhood across all bands, flattened
 * with offsets in row-major order and bands innermost. Borders use mirror
 * reflection without edge repetition (-1 -> 1, n -> n-2).
 */

#ifndef GAP_FEATURES_HPP
#define GAP_FEATURES_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "gap/raster_io.hpp"

namespace gap {

using Index = Eigen::Index;

/// Row-major float feature storage, one row per node.
using FeatureRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Where a feature row came from.
struct Provenance {
    std::uint32_t image_id = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    auto operator<=>(const Provenance&) const = default;
};

struct FeatureConfig {
    /// Patch half-width; the patch side is 2k+1.
    int k = 3;
    /// Gaussian weight scale in pixels. May be +inf, which makes every weight 1.
    double sigma_g = 1.5;

    /// Config with the default scale sigma_g = k/2.
    static FeatureConfig with_half_width(int k) { return {k, 0.5 * k}; }

    Index patch_side() const noexcept { return 2 * k + 1; }
    Index dim(Index bands) const noexcept { return patch_side() * patch_side() * bands; }
};

void validate(const FeatureConfig& config);

struct FeatureMatrix {
    FeatureRows data;
    std::vector<Provenance> provenance;

    Index rows() const noexcept { return data.rows(); }
    Index dim() const noexcept { return data.cols(); }

    bool operator==(const FeatureMatrix& other) const {
        return provenance == other.provenance && data.rows() == other.data.rows() &&
               data.cols() == other.data.cols() && (data.array() == other.data.array()).all();
    }
};

/// Mirror index into [0, n). Requires n >= 2 when `i` is out of range and
/// |i| < 2n; throws InvalidArgument otherwise.
Index reflect_index(Index i, Index n);

/// (2k+1) x (2k+1) grid of exp(-(dr^2 + dc^2) / (2 sigma_g^2)), indexed
/// [dr + k, dc + k]. Not normalised; the centre weight is 1.
Eigen::MatrixXd gaussian_patch_weights(const FeatureConfig& config);

/**
 * Extracts one feature row per pixel, in row-major pixel order.
 *
 * Entry (offset o, band b) of pixel (r, c) is weight(o) * sample(reflect(r + dr),
 * reflect(c + dc), b), with the product formed in double and rounded once to
 * float. Requires k < min(height, width).
 */
FeatureMatrix extract_features(const RasterPatch& patch, const FeatureConfig& config, std::uint32_t image_id = 0);

/// GAPF feature cache.
void save_features(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace gap

#endif  // GAP_FEATURES_HPP
