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

#include "gap/features.hpp"

#include <cmath>
#include <string>

#include "binary.hpp"
#include "gap/error.hpp"

namespace gap {

void validate(const FeatureConfig& config) {
    if (config.k < 1) throw InvalidArgument("feature half-width k must be >= 1");
    if (!(config.sigma_g > 0.0)) throw InvalidArgument("feature sigma_g must be > 0");
}

Index reflect_index(Index i, Index n) {
    if (i >= 0 && i < n) return i;
    if (n < 2) throw InvalidArgument("reflection undefined for extent " + std::to_string(n));
    if (i <= -n || i >= 2 * n - 1) {
        throw InvalidArgument("index " + std::to_string(i) + " needs more than one reflection for extent " +
                              std::to_string(n));
    }
    return i < 0 ? -i : 2 * (n - 1) - i;
}

Eigen::MatrixXd gaussian_patch_weights(const FeatureConfig& config) {
    validate(config);
    const Index side = config.patch_side();
    const double denom = 2.0 * config.sigma_g * config.sigma_g;
    Eigen::MatrixXd w(side, side);
    for (Index r = 0; r < side; ++r) {
        for (Index c = 0; c < side; ++c) {
            const double dr = static_cast<double>(r - config.k);
            const double dc = static_cast<double>(c - config.k);
            w(r, c) = std::exp(-(dr * dr + dc * dc) / denom);
        }
    }
    return w;
}

FeatureMatrix extract_features(const RasterPatch& patch, const FeatureConfig& config, std::uint32_t image_id) {
    validate(config);
    validate(patch);
    const Index h = patch.height;
    const Index w = patch.width;
    const Index bands = patch.bands;
    if (config.k >= std::min(h, w)) {
        throw InvalidArgument("feature half-width " + std::to_string(config.k) + " must be below min(height, width) = " +
                              std::to_string(std::min(h, w)));
    }
    const Index k = config.k;
    const Index side = config.patch_side();
    const Eigen::MatrixXd weights = gaussian_patch_weights(config);

    // Reflected row/column lookup for every shifted coordinate.
    std::vector<Index> rows(static_cast<std::size_t>(h + 2 * k));
    std::vector<Index> cols(static_cast<std::size_t>(w + 2 * k));
    for (Index i = -k; i < h + k; ++i) rows[static_cast<std::size_t>(i + k)] = reflect_index(i, h);
    for (Index i = -k; i < w + k; ++i) cols[static_cast<std::size_t>(i + k)] = reflect_index(i, w);

    FeatureMatrix out;
    out.data.resize(h * w, config.dim(bands));
    out.provenance.resize(static_cast<std::size_t>(h * w));
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
            const Index node = r * w + c;
            float* dst = out.data.row(node).data();
            for (Index dr = 0; dr < side; ++dr) {
                const Index sr = rows[static_cast<std::size_t>(r + dr)];
                for (Index dc = 0; dc < side; ++dc) {
                    const Index sc = cols[static_cast<std::size_t>(c + dc)];
                    const double wt = weights(dr, dc);
                    const float* src = patch.samples.data() + (sr * w + sc) * bands;
                    for (Index b = 0; b < bands; ++b) *dst++ = static_cast<float>(wt * static_cast<double>(src[b]));
                }
            }
            out.provenance[static_cast<std::size_t>(node)] = {image_id, static_cast<std::uint32_t>(r),
                                                               static_cast<std::uint32_t>(c)};
        }
    }
    return out;
}

void save_features(const FeatureMatrix& features, const std::filesystem::path& path) {
    if (features.provenance.size() != static_cast<std::size_t>(features.rows())) {
        throw InvalidArgument("feature matrix provenance length does not match its row count");
    }
    detail::ByteWriter w;
    w.reserve(17 + 4 * static_cast<std::size_t>(features.data.size()) + 12 * features.provenance.size());
    w.magic("GAPF");
    w.u8(1);
    w.u64(static_cast<std::uint64_t>(features.rows()));
    w.u32(static_cast<std::uint32_t>(features.dim()));
    for (Index i = 0; i < features.data.size(); ++i) w.f32(features.data.data()[i]);
    for (const auto& p : features.provenance) {
        w.u32(p.image_id);
        w.u32(p.row);
        w.u32(p.col);
    }
    detail::write_file(path, w.bytes());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r(bytes, "GAPF");
    r.magic("GAPF");
    r.version(1);
    const auto n = r.u64();
    const auto dim = r.u32();
    if (dim == 0 || n > bytes.size()) {
        throw FormatError(FormatError::Kind::bad_header, "GAPF: implausible header", 5);
    }
    r.need(static_cast<std::size_t>(n) * (4 * std::size_t{dim} + 12));
    FeatureMatrix out;
    out.data.resize(static_cast<Index>(n), static_cast<Index>(dim));
    for (Index i = 0; i < out.data.size(); ++i) out.data.data()[i] = r.f32();
    out.provenance.resize(static_cast<std::size_t>(n));
    for (auto& p : out.provenance) {
        p.image_id = r.u32();
        p.row = r.u32();
        p.col = r.u32();
    }
    r.expect_end();
    return out;
}

}  // namespace gap
