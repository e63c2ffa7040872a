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
 * Boundary-aware accuracy metrics.
 *
 * A pixel's boundary distance D_B is the Euclidean distance between its centre
 * and the nearest centre of a pixel carrying a different valid label. Ignore
 * pixels (code 255) are neither sources nor targets and are excluded from every
 * count. Metrics with an empty denominator are reported as std::nullopt.
 */

#ifndef GAP_METRICS_HPP
#define GAP_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gap/raster_io.hpp"

namespace gap {

using DistanceMap = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact D_B via a per-class squared Euclidean distance transform. Pixels
/// without a differing pixel (and ignore pixels) get +inf.
DistanceMap boundary_distance_map(const LabelMask& truth);

std::optional<double> boundary_accuracy(const LabelMask& pred, const LabelMask& truth, double d);
std::optional<double> overall_accuracy(const LabelMask& pred, const LabelMask& truth);

/// Relabels sediment as land.
LabelMask collapse_sediment(LabelMask mask);

struct BoundaryScore {
    double d = 0.0;
    std::int64_t correct = 0;
    std::int64_t total = 0;

    std::optional<double> value() const {
        if (total == 0) return std::nullopt;
        return static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct EvalReport {
    std::string name;
    std::int64_t correct = 0;
    /// Evaluated (non-ignore) pixels.
    std::int64_t pixels = 0;
    std::int64_t ignored = 0;
    std::vector<BoundaryScore> ba;
    /// Rows are ground truth, columns predictions.
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> confusion;

    std::optional<double> oa() const {
        if (pixels == 0) return std::nullopt;
        return static_cast<double>(correct) / static_cast<double>(pixels);
    }
};

/// Full report for one image. Throws on shape mismatch or on a prediction
/// code outside [0, classes) at an evaluated pixel.
EvalReport evaluate(const LabelMask& pred, const LabelMask& truth, std::span<const double> d_list,
                    int classes = kDefaultClassCount);

/// Pixel-pooled sum of reports that share a d list and class count.
EvalReport aggregate(std::span<const EvalReport> reports, std::string name = "aggregate");

/// {"images": [...], "aggregate": {...}}; each entry carries oa, ba keyed by
/// d, confusion, pixels and ignored. Undefined values are null.
std::string report_json(std::span<const EvalReport> images, const EvalReport& total);

/// Shortest round-trip text for a d value ("3", "10", "2.5").
std::string format_distance_key(double d);

}  // namespace gap

#endif  // GAP_METRICS_HPP
