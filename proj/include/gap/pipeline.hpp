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
 * End-to-end flows: configuration, RepSet-based segmentation of unseen
 * images, split evaluation and colour rendering.
 */

#ifndef GAP_PIPELINE_HPP
#define GAP_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gap/active.hpp"
#include "gap/features.hpp"
#include "gap/graph.hpp"
#include "gap/metrics.hpp"
#include "gap/raster_io.hpp"
#include "gap/ssl.hpp"

namespace gap {

/// Settings of the `synth` command: a base scene plus image counts. Image i
/// uses seed base.seed + i; the first train_images are the train split.
struct SynthSettings {
    SynthConfig base;
    std::size_t train_images = 8;
    std::size_t test_images = 4;
};

struct PipelineConfig {
    FeatureConfig feature;
    GraphConfig graph;
    ActiveConfig active;
    SolverConfig solver;
    std::vector<double> d_list{3.0, 10.0};
    bool collapse_sediment = false;
    std::filesystem::path output_dir;
    SynthSettings synth;
};

void validate(const PipelineConfig& config);

/**
 * Parses a JSON configuration. Every field is optional; unknown keys are
 * rejected with FormatError. feature.sigma_g defaults to feature.k / 2.
 */
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

struct PredictionMap {
    LabelMask labels;
    /// Largest class score per pixel, clamped to [0, 1].
    std::vector<float> confidence;

    bool operator==(const PredictionMap&) const = default;
};

/**
 * Segments `patch` with the RepSet as the labeled set.
 *
 * The graph is built on one point cloud: RepSet rows first, then the image
 * pixels in row-major order.
 */
PredictionMap predict_image(const RepSet& repset, const RasterPatch& patch, const PipelineConfig& config,
                            std::uint32_t image_id = 0);

struct SplitEvaluation {
    std::vector<EvalReport> images;
    EvalReport aggregate;
    std::vector<PredictionMap> predictions;
};

/// Predicts and scores every image. With config.collapse_sediment both the
/// prediction and the ground truth are collapsed before scoring.
SplitEvaluation evaluate_images(std::span<const LabeledImage> images, std::span<const std::string> names,
                                const RepSet& repset, const PipelineConfig& config);

/// Test split of `manifest`, named by patch file stem.
SplitEvaluation evaluate_split(const DatasetManifest& manifest, const RepSet& repset, const PipelineConfig& config);

/// Binary PPM (P6): land purple, water blue, sediment yellow, ignore black.
std::vector<std::uint8_t> render_colormap(const LabelMask& mask);
inline std::vector<std::uint8_t> render_colormap(const PredictionMap& map) { return render_colormap(map.labels); }

/// JSON text of per-image loop traces.
std::string traces_json(std::span<const LoopTrace> traces, std::span<const LabeledImage> images);

}  // namespace gap

#endif  // GAP_PIPELINE_HPP
