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
 * Active-learning construction of the representative set (RepSet).
 *
 * For every training image: extract features, build the KNN graph, draw a
 * class-balanced initial set and then add one node at a time, chosen by the
 * acquisition function, until the accuracy on the remaining nodes changes by
 * less than epsilon or the acquisition cap is reached. The RepSet is the
 * union of the per-image selections in input order.
 */

#ifndef GAP_ACTIVE_HPP
#define GAP_ACTIVE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gap/features.hpp"
#include "gap/graph.hpp"
#include "gap/raster_io.hpp"
#include "gap/rng.hpp"
#include "gap/sparse_linalg.hpp"
#include "gap/ssl.hpp"

namespace gap {

enum class Acquisition { model_change, uncertainty, random };

std::string to_string(Acquisition a);
Acquisition parse_acquisition(const std::string& name);

struct ActiveConfig {
    /// Initial samples per class.
    Index n0 = 10;
    /// Stop when |a_t - a_{t-1}| < epsilon.
    double epsilon = 1e-3;
    /// Maximum number of acquisitions per image.
    Index k_max = 100;
    Acquisition acquisition = Acquisition::model_change;
    double gamma = 0.1;
    double tau = 0.1;
    /// Eigenpairs kept in the spectral covariance surrogate.
    Index m = 50;
    std::uint64_t seed = 0;
};

void validate(const ActiveConfig& config);

enum class Phase : std::uint8_t { init = 0, acquired = 1 };

struct RepRecord {
    std::vector<float> features;
    std::uint8_t label = 0;
    Provenance provenance;
    Phase phase = Phase::init;

    bool operator==(const RepRecord&) const = default;
};

struct RepSet {
    Index dim = 0;
    std::vector<RepRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    FeatureMatrix features() const;
    std::vector<std::uint8_t> labels() const;

    bool operator==(const RepSet&) const = default;
};

void validate(const RepSet& repset);

std::vector<std::uint8_t> encode_repset(const RepSet& repset);
RepSet decode_repset(const std::vector<std::uint8_t>& bytes);
void save_repset(const RepSet& repset, const std::filesystem::path& path);
RepSet load_repset(const std::filesystem::path& path);

/**
 * Class-balanced initial selection: for every class present, min(n0,
 * available) nodes drawn uniformly without replacement, classes in ascending
 * code order. Ignore-coded nodes are never drawn.
 */
std::vector<Index> init_repset(std::span<const std::uint8_t> labels, Index n0, Rng& rng,
                               int classes = kDefaultClassCount);

/**
 * Model-change scores of `candidates`.
 *
 * With C = V diag(1 / (lambda_j + tau^2)) V^T built from `eig`, and y_k the
 * argmax of row u_k, A(k) = ||e_{y_k} - u_k||_2 * ||C e_k||_2 / (gamma^2 + C_kk).
 */
Eigen::VectorXd acquisition_mc(const Eigen::MatrixXd& scores, const EigenPairs<double>& eig,
                               std::span<const Index> candidates, double gamma, double tau);

/// 1 - (largest - second largest) of each candidate's score row.
Eigen::VectorXd acquisition_uncertainty(const Eigen::MatrixXd& scores, std::span<const Index> candidates);

/// Independent uniform [0, 1) scores; the argmax is a uniform random choice.
Eigen::VectorXd acquisition_random(std::size_t count, Rng& rng);

/// Position of the largest score; ties resolve to the smallest node index.
std::size_t select_candidate(const Eigen::VectorXd& scores, std::span<const Index> candidates);

enum class StopReason { epsilon, k_max, exhausted, budget };

std::string to_string(StopReason r);

struct LoopStep {
    Index t = 0;
    Index node = 0;
    double score = 0.0;
    double accuracy = 0.0;
    bool converged = true;
};

struct LoopTrace {
    std::size_t initial_size = 0;
    double initial_accuracy = 0.0;
    std::vector<LoopStep> steps;
    StopReason stop = StopReason::k_max;
};

struct LoopResult {
    /// R in selection order; the first `initial_count` entries are R^0.
    std::vector<Index> selected;
    std::size_t initial_count = 0;
    LoopTrace trace;
};

/// Fraction of non-ignore nodes outside `excluded` whose prediction matches
/// `truth`; 1 when there are none.
double holdout_accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                        const std::vector<bool>& excluded);

/**
 * The active-learning loop on one fully labeled graph.
 *
 * a_0 is the accuracy after initialisation. Before each acquisition the loop
 * stops when t >= 1 and |a_t - a_{t-1}| < epsilon, or when t + 1 > k_max.
 * `eig` is required for model-change acquisition. `fixed_acquisitions`
 * replaces both rules with an exact acquisition count. Solver
 * non-convergence is recorded per step and does not abort the loop.
 */
LoopResult active_learning_loop(const SparseGraph& graph, std::span<const std::uint8_t> truth,
                                std::vector<Index> initial, const ActiveConfig& config, Rng& rng,
                                const SolverConfig& solver = {}, const EigenPairs<double>* eig = nullptr,
                                std::optional<Index> fixed_acquisitions = std::nullopt,
                                int classes = kDefaultClassCount);

struct LabeledImage {
    RasterPatch patch;
    LabelMask mask;
    std::uint32_t image_id = 0;
};

/// Per-image state reused across loop runs: features, graph and, for
/// model-change, the lowest eigenpairs of the Laplacian.
struct PreparedImage {
    FeatureMatrix features;
    SparseGraph graph;
    std::optional<EigenPairs<double>> eig;
    std::vector<std::uint8_t> truth;
};

PreparedImage prepare_image(const LabeledImage& image, const FeatureConfig& feature, const GraphConfig& graph,
                            const ActiveConfig& active);

struct ImageSelection {
    std::vector<RepRecord> records;
    LoopTrace trace;
};

/// Runs initialisation and the loop on a prepared image. `position` selects
/// the image's random stream.
ImageSelection select_representatives(const PreparedImage& image, const ActiveConfig& active, const SolverConfig& solver,
                                      std::size_t position, std::optional<Index> fixed_acquisitions = std::nullopt);

struct RepSetBuild {
    RepSet repset;
    std::vector<LoopTrace> traces;
};

/**
 * Builds the RepSet over `images` in order. `fixed_budgets`, when nonempty,
 * holds one exact acquisition count per image.
 */
RepSetBuild create_repset(std::span<const LabeledImage> images, const FeatureConfig& feature, const GraphConfig& graph,
                          const ActiveConfig& active, const SolverConfig& solver = {},
                          std::span<const Index> fixed_budgets = {});

/// Loads every entry of `split`; image ids are positions in the manifest.
std::vector<LabeledImage> load_split(const DatasetManifest& manifest, Split split);

}  // namespace gap

#endif  // GAP_ACTIVE_HPP
