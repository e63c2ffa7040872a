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
 * KNN similarity graphs under angular distance.
 *
 * Rows are scaled to unit length, so Euclidean distance between them is a
 * monotone function of the angle. Each node i links to its K nearest other
 * nodes with weight exp(-alpha d_ij^2 / s_i^2), where the self-tuning scale
 * s_i is the distance to its K-th neighbour (floored at min_scale). The final
 * weight matrix is (W + W^T) / 2 and the Laplacian is L = D - W.
 */

#ifndef GAP_GRAPH_HPP
#define GAP_GRAPH_HPP

#include <vector>

#include <Eigen/Core>

#include "gap/features.hpp"
#include "gap/sparse_linalg.hpp"

namespace gap {

struct GraphConfig {
    Index k = 20;
    double alpha = 4.0;
    double min_scale = 1e-12;
};

void validate(const GraphConfig& config);

struct NormalizedFeatures {
    FeatureMatrix features;
    /// Indices of rows that were all zero and left unscaled.
    std::vector<Index> zero_rows;
};

/// Scales every row to unit Euclidean norm (norm computed in double).
NormalizedFeatures normalize_rows(const FeatureMatrix& features);

struct KnnResult {
    /// n x K, ascending distance, ties by ascending index.
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> indices;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> distances;
};

/// Euclidean distance between two feature rows, summed in double in index order.
double row_distance(const FeatureRows& data, Index i, Index j);

/**
 * Exact K nearest other rows of every row.
 *
 * Candidates are screened with a blocked float Gram product and a rigorous
 * rounding margin, then ranked by row_distance(), so the result equals that of
 * an all-pairs scan with row_distance().
 */
KnnResult knn_search(const FeatureRows& normalized, Index k);

struct SparseGraph {
    Index n = 0;
    CsrMatrix<double> weights;
    Eigen::VectorXd degrees;
    CsrMatrix<double> laplacian;
};

/// Assembles the graph from a KNN result. `knn.indices.cols()` must equal config.k.
SparseGraph build_graph_from_knn(const KnnResult& knn, const GraphConfig& config);

/// knn_search followed by build_graph_from_knn. Requires n >= K + 1.
SparseGraph build_graph(const FeatureRows& normalized, const GraphConfig& config);

/// Laplacian D - W of a symmetric weight matrix.
CsrMatrix<double> graph_laplacian(const CsrMatrix<double>& weights, Eigen::VectorXd* degrees = nullptr);

}  // namespace gap

#endif  // GAP_GRAPH_HPP
