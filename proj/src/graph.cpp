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

#include "gap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gap/error.hpp"

namespace gap {

void validate(const GraphConfig& config) {
    if (config.k < 1) throw InvalidArgument("graph neighbour count K must be >= 1");
    if (!(config.alpha > 0.0)) throw InvalidArgument("graph weight scale alpha must be > 0");
    if (!(config.min_scale > 0.0)) throw InvalidArgument("graph minimum scale must be > 0");
}

NormalizedFeatures normalize_rows(const FeatureMatrix& features) {
    NormalizedFeatures out{features, {}};
    auto& data = out.features.data;
    for (Index i = 0; i < data.rows(); ++i) {
        double sq = 0.0;
        for (Index j = 0; j < data.cols(); ++j) sq += static_cast<double>(data(i, j)) * data(i, j);
        if (sq == 0.0) {
            out.zero_rows.push_back(i);
            continue;
        }
        const double norm = std::sqrt(sq);
        for (Index j = 0; j < data.cols(); ++j) data(i, j) = static_cast<float>(data(i, j) / norm);
    }
    return out;
}

double row_distance(const FeatureRows& data, Index i, Index j) {
    double sq = 0.0;
    for (Index c = 0; c < data.cols(); ++c) {
        const double d = static_cast<double>(data(i, c)) - static_cast<double>(data(j, c));
        sq += d * d;
    }
    return std::sqrt(sq);
}

KnnResult knn_search(const FeatureRows& x, Index k) {
    const Index n = x.rows();
    if (k < 1 || k >= n) {
        throw InvalidArgument("knn_search needs 1 <= K < n, got K = " + std::to_string(k) + ", n = " + std::to_string(n));
    }
    const Index dim = x.cols();
    Eigen::VectorXd sqnorm(n);
    for (Index i = 0; i < n; ++i) sqnorm(i) = x.row(i).cast<double>().squaredNorm();
    const double max_sqnorm = sqnorm.maxCoeff();

    // |fl(x.y) - x.y| <= dim * u * |x||y| for any summation order; the margin
    // covers that twice over plus the double-side rounding.
    const double eps = std::numeric_limits<float>::epsilon();
    const double margin = 4.0 * (static_cast<double>(dim) + 2.0) * eps * max_sqnorm + 1e-12;

    KnnResult out;
    out.indices.resize(n, k);
    out.distances.resize(n, k);

    constexpr Index kBlock = 256;
    Eigen::MatrixXf gram;
    std::vector<double> approx(static_cast<std::size_t>(n));
    std::vector<double> scratch;
    std::vector<std::pair<double, Index>> ranked;
    for (Index start = 0; start < n; start += kBlock) {
        const Index rows = std::min(kBlock, n - start);
        gram.noalias() = x.middleRows(start, rows) * x.transpose();
        for (Index q = 0; q < rows; ++q) {
            const Index i = start + q;
            for (Index j = 0; j < n; ++j) {
                approx[static_cast<std::size_t>(j)] = sqnorm(i) + sqnorm(j) - 2.0 * static_cast<double>(gram(q, j));
            }
            approx[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();

            scratch = approx;
            std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
            const double cutoff = scratch[static_cast<std::size_t>(k - 1)] + margin;

            ranked.clear();
            for (Index j = 0; j < n; ++j) {
                if (j != i && approx[static_cast<std::size_t>(j)] <= cutoff) ranked.emplace_back(row_distance(x, i, j), j);
            }
            std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
            for (Index c = 0; c < k; ++c) {
                out.distances(i, c) = ranked[static_cast<std::size_t>(c)].first;
                out.indices(i, c) = ranked[static_cast<std::size_t>(c)].second;
            }
        }
    }
    return out;
}

CsrMatrix<double> graph_laplacian(const CsrMatrix<double>& w, Eigen::VectorXd* degrees) {
    const Index n = w.rows();
    Eigen::VectorXd deg(n);
    std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    col_idx.reserve(static_cast<std::size_t>(w.nnz() + n));
    values.reserve(static_cast<std::size_t>(w.nnz() + n));
    for (Index i = 0; i < n; ++i) {
        const auto cols = w.row_cols(i);
        const auto vals = w.row_values(i);
        double d = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] != i) d += vals[k];
        }
        deg(i) = d;
        bool placed = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == i) continue;
            if (!placed && cols[k] > i) {
                col_idx.push_back(i);
                values.push_back(d);
                placed = true;
            }
            col_idx.push_back(cols[k]);
            values.push_back(-vals[k]);
        }
        if (!placed) {
            col_idx.push_back(i);
            values.push_back(d);
        }
        row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<Index>(col_idx.size());
    }
    if (degrees != nullptr) *degrees = deg;
    CsrMatrix<double> lap(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
    if (w.symmetric()) lap.mark_symmetric();
    return lap;
}

SparseGraph build_graph_from_knn(const KnnResult& knn, const GraphConfig& config) {
    validate(config);
    const Index n = knn.indices.rows();
    const Index k = knn.indices.cols();
    if (k != config.k) throw InvalidArgument("KNN result width does not match graph K");

    // Directed weights, one sorted row per node.
    std::vector<Triplet<double>> directed;
    directed.reserve(static_cast<std::size_t>(n * k));
    for (Index i = 0; i < n; ++i) {
        const double scale = std::max(knn.distances(i, k - 1), config.min_scale);
        const double s2 = scale * scale;
        for (Index c = 0; c < k; ++c) {
            const double d = knn.distances(i, c);
            directed.push_back({i, knn.indices(i, c), std::exp(-config.alpha * d * d / s2)});
        }
    }
    const auto wdir = CsrMatrix<double>::from_triplets(n, n, std::move(directed));
    const auto wdir_t = wdir.transpose();

    // (W + W^T) / 2 by merging row i of W with row i of W^T; a + b == b + a
    // exactly, so the result is bitwise symmetric.
    std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    for (Index i = 0; i < n; ++i) {
        const auto ac = wdir.row_cols(i);
        const auto av = wdir.row_values(i);
        const auto bc = wdir_t.row_cols(i);
        const auto bv = wdir_t.row_values(i);
        std::size_t p = 0;
        std::size_t q = 0;
        while (p < ac.size() || q < bc.size()) {
            const Index ca = p < ac.size() ? ac[p] : n;
            const Index cb = q < bc.size() ? bc[q] : n;
            const Index c = std::min(ca, cb);
            const double a = ca == c ? av[p++] : 0.0;
            const double b = cb == c ? bv[q++] : 0.0;
            if (c == i) continue;
            col_idx.push_back(c);
            values.push_back(0.5 * (a + b));
        }
        row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<Index>(col_idx.size());
    }

    SparseGraph g;
    g.n = n;
    g.weights = CsrMatrix<double>(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
    g.weights.mark_symmetric();
    g.laplacian = graph_laplacian(g.weights, &g.degrees);
    return g;
}

SparseGraph build_graph(const FeatureRows& normalized, const GraphConfig& config) {
    validate(config);
    if (normalized.rows() < config.k + 1) {
        throw InvalidArgument("graph needs at least K + 1 = " + std::to_string(config.k + 1) + " nodes, got " +
                              std::to_string(normalized.rows()));
    }
    return build_graph_from_knn(knn_search(normalized, config.k), config);
}

}  // namespace gap
