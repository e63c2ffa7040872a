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

#include "gap/ssl.hpp"

#include <string>

#include "gap/error.hpp"

namespace gap {

LabelAssignment LabelAssignment::from_codes(std::vector<Index> indices, std::span<const std::uint8_t> codes,
                                            int classes) {
    if (indices.size() != codes.size()) throw InvalidArgument("label indices and codes differ in length");
    if (classes < 1) throw InvalidArgument("class count must be positive");
    LabelAssignment out;
    out.classes = classes;
    out.onehot = Eigen::MatrixXd::Zero(static_cast<Index>(indices.size()), classes);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] >= classes) {
            throw InvalidArgument("class code " + std::to_string(codes[i]) + " outside [0, " + std::to_string(classes) +
                                  ")");
        }
        out.onehot(static_cast<Index>(i), codes[i]) = 1.0;
    }
    out.indices = std::move(indices);
    return out;
}

void validate(const LabelAssignment& labels, Index n) {
    if (labels.classes < 2) throw InvalidArgument("Laplace learning needs at least 2 classes");
    if (labels.onehot.rows() != static_cast<Index>(labels.indices.size()) || labels.onehot.cols() != labels.classes) {
        throw InvalidArgument("one-hot matrix shape does not match the labeled set");
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (std::size_t i = 0; i < labels.indices.size(); ++i) {
        const Index node = labels.indices[i];
        if (node < 0 || node >= n) throw InvalidArgument("labeled node " + std::to_string(node) + " out of range");
        if (seen[static_cast<std::size_t>(node)]) {
            throw InvalidArgument("labeled node " + std::to_string(node) + " appears twice");
        }
        seen[static_cast<std::size_t>(node)] = true;
        const auto row = labels.onehot.row(static_cast<Index>(i));
        if ((row.array() == 1.0).count() != 1 || (row.array() == 0.0).count() != labels.classes - 1) {
            throw InvalidArgument("label row " + std::to_string(i) + " is not one-hot");
        }
    }
}

ScoreMatrix laplace_learning(const SparseGraph& graph, const LabelAssignment& labels, const SolverConfig& config,
                             const Eigen::MatrixXd* warm_start) {
    const Index n = graph.n;
    const int classes = labels.classes;
    if (labels.indices.empty()) throw InvalidArgument("Laplace learning needs at least one labeled node");
    validate(labels, n);
    if (warm_start != nullptr && (warm_start->rows() != n || warm_start->cols() != classes)) {
        throw InvalidArgument("warm start has the wrong shape");
    }

    ScoreMatrix out;
    out.u = Eigen::MatrixXd::Constant(n, classes, 1.0 / classes);
    out.state.assign(static_cast<std::size_t>(n), NodeState::unreachable);
    std::vector<Index> labeled_row(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < labels.indices.size(); ++i) {
        const Index node = labels.indices[i];
        labeled_row[static_cast<std::size_t>(node)] = static_cast<Index>(i);
        out.state[static_cast<std::size_t>(node)] = NodeState::labeled;
        out.u.row(node) = labels.onehot.row(static_cast<Index>(i));
    }

    // Breadth-first search from the labeled set marks the solvable nodes.
    std::vector<Index> frontier(labels.indices.begin(), labels.indices.end());
    while (!frontier.empty()) {
        const Index v = frontier.back();
        frontier.pop_back();
        for (Index nb : graph.weights.row_cols(v)) {
            if (out.state[static_cast<std::size_t>(nb)] == NodeState::unreachable) {
                out.state[static_cast<std::size_t>(nb)] = NodeState::solved;
                frontier.push_back(nb);
            }
        }
    }

    std::vector<Index> unknown;
    for (Index v = 0; v < n; ++v) {
        if (out.state[static_cast<std::size_t>(v)] == NodeState::solved) unknown.push_back(v);
    }
    out.iterations.assign(static_cast<std::size_t>(classes), 0);
    out.residuals.assign(static_cast<std::size_t>(classes), 0.0);
    if (unknown.empty()) return out;

    const auto luu = graph.laplacian.principal_submatrix(unknown);
    const Index m = static_cast<Index>(unknown.size());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, classes);
    for (Index r = 0; r < m; ++r) {
        const Index v = unknown[static_cast<std::size_t>(r)];
        const auto cols = graph.weights.row_cols(v);
        const auto vals = graph.weights.row_values(v);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const Index l = labeled_row[static_cast<std::size_t>(cols[k])];
            if (l >= 0) rhs.row(r) += vals[k] * labels.onehot.row(l);
        }
    }

    const CgOptions options{config.tol, config.max_iter, config.jacobi};
    for (int c = 0; c < classes; ++c) {
        Eigen::VectorXd guess;
        if (warm_start != nullptr) {
            guess.resize(m);
            for (Index r = 0; r < m; ++r) guess(r) = (*warm_start)(unknown[static_cast<std::size_t>(r)], c);
        }
        const auto result = cg_solve(luu, rhs.col(c), options, warm_start != nullptr ? &guess : nullptr);
        out.iterations[static_cast<std::size_t>(c)] = result.iterations;
        out.residuals[static_cast<std::size_t>(c)] = result.residual;
        out.converged = out.converged && result.converged;
        for (Index r = 0; r < m; ++r) out.u(unknown[static_cast<std::size_t>(r)], c) = result.x(r);
    }
    return out;
}

std::vector<std::uint8_t> predict_labels(const Eigen::MatrixXd& scores) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(scores.rows()));
    for (Index r = 0; r < scores.rows(); ++r) {
        Index best = 0;
        for (Index c = 1; c < scores.cols(); ++c) {
            if (scores(r, c) > scores(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = static_cast<std::uint8_t>(best);
    }
    return out;
}

}  // namespace gap
