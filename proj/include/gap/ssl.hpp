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
 * Graph Laplace learning: harmonic extension of one-hot labels.
 */

#ifndef GAP_SSL_HPP
#define GAP_SSL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gap/graph.hpp"

namespace gap {

struct LabelAssignment {
    std::vector<Index> indices;
    /// |indices| x C one-hot rows.
    Eigen::MatrixXd onehot;
    int classes = 0;

    /// Builds the one-hot matrix from class codes in [0, classes).
    static LabelAssignment from_codes(std::vector<Index> indices, std::span<const std::uint8_t> codes, int classes);
};

void validate(const LabelAssignment& labels, Index n);

enum class NodeState : std::uint8_t { labeled, solved, unreachable };

struct SolverConfig {
    double tol = 1e-10;
    /// 0 selects the CG default.
    Index max_iter = 0;
    bool jacobi = true;
};

struct ScoreMatrix {
    /// n x C class scores.
    Eigen::MatrixXd u;
    std::vector<NodeState> state;
    bool converged = true;
    /// Per-class CG iteration counts and final residual norms.
    std::vector<Index> iterations;
    std::vector<double> residuals;
};

/**
 * Solves L_uu U_u = W_ul Y, one CG solve per class column.
 *
 * Labeled rows are copied from Y. Unlabeled nodes with no path to a labeled
 * node are flagged unreachable and receive the uniform row 1/C. `warm_start`,
 * when given, is an n x C matrix whose unlabeled rows seed the CG iterations.
 * Throws InvalidArgument when no node is labeled; CG non-convergence is
 * reported through `converged`.
 */
ScoreMatrix laplace_learning(const SparseGraph& graph, const LabelAssignment& labels, const SolverConfig& config = {},
                             const Eigen::MatrixXd* warm_start = nullptr);

/// Row-wise argmax; ties go to the lowest class code.
std::vector<std::uint8_t> predict_labels(const Eigen::MatrixXd& scores);
inline std::vector<std::uint8_t> predict_labels(const ScoreMatrix& scores) { return predict_labels(scores.u); }

}  // namespace gap

#endif  // GAP_SSL_HPP
