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
 * Compressed-sparse-row matrices with the three kernels the graph code needs:
 * matrix-vector products, Jacobi-preconditioned conjugate gradients and a
 * Lanczos solver for the lowest eigenpairs of a symmetric matrix.
 *
 * Every reduction runs in a fixed order, so results are bitwise reproducible
 * for a given build.
 */

#ifndef GAP_SPARSE_LINALG_HPP
#define GAP_SPARSE_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "gap/error.hpp"
#include "gap/rng.hpp"

namespace gap {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct Triplet {
    Index row;
    Index col;
    Scalar value;
};

/**
 * CSR matrix. Column indices are strictly increasing within each row.
 *
 * A matrix flagged symmetric has been checked entry by entry: A(i,j) and
 * A(j,i) are bitwise equal.
 */
template <typename Scalar>
class CsrMatrix {
public:
    CsrMatrix() : row_ptr_(1, 0) {}

    CsrMatrix(Index rows, Index cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
              std::vector<Scalar> values)
        : rows_(rows),
          cols_(cols),
          row_ptr_(std::move(row_ptr)),
          col_idx_(std::move(col_idx)),
          values_(std::move(values)) {
        check_structure();
    }

    /// Duplicate coordinates are summed in input order.
    static CsrMatrix from_triplets(Index rows, Index cols, std::vector<Triplet<Scalar>> triplets) {
        if (rows < 0 || cols < 0) throw InvalidArgument("matrix dimensions must be nonnegative");
        for (const auto& t : triplets) {
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
                throw InvalidArgument("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                      ") out of bounds");
            }
        }
        std::stable_sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        std::vector<Index> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
        std::vector<Index> col_idx;
        std::vector<Scalar> values;
        col_idx.reserve(triplets.size());
        values.reserve(triplets.size());
        for (std::size_t i = 0; i < triplets.size(); ++i) {
            const auto& t = triplets[i];
            if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
                values.back() += t.value;
                continue;
            }
            col_idx.push_back(t.col);
            values.push_back(t.value);
            ++row_ptr[static_cast<std::size_t>(t.row) + 1];
        }
        for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) row_ptr[r + 1] += row_ptr[r];
        return CsrMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

    template <typename Derived>
    static CsrMatrix from_dense(const Eigen::MatrixBase<Derived>& dense) {
        std::vector<Triplet<Scalar>> t;
        for (Index r = 0; r < dense.rows(); ++r) {
            for (Index c = 0; c < dense.cols(); ++c) {
                if (dense(r, c) != Scalar(0)) t.push_back({r, c, static_cast<Scalar>(dense(r, c))});
            }
        }
        return from_triplets(dense.rows(), dense.cols(), std::move(t));
    }

    static CsrMatrix identity(Index n) {
        std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1);
        std::vector<Index> col_idx(static_cast<std::size_t>(n));
        for (Index i = 0; i <= n; ++i) row_ptr[static_cast<std::size_t>(i)] = i;
        for (Index i = 0; i < n; ++i) col_idx[static_cast<std::size_t>(i)] = i;
        CsrMatrix m(n, n, std::move(row_ptr), std::move(col_idx), std::vector<Scalar>(static_cast<std::size_t>(n), 1));
        m.symmetric_ = true;
        return m;
    }

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

    std::span<const Index> row_ptr() const noexcept { return row_ptr_; }
    std::span<const Index> col_idx() const noexcept { return col_idx_; }
    std::span<const Scalar> values() const noexcept { return values_; }

    /// Column indices and values of one row.
    std::span<const Index> row_cols(Index r) const noexcept {
        return {col_idx_.data() + row_ptr_[static_cast<std::size_t>(r)], row_len(r)};
    }
    std::span<const Scalar> row_values(Index r) const noexcept {
        return {values_.data() + row_ptr_[static_cast<std::size_t>(r)], row_len(r)};
    }

    Scalar coeff(Index r, Index c) const {
        const auto cols = row_cols(r);
        const auto it = std::lower_bound(cols.begin(), cols.end(), c);
        if (it == cols.end() || *it != c) return Scalar(0);
        return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
    }

    VectorX<Scalar> diagonal() const {
        VectorX<Scalar> d = VectorX<Scalar>::Zero(std::min(rows_, cols_));
        for (Index r = 0; r < d.size(); ++r) d(r) = coeff(r, r);
        return d;
    }

    bool symmetric() const noexcept { return symmetric_; }

    /// Checks exact symmetry and sets the flag; throws InvalidArgument if the check fails.
    CsrMatrix& mark_symmetric() {
        if (rows_ != cols_) throw InvalidArgument("non-square matrix cannot be symmetric");
        for (Index r = 0; r < rows_; ++r) {
            const auto cols = row_cols(r);
            const auto vals = row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                if (coeff(cols[k], r) != vals[k]) {
                    throw InvalidArgument("matrix entry (" + std::to_string(r) + ", " + std::to_string(cols[k]) +
                                          ") differs from its transpose");
                }
            }
        }
        symmetric_ = true;
        return *this;
    }

    CsrMatrix transpose() const {
        std::vector<Index> row_ptr(static_cast<std::size_t>(cols_) + 1, 0);
        for (Index c : col_idx_) ++row_ptr[static_cast<std::size_t>(c) + 1];
        for (std::size_t c = 0; c < static_cast<std::size_t>(cols_); ++c) row_ptr[c + 1] += row_ptr[c];
        std::vector<Index> next(row_ptr.begin(), row_ptr.end() - 1);
        std::vector<Index> col_idx(col_idx_.size());
        std::vector<Scalar> values(values_.size());
        for (Index r = 0; r < rows_; ++r) {
            const auto cols = row_cols(r);
            const auto vals = row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const auto dst = static_cast<std::size_t>(next[static_cast<std::size_t>(cols[k])]++);
                col_idx[dst] = r;
                values[dst] = vals[k];
            }
        }
        CsrMatrix t(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
        t.symmetric_ = symmetric_;
        return t;
    }

    /// Rows and columns restricted to `keep` (strictly increasing), renumbered 0..|keep|-1.
    CsrMatrix principal_submatrix(std::span<const Index> keep) const {
        if (rows_ != cols_) throw InvalidArgument("principal submatrix needs a square matrix");
        std::vector<Index> local(static_cast<std::size_t>(rows_), -1);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (keep[i] < 0 || keep[i] >= rows_ || (i > 0 && keep[i] <= keep[i - 1])) {
                throw InvalidArgument("submatrix index set must be strictly increasing and in range");
            }
            local[static_cast<std::size_t>(keep[i])] = static_cast<Index>(i);
        }
        std::vector<Index> row_ptr(keep.size() + 1, 0);
        std::vector<Index> col_idx;
        std::vector<Scalar> values;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            const auto cols = row_cols(keep[i]);
            const auto vals = row_values(keep[i]);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const Index l = local[static_cast<std::size_t>(cols[k])];
                if (l >= 0) {
                    col_idx.push_back(l);
                    values.push_back(vals[k]);
                }
            }
            row_ptr[i + 1] = static_cast<Index>(col_idx.size());
        }
        const auto n = static_cast<Index>(keep.size());
        CsrMatrix sub(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
        sub.symmetric_ = symmetric_;
        return sub;
    }

    MatrixX<Scalar> to_dense() const {
        MatrixX<Scalar> d = MatrixX<Scalar>::Zero(rows_, cols_);
        for (Index r = 0; r < rows_; ++r) {
            const auto cols = row_cols(r);
            const auto vals = row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) d(r, cols[k]) = vals[k];
        }
        return d;
    }

private:
    std::size_t row_len(Index r) const noexcept {
        return static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1] -
                                        row_ptr_[static_cast<std::size_t>(r)]);
    }

    void check_structure() const {
        if (rows_ < 0 || cols_ < 0) throw InvalidArgument("matrix dimensions must be nonnegative");
        if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 || row_ptr_.front() != 0) {
            throw InvalidArgument("row_ptr must have rows+1 entries starting at 0");
        }
        if (col_idx_.size() != values_.size() || row_ptr_.back() != static_cast<Index>(values_.size())) {
            throw InvalidArgument("row_ptr[rows] must equal nnz");
        }
        for (Index r = 0; r < rows_; ++r) {
            const auto begin = row_ptr_[static_cast<std::size_t>(r)];
            const auto end = row_ptr_[static_cast<std::size_t>(r) + 1];
            if (end < begin) throw InvalidArgument("row_ptr must be nondecreasing");
            for (Index k = begin; k < end; ++k) {
                const Index c = col_idx_[static_cast<std::size_t>(k)];
                if (c < 0 || c >= cols_) throw InvalidArgument("column index out of bounds");
                if (k > begin && c <= col_idx_[static_cast<std::size_t>(k) - 1]) {
                    throw InvalidArgument("column indices must strictly increase within row " + std::to_string(r));
                }
            }
        }
    }

    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> row_ptr_;
    std::vector<Index> col_idx_;
    std::vector<Scalar> values_;
    bool symmetric_ = false;
};

/// y = A x, each row accumulated in column-index order.
template <typename Scalar, typename Derived>
VectorX<Scalar> spmv(const CsrMatrix<Scalar>& a, const Eigen::MatrixBase<Derived>& x) {
    if (x.size() != a.cols()) {
        throw InvalidArgument("spmv dimension mismatch: matrix has " + std::to_string(a.cols()) +
                              " columns, vector has " + std::to_string(x.size()) + " entries");
    }
    const auto& xe = x.derived();
    VectorX<Scalar> y(a.rows());
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto va = a.values();
    for (Index r = 0; r < a.rows(); ++r) {
        Scalar acc(0);
        for (Index k = rp[static_cast<std::size_t>(r)]; k < rp[static_cast<std::size_t>(r) + 1]; ++k) {
            acc += va[static_cast<std::size_t>(k)] * xe(ci[static_cast<std::size_t>(k)]);
        }
        y(r) = acc;
    }
    return y;
}

struct CgOptions {
    double tol = 1e-8;
    /// 0 selects min(10 n, 10000).
    Index max_iter = 0;
    bool jacobi = true;
};

template <typename Scalar>
struct CgResult {
    VectorX<Scalar> x;
    Index iterations = 0;
    /// Final true residual norm ||A x - b||_2.
    Scalar residual = 0;
    bool converged = false;
    /// Recurrence residual norm after every iteration (entry 0 is the initial residual).
    std::vector<Scalar> residual_history;
    /// Quadratic energy 1/2 x'Ax - b'x after every iteration; nonincreasing for SPD A.
    std::vector<Scalar> energy_history;
};

/**
 * Preconditioned conjugate gradients for SPD `a`.
 *
 * Converged when ||A x - b||_2 <= tol * max(1, ||b||_2). Non-convergence is
 * reported through `converged`, not thrown. With jacobi enabled a zero or
 * negative diagonal entry throws InvalidArgument.
 */
template <typename Scalar, typename Derived>
CgResult<Scalar> cg_solve(const CsrMatrix<Scalar>& a, const Eigen::MatrixBase<Derived>& b, const CgOptions& options = {},
                          const VectorX<Scalar>* initial = nullptr) {
    const Index n = a.rows();
    if (a.cols() != n) throw InvalidArgument("cg_solve needs a square matrix");
    if (b.size() != n) throw InvalidArgument("cg_solve right-hand side has the wrong length");
    if (!(options.tol > 0)) throw InvalidArgument("cg_solve tolerance must be > 0");
    if (initial != nullptr && initial->size() != n) throw InvalidArgument("cg_solve initial guess has the wrong length");

    VectorX<Scalar> inv_diag = VectorX<Scalar>::Ones(n);
    if (options.jacobi) {
        const VectorX<Scalar> d = a.diagonal();
        for (Index i = 0; i < n; ++i) {
            if (!(d(i) > 0)) {
                throw InvalidArgument("Jacobi preconditioner needs a positive diagonal; entry " + std::to_string(i) +
                                      " is " + std::to_string(static_cast<double>(d(i))));
            }
            inv_diag(i) = Scalar(1) / d(i);
        }
    }

    const VectorX<Scalar> rhs = b;
    const Index max_iter = options.max_iter > 0 ? options.max_iter : std::min<Index>(10 * n, 10000);
    const Scalar threshold = static_cast<Scalar>(options.tol) * std::max(Scalar(1), rhs.norm());

    CgResult<Scalar> out;
    out.x = initial != nullptr ? *initial : VectorX<Scalar>::Zero(n);
    VectorX<Scalar> r = rhs - spmv(a, out.x);
    auto energy = [&](const VectorX<Scalar>& residual) { return Scalar(-0.5) * out.x.dot(rhs + residual); };
    out.residual_history.push_back(r.norm());
    out.energy_history.push_back(energy(r));

    // The recurrence residual drifts from the true one; restart from the
    // current iterate when they disagree at convergence.
    while (true) {
        VectorX<Scalar> z = inv_diag.cwiseProduct(r);
        VectorX<Scalar> p = z;
        Scalar rho = r.dot(z);
        Scalar rnorm = r.norm();
        while (rnorm > threshold && out.iterations < max_iter) {
            const VectorX<Scalar> ap = spmv(a, p);
            const Scalar pap = p.dot(ap);
            if (!(pap > 0)) break;
            const Scalar alpha = rho / pap;
            out.x.noalias() += alpha * p;
            r.noalias() -= alpha * ap;
            z = inv_diag.cwiseProduct(r);
            const Scalar rho_next = r.dot(z);
            p = z + (rho_next / rho) * p;
            rho = rho_next;
            rnorm = r.norm();
            ++out.iterations;
            out.residual_history.push_back(rnorm);
            out.energy_history.push_back(energy(r));
        }
        const VectorX<Scalar> true_r = rhs - spmv(a, out.x);
        out.residual = true_r.norm();
        out.converged = out.residual <= threshold;
        if (out.converged || out.iterations >= max_iter || rnorm > threshold) break;
        r = true_r;
    }
    return out;
}

template <typename Scalar>
struct EigenPairs {
    /// Ascending.
    VectorX<Scalar> eigenvalues;
    /// n x m, orthonormal columns.
    MatrixX<Scalar> eigenvectors;

    Index size() const noexcept { return eigenvalues.size(); }
};

/// Thrown when Lanczos exhausts its step budget; carries the best residual estimates.
class LanczosError : public ConvergenceError {
public:
    LanczosError(const std::string& what, std::vector<double> residuals)
        : ConvergenceError(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

namespace detail {

template <typename Scalar>
struct RitzResult {
    VectorX<Scalar> values;
    MatrixX<Scalar> vectors;
    std::vector<double> residuals;
    bool converged = false;
};

/**
 * Lanczos with full reorthogonalisation on the operator `apply`, targeting the
 * `want` smallest eigenvalues. Stops when the Ritz residual estimates
 * |beta_j s_{j,i}| drop below tol * max(1, |theta_i|) (confirmed with `apply`
 * when `verify` is set) or after `max_steps` steps, returning the best Ritz
 * pairs either way. `norm_bound` scales the breakdown test.
 */
template <typename Scalar, typename Apply>
RitzResult<Scalar> lanczos_core(Apply&& apply, Index n, Index want, double tol, Rng& rng, Scalar norm_bound,
                                Index max_steps, bool verify, const VectorX<Scalar>* start = nullptr) {
    auto random_vector = [&] {
        VectorX<Scalar> v(n);
        for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>(2.0 * rng.uniform() - 1.0);
        return v;
    };
    max_steps = std::min(max_steps, n);
    Index capacity = std::min(max_steps, std::max<Index>(2 * want + 32, 64));
    MatrixX<Scalar> basis(n, capacity);
    std::vector<Scalar> alpha;
    std::vector<Scalar> beta;

    auto orthogonalize = [&](VectorX<Scalar>& w, Index count) {
        for (int pass = 0; pass < 2; ++pass) {
            const VectorX<Scalar> h = basis.leftCols(count).transpose() * w;
            w.noalias() -= basis.leftCols(count) * h;
        }
    };

    VectorX<Scalar> q = start != nullptr ? *start : random_vector();
    basis.col(0) = q / q.norm();

    RitzResult<Scalar> out;
    Index steps = 0;
    Index next_check = std::min(max_steps, std::max<Index>(want + 10, 20));
    while (true) {
        VectorX<Scalar> w = apply(basis.col(steps));
        const Scalar a_j = basis.col(steps).dot(w);
        w -= a_j * basis.col(steps);
        if (steps > 0) w -= beta.back() * basis.col(steps - 1);
        orthogonalize(w, steps + 1);
        alpha.push_back(a_j);
        ++steps;
        Scalar b_j = w.norm();

        bool exhausted = steps == n;
        const bool breakdown = !exhausted && b_j <= Scalar(1e-10) * norm_bound;
        if (breakdown) {
            // Invariant subspace found; continue in its orthogonal complement.
            VectorX<Scalar> v = random_vector();
            orthogonalize(v, steps);
            if (v.norm() <= Scalar(1e-8)) {
                exhausted = true;
            } else {
                w = v / v.norm();
                b_j = 0;
            }
        }
        const bool last = exhausted || steps >= max_steps;

        if (steps >= want && (last || breakdown || steps >= next_check)) {
            Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> tri;
            VectorX<Scalar> diag = Eigen::Map<const VectorX<Scalar>>(alpha.data(), steps);
            VectorX<Scalar> sub = steps > 1 ? VectorX<Scalar>(Eigen::Map<const VectorX<Scalar>>(beta.data(), steps - 1))
                                            : VectorX<Scalar>();
            tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            const auto& theta = tri.eigenvalues();
            const auto& s = tri.eigenvectors();

            bool estimates_ok = true;
            out.residuals.assign(static_cast<std::size_t>(want), 0.0);
            for (Index i = 0; i < want; ++i) {
                const double est = std::abs(static_cast<double>(b_j * s(steps - 1, i)));
                out.residuals[static_cast<std::size_t>(i)] = est;
                if (est > tol * std::max(1.0, std::abs(static_cast<double>(theta(i))))) estimates_ok = false;
            }
            if (estimates_ok || last) {
                out.values = theta.head(want);
                out.vectors = basis.leftCols(steps) * s.leftCols(want);
                out.converged = estimates_ok;
                if (verify) {
                    for (Index i = 0; i < want; ++i) {
                        auto v = out.vectors.col(i);
                        v /= v.norm();
                        const double res = static_cast<double>((apply(v) - out.values(i) * v).norm());
                        out.residuals[static_cast<std::size_t>(i)] = res;
                        if (res > tol * std::max(1.0, std::abs(static_cast<double>(out.values(i))))) {
                            out.converged = false;
                        }
                    }
                }
                if (out.converged || last) return out;
            }
            next_check = std::min(max_steps, steps + std::max<Index>(10, steps / 4));
        }

        if (steps == capacity) {
            capacity = std::min(max_steps, 2 * capacity);
            basis.conservativeResize(Eigen::NoChange, capacity);
        }
        beta.push_back(b_j);
        basis.col(steps) = breakdown ? w : VectorX<Scalar>(w / b_j);
    }
}

/// Fixes the sign of every column so that its first entry above 1e-12 in
/// magnitude is positive.
template <typename Scalar>
void normalize_signs(MatrixX<Scalar>& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        auto v = vectors.col(c);
        v /= v.norm();
        for (Index k = 0; k < v.size(); ++k) {
            if (std::abs(v(k)) > Scalar(1e-12)) {
                if (v(k) < 0) v = -v;
                break;
            }
        }
    }
}

/// Gershgorin bounds on the spectrum of symmetric `a`.
template <typename Scalar>
std::pair<Scalar, Scalar> gershgorin_bounds(const CsrMatrix<Scalar>& a) {
    Scalar lo = std::numeric_limits<Scalar>::max();
    Scalar hi = std::numeric_limits<Scalar>::lowest();
    for (Index r = 0; r < a.rows(); ++r) {
        Scalar diag(0);
        Scalar off(0);
        const auto cols = a.row_cols(r);
        const auto vals = a.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == r) {
                diag = vals[k];
            } else {
                off += std::abs(vals[k]);
            }
        }
        lo = std::min(lo, diag - off);
        hi = std::max(hi, diag + off);
    }
    return {lo, hi};
}

}  // namespace detail

/**
 * The m smallest eigenpairs of symmetric `a` by Lanczos with full
 * reorthogonalisation.
 *
 * A pair is accepted once ||A v - lambda v||_2 <= tol * max(1, |lambda|). When
 * the Krylov space becomes invariant the iteration restarts from a fresh random
 * vector orthogonal to the basis, which recovers repeated eigenvalues.
 *
 * For large matrices with m well below n the Lanczos iteration runs on a
 * Chebyshev polynomial of A that maps the part of the spectrum above an
 * interlacing upper bound of lambda_{m'} (m' = m + max(10, m/2)) into [-1, 1]
 * and amplifies everything below it. A Rayleigh-Ritz step with A itself then
 * yields the returned pairs, which are checked against A; if that check fails
 * the unfiltered iteration is used instead.
 *
 * The sign of every eigenvector is fixed so that its first entry of
 * magnitude above 1e-12 is positive. Throws LanczosError with the best
 * residuals when the Krylov space is exhausted without meeting the tolerance.
 */
template <typename Scalar>
EigenPairs<Scalar> lanczos_lowest(const CsrMatrix<Scalar>& a, Index m, double tol = 1e-10, std::uint64_t seed = 0) {
    const Index n = a.rows();
    if (a.cols() != n) throw InvalidArgument("lanczos_lowest needs a square matrix");
    if (m < 1 || m > n) {
        throw InvalidArgument("lanczos_lowest needs 1 <= m <= n, got m = " + std::to_string(m));
    }
    if (!(tol > 0)) throw InvalidArgument("lanczos_lowest tolerance must be > 0");

    Rng rng(seed);
    const auto [lower, upper] = detail::gershgorin_bounds(a);
    const Scalar norm_bound = std::max({std::abs(lower), std::abs(upper), Scalar(1e-300)});
    auto apply_a = [&a](const auto& v) { return spmv(a, v); };

    auto finish = [&](VectorX<Scalar> values, MatrixX<Scalar> vectors) {
        EigenPairs<Scalar> out{std::move(values), std::move(vectors)};
        detail::normalize_signs(out.eigenvectors);
        return out;
    };

    const Index extended = std::min(n, m + std::max<Index>(10, m / 2));
    if (n >= 512 && 4 * extended <= n) {
        // Interlacing: the i-th smallest Ritz value bounds lambda_i from above,
        // and so does every later Rayleigh-Ritz value, which tightens the cutoff.
        const auto probe = detail::lanczos_core<Scalar>(apply_a, n, extended, tol, rng, norm_bound,
                                                        std::min(n, 2 * extended + 20), false);
        Scalar cutoff = probe.values(extended - 1);
        Scalar bottom = probe.values(0);
        VectorX<Scalar> start = probe.vectors.rowwise().sum();
        for (int round = 0; round < 8; ++round) {
            if (!(cutoff < upper && upper - cutoff > Scalar(0.5) * (upper - lower))) break;
            // y(A) maps [cutoff, upper] to [-1, 1] and the wanted end to y > 1.
            const Scalar c = Scalar(2) / (upper - cutoff);
            const Scalar e = (upper + cutoff) / (upper - cutoff);
            const Scalar y_bottom = e - c * bottom;
            const auto degree = std::clamp<Index>(
                static_cast<Index>(std::ceil(std::acosh(1e4) / std::acosh(std::max(y_bottom, Scalar(1) + Scalar(1e-6))))),
                4, 200);
            auto apply_filter = [&](const auto& v) {
                VectorX<Scalar> prev = v;
                VectorX<Scalar> cur = e * v - c * spmv(a, v);
                for (Index k = 2; k <= degree; ++k) {
                    VectorX<Scalar> next = Scalar(2) * (e * cur - c * spmv(a, cur)) - prev;
                    prev = std::move(cur);
                    cur = std::move(next);
                }
                return VectorX<Scalar>(-cur);
            };
            const auto filtered = detail::lanczos_core<Scalar>(apply_filter, n, extended, tol * 1e-2, rng, Scalar(1e4),
                                                               std::min(n, 2 * extended + 20), false, &start);
            MatrixX<Scalar> w = filtered.vectors;
            Eigen::HouseholderQR<MatrixX<Scalar>> qr(w);
            w = qr.householderQ() * MatrixX<Scalar>::Identity(n, w.cols());
            MatrixX<Scalar> aw(n, w.cols());
            for (Index i = 0; i < w.cols(); ++i) aw.col(i) = spmv(a, w.col(i));
            MatrixX<Scalar> h = w.transpose() * aw;
            h = (Scalar(0.5) * (h + h.transpose())).eval();
            Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> rr(h);
            MatrixX<Scalar> vectors = w * rr.eigenvectors();
            MatrixX<Scalar> avectors = aw * rr.eigenvectors();
            bool ok = true;
            for (Index i = 0; i < m && ok; ++i) {
                const double res = static_cast<double>((avectors.col(i) - rr.eigenvalues()(i) * vectors.col(i)).norm());
                ok = res <= tol * std::max(1.0, std::abs(static_cast<double>(rr.eigenvalues()(i))));
            }
            if (ok) return finish(rr.eigenvalues().head(m), vectors.leftCols(m));
            cutoff = std::min(cutoff, rr.eigenvalues()(extended - 1));
            bottom = std::min(bottom, rr.eigenvalues()(0));
            start = vectors.rowwise().sum();
        }
    }

    auto plain = detail::lanczos_core<Scalar>(apply_a, n, m, tol, rng, norm_bound, n, true);
    if (!plain.converged) {
        throw LanczosError("Lanczos exhausted the Krylov space without meeting the residual tolerance",
                           plain.residuals);
    }
    return finish(std::move(plain.values), std::move(plain.vectors));
}

}  // namespace gap

#endif  // GAP_SPARSE_LINALG_HPP
