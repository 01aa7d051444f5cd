#pragma once

#include "flexamg/rng.hpp"
#include "flexamg/sparse.hpp"

#include <cmath>
#include <vector>

namespace testsupport {

using flexamg::SparseMatrix;
using flexamg::Triplet;
using flexamg::Vector;
using Dense = std::vector<std::vector<double>>;

inline SparseMatrix laplace1d(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0});
        if (i > 0) t.push_back({i, i - 1, -1.0});
        if (i + 1 < n) t.push_back({i, i + 1, -1.0});
    }
    return SparseMatrix::from_triplets(n, n, t);
}

// Entry-by-entry copy through at(), independent of to_dense().
inline Dense dense_of(const SparseMatrix &A) {
    Dense D(A.nrows(), std::vector<double>(A.ncols(), 0.0));
    for (std::size_t i = 0; i < A.nrows(); ++i)
        for (std::size_t j = 0; j < A.ncols(); ++j) D[i][j] = A.at(i, j);
    return D;
}

inline Dense dense_mul(const Dense &A, const Dense &B) {
    const std::size_t n = A.size(), m = B.empty() ? 0 : B[0].size(), k = B.size();
    Dense C(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < m; ++j) C[i][j] += A[i][p] * B[p][j];
    return C;
}

inline Dense dense_t(const Dense &A) {
    if (A.empty()) return {};
    Dense T(A[0].size(), std::vector<double>(A.size()));
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < A[0].size(); ++j) T[j][i] = A[i][j];
    return T;
}

inline Vector dense_apply(const Dense &A, const Vector &x) {
    Vector y(A.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += A[i][j] * x[j];
    return y;
}

inline Dense dense_identity(std::size_t n) {
    Dense I(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) I[i][i] = 1.0;
    return I;
}

// Gauss-Jordan inverse with full row scan pivoting.
inline Dense dense_inverse(Dense A) {
    const std::size_t n = A.size();
    Dense I = dense_identity(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        std::swap(A[p], A[c]);
        std::swap(I[p], I[c]);
        const double d = A[c][c];
        for (std::size_t j = 0; j < n; ++j) {
            A[c][j] /= d;
            I[c][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = A[r][c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                A[r][j] -= f * A[c][j];
                I[r][j] -= f * I[c][j];
            }
        }
    }
    return I;
}

inline double max_abs_diff(const Dense &A, const Dense &B) {
    double m = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < A[i].size(); ++j) m = std::max(m, std::abs(A[i][j] - B[i][j]));
    return m;
}

inline double max_abs_diff(const Vector &a, const Vector &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(const Dense &A) {
    double m = 0.0;
    for (const auto &row : A)
        for (double v : row) m = std::max(m, std::abs(v));
    return m;
}

inline Vector random_vec(std::size_t n, flexamg::Rng &rng) {
    Vector v(n);
    for (double &x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// Random sparse pattern, roughly `per_row` entries per row.
inline SparseMatrix random_sparse(std::size_t nr, std::size_t nc, std::size_t per_row, flexamg::Rng &rng) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t k = 0; k < per_row; ++k) t.push_back({i, rng.index(nc), rng.uniform(-1.0, 1.0)});
    return SparseMatrix::from_triplets(nr, nc, t);
}

// Symmetric, strictly diagonally dominant with negative off-diagonals (an M-matrix).
inline SparseMatrix random_spd(std::size_t n, std::size_t per_row, flexamg::Rng &rng) {
    std::vector<Triplet> t;
    std::vector<double> rowsum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < per_row; ++k) {
            const std::size_t j = rng.index(n);
            if (j == i) continue;
            const double v = -rng.uniform(0.1, 1.0);
            t.push_back({i, j, v});
            t.push_back({j, i, v});
            rowsum[i] += -v;
            rowsum[j] += -v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + rng.uniform(0.05, 0.5)});
    return SparseMatrix::from_triplets(n, n, t);
}

} // namespace testsupport
