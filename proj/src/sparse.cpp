#include "flexamg/sparse.hpp"

#include "flexamg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flexamg {

namespace {

constexpr double kDropTol = 1e-300;

void check_size(std::size_t got, std::size_t want, const char *what) {
    if (got != want)
        throw DimensionError(std::string(what) + ": size " + std::to_string(got) +
                             ", expected " + std::to_string(want));
}

} // namespace

SparseMatrix::SparseMatrix(std::size_t nrows, std::size_t ncols,
                           std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx,
                           std::vector<double> values)
    : nrows_(nrows), ncols_(ncols), row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)), values_(std::move(values)) {
    if (row_ptr_.size() != nrows_ + 1 || row_ptr_.front() != 0)
        throw ValidationError("CSR: row_ptr must have nrows+1 entries starting at 0");
    if (row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size())
        throw ValidationError("CSR: row_ptr[nrows] must equal len(col_idx) == len(values)");
    for (std::size_t i = 0; i < nrows_; ++i) {
        if (row_ptr_[i] > row_ptr_[i + 1])
            throw ValidationError("CSR: row_ptr decreases at row " + std::to_string(i));
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (col_idx_[k] >= ncols_)
                throw ValidationError("CSR: column out of range in row " + std::to_string(i));
            if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
                throw ValidationError("CSR: columns not strictly increasing in row " +
                                      std::to_string(i));
        }
    }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<std::size_t> ptr(n + 1), col(n);
    for (std::size_t i = 0; i <= n; ++i) ptr[i] = i;
    for (std::size_t i = 0; i < n; ++i) col[i] = i;
    return SparseMatrix(n, n, std::move(ptr), std::move(col), Vector(n, 1.0));
}

SparseMatrix SparseMatrix::from_triplets(std::size_t nrows, std::size_t ncols,
                                         std::vector<Triplet> entries) {
    for (const auto &t : entries)
        if (t.row >= nrows || t.col >= ncols)
            throw DimensionError("triplet (" + std::to_string(t.row) + ", " +
                                 std::to_string(t.col) + ") outside matrix");
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet &a, const Triplet &b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> ptr(nrows + 1, 0), col;
    Vector val;
    col.reserve(entries.size());
    val.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size();) {
        std::size_t m = k;
        double sum = 0.0;
        while (m < entries.size() && entries[m].row == entries[k].row &&
               entries[m].col == entries[k].col)
            sum += entries[m++].value;
        if (std::abs(sum) >= kDropTol) {
            col.push_back(entries[k].col);
            val.push_back(sum);
            ++ptr[entries[k].row + 1];
        }
        k = m;
    }
    for (std::size_t i = 0; i < nrows; ++i) ptr[i + 1] += ptr[i];
    return SparseMatrix(nrows, ncols, std::move(ptr), std::move(col), std::move(val));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix &D) {
    std::vector<std::size_t> ptr(D.nrows() + 1, 0), col;
    Vector val;
    for (std::size_t i = 0; i < D.nrows(); ++i) {
        for (std::size_t j = 0; j < D.ncols(); ++j) {
            if (std::abs(D(i, j)) >= kDropTol) {
                col.push_back(j);
                val.push_back(D(i, j));
            }
        }
        ptr[i + 1] = col.size();
    }
    return SparseMatrix(D.nrows(), D.ncols(), std::move(ptr), std::move(col), std::move(val));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= nrows_ || j >= ncols_) throw DimensionError("SparseMatrix::at out of range");
    auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Vector SparseMatrix::diagonal() const {
    if (!is_square()) throw DimensionError("diagonal of a non-square matrix");
    Vector d(nrows_);
    for (std::size_t i = 0; i < nrows_; ++i) {
        bool found = false;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (col_idx_[k] == i) {
                d[i] = values_[k];
                found = true;
                break;
            }
        }
        if (!found) throw ValidationError("row " + std::to_string(i) + " has no diagonal entry");
    }
    return d;
}

bool SparseMatrix::is_symmetric(double tol) const {
    if (!is_square()) return false;
    for (std::size_t i = 0; i < nrows_; ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const double aij = values_[k];
            const double aji = at(col_idx_[k], i);
            const double scale = std::max({std::abs(aij), std::abs(aji), 1.0});
            if (std::abs(aij - aji) > tol * scale) return false;
        }
    }
    return true;
}

DenseMatrix SparseMatrix::to_dense(std::size_t cap) const {
    DenseMatrix D(nrows_, ncols_, cap);
    for (std::size_t i = 0; i < nrows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) D(i, col_idx_[k]) = values_[k];
    return D;
}

BlockPartition::BlockPartition(std::vector<std::size_t> boundaries)
    : boundaries_(std::move(boundaries)) {
    if (boundaries_.empty() || boundaries_.front() != 0)
        throw ValidationError("BlockPartition: boundaries must start at 0");
    for (std::size_t k = 1; k < boundaries_.size(); ++k)
        if (boundaries_[k] <= boundaries_[k - 1])
            throw ValidationError("BlockPartition: boundaries must be strictly increasing");
}

BlockPartition BlockPartition::uniform(std::size_t n, std::size_t blocks) {
    if (n == 0) return BlockPartition(std::vector<std::size_t>{0});
    const std::size_t p = std::clamp<std::size_t>(blocks, 1, n);
    std::vector<std::size_t> b(p + 1);
    for (std::size_t k = 0; k <= p; ++k) b[k] = k * n / p;
    return BlockPartition(std::move(b));
}

std::vector<std::size_t> BlockPartition::block_of_rows() const {
    std::vector<std::size_t> owner(num_rows());
    for (std::size_t k = 0; k < num_blocks(); ++k)
        for (std::size_t i = begin(k); i < end(k); ++i) owner[i] = k;
    return owner;
}

void spmv(const SparseMatrix &A, std::span<const double> x, std::span<double> y) {
    check_size(x.size(), A.ncols(), "spmv input");
    check_size(y.size(), A.nrows(), "spmv output");
    const auto ptr = A.row_ptr();
    const auto col = A.col_idx();
    const auto val = A.values();
    for (std::size_t i = 0; i < A.nrows(); ++i) {
        double s = 0.0;
        for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        y[i] = s;
    }
}

Vector spmv(const SparseMatrix &A, std::span<const double> x) {
    Vector y(A.nrows());
    spmv(A, x, y);
    return y;
}

void residual(const SparseMatrix &A, std::span<const double> x, std::span<const double> b,
              std::span<double> r) {
    check_size(x.size(), A.ncols(), "residual x");
    check_size(b.size(), A.nrows(), "residual b");
    check_size(r.size(), A.nrows(), "residual r");
    const auto ptr = A.row_ptr();
    const auto col = A.col_idx();
    const auto val = A.values();
    for (std::size_t i = 0; i < A.nrows(); ++i) {
        double s = b[i];
        for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) s -= val[k] * x[col[k]];
        r[i] = s;
    }
}

Vector residual(const SparseMatrix &A, std::span<const double> x, std::span<const double> b) {
    Vector r(A.nrows());
    residual(A, x, b, r);
    return r;
}

double dot(std::span<const double> x, std::span<const double> y) {
    check_size(y.size(), x.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
    check_size(y.size(), x.size(), "axpy");
    Vector out(y.begin(), y.end());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
    return out;
}

void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y) {
    check_size(y.size(), x.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

SparseMatrix transpose(const SparseMatrix &A) {
    std::vector<std::size_t> ptr(A.ncols() + 1, 0);
    for (std::size_t c : A.col_idx()) ++ptr[c + 1];
    for (std::size_t j = 0; j < A.ncols(); ++j) ptr[j + 1] += ptr[j];
    std::vector<std::size_t> col(A.nnz()), next(ptr.begin(), ptr.end() - 1);
    Vector val(A.nnz());
    // Row-major traversal keeps each transposed row sorted.
    for (std::size_t i = 0; i < A.nrows(); ++i) {
        for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k) {
            const std::size_t dst = next[A.col(k)]++;
            col[dst] = i;
            val[dst] = A.value(k);
        }
    }
    return SparseMatrix(A.ncols(), A.nrows(), std::move(ptr), std::move(col), std::move(val));
}

SparseMatrix multiply(const SparseMatrix &A, const SparseMatrix &B) {
    if (A.ncols() != B.nrows())
        throw DimensionError("multiply: inner dimensions " + std::to_string(A.ncols()) + " and " +
                             std::to_string(B.nrows()));
    std::vector<std::size_t> ptr(A.nrows() + 1, 0), col;
    Vector val;
    // Sparse accumulator: marker[j] holds the slot of column j in the current row.
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> marker(B.ncols(), kUnset);
    std::vector<std::size_t> row_cols;
    Vector acc;
    for (std::size_t i = 0; i < A.nrows(); ++i) {
        row_cols.clear();
        acc.clear();
        for (std::size_t ka = A.row_begin(i); ka < A.row_end(i); ++ka) {
            const double a = A.value(ka);
            const std::size_t r = A.col(ka);
            for (std::size_t kb = B.row_begin(r); kb < B.row_end(r); ++kb) {
                const std::size_t j = B.col(kb);
                if (marker[j] == kUnset) {
                    marker[j] = row_cols.size();
                    row_cols.push_back(j);
                    acc.push_back(a * B.value(kb));
                } else {
                    acc[marker[j]] += a * B.value(kb);
                }
            }
        }
        std::vector<std::size_t> order(row_cols.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t p, std::size_t q) { return row_cols[p] < row_cols[q]; });
        for (std::size_t k : order) {
            if (std::abs(acc[k]) >= kDropTol) {
                col.push_back(row_cols[k]);
                val.push_back(acc[k]);
            }
        }
        for (std::size_t j : row_cols) marker[j] = kUnset;
        ptr[i + 1] = col.size();
    }
    return SparseMatrix(A.nrows(), B.ncols(), std::move(ptr), std::move(col), std::move(val));
}

SparseMatrix triple_product(const SparseMatrix &R, const SparseMatrix &A, const SparseMatrix &P) {
    return multiply(multiply(R, A), P);
}

} // namespace flexamg
