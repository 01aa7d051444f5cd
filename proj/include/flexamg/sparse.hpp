#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace flexamg {

using Vector = std::vector<double>;

/// Default bound on rows*cols of any dense matrix (512 x 512).
inline constexpr std::size_t kDenseEntryCap = 512 * 512;

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

class DenseMatrix;

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; the constructor rejects anything else.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t nrows, std::size_t ncols,
                 std::vector<std::size_t> row_ptr,
                 std::vector<std::size_t> col_idx,
                 std::vector<double> values);

    static SparseMatrix identity(std::size_t n);
    /// Duplicates are summed; entries with |v| < 1e-300 are dropped.
    static SparseMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                      std::vector<Triplet> entries);
    static SparseMatrix from_dense(const DenseMatrix &D);

    std::size_t nrows() const noexcept { return nrows_; }
    std::size_t ncols() const noexcept { return ncols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
    std::span<const double> values() const noexcept { return values_; }

    std::size_t row_begin(std::size_t i) const noexcept { return row_ptr_[i]; }
    std::size_t row_end(std::size_t i) const noexcept { return row_ptr_[i + 1]; }
    std::size_t col(std::size_t k) const noexcept { return col_idx_[k]; }
    double value(std::size_t k) const noexcept { return values_[k]; }

    /// Entry (i, j), zero when not stored.
    double at(std::size_t i, std::size_t j) const;

    /// Diagonal entries; throws if the matrix is not square or a row lacks
    /// its diagonal.
    Vector diagonal() const;

    bool is_square() const noexcept { return nrows_ == ncols_; }
    /// |a_ij - a_ji| <= tol * max(|a_ij|, |a_ji|, 1) for all pairs.
    bool is_symmetric(double tol = 1e-12) const;

    DenseMatrix to_dense(std::size_t cap = kDenseEntryCap) const;

    friend bool operator==(const SparseMatrix &, const SparseMatrix &) = default;

private:
    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Row-major dense matrix, bounded by an entry cap.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t nrows, std::size_t ncols, std::size_t cap = kDenseEntryCap);

    static DenseMatrix identity(std::size_t n, std::size_t cap = kDenseEntryCap);

    std::size_t nrows() const noexcept { return nrows_; }
    std::size_t ncols() const noexcept { return ncols_; }

    double &operator()(std::size_t i, std::size_t j) noexcept { return data_[i * ncols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * ncols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    Vector column(std::size_t j) const;
    void set_column(std::size_t j, std::span<const double> v);

    Vector apply(std::span<const double> x) const;
    DenseMatrix operator*(const DenseMatrix &B) const;
    DenseMatrix operator-(const DenseMatrix &B) const;
    DenseMatrix transposed() const;
    double max_abs() const noexcept;

private:
    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<double> data_;
};

struct LuFactors {
    std::size_t n = 0;
    DenseMatrix lu;                 // unit-lower L below the diagonal, U on and above
    std::vector<std::size_t> perm;  // row i of PA is row perm[i] of A
};

/// Gaussian elimination with partial pivoting. Throws SingularMatrixError
/// when a pivot falls below 1e-14 * max|A|.
LuFactors dense_lu_factor(const DenseMatrix &A);
Vector dense_lu_solve(const LuFactors &F, std::span<const double> b);

/// Contiguous row blocks 0 = b_0 < b_1 < ... < b_p = n emulating a
/// per-process row distribution.
class BlockPartition {
public:
    BlockPartition() = default;
    explicit BlockPartition(std::vector<std::size_t> boundaries);

    /// min(blocks, n) blocks with boundaries floor(k*n/p).
    static BlockPartition uniform(std::size_t n, std::size_t blocks);

    std::size_t num_blocks() const noexcept { return boundaries_.empty() ? 0 : boundaries_.size() - 1; }
    std::size_t num_rows() const noexcept { return boundaries_.empty() ? 0 : boundaries_.back(); }
    std::size_t begin(std::size_t k) const noexcept { return boundaries_[k]; }
    std::size_t end(std::size_t k) const noexcept { return boundaries_[k + 1]; }
    std::span<const std::size_t> boundaries() const noexcept { return boundaries_; }
    /// Per-row block index.
    std::vector<std::size_t> block_of_rows() const;

private:
    std::vector<std::size_t> boundaries_;
};

// Vector kernels. All throw DimensionError on mismatched sizes.
Vector spmv(const SparseMatrix &A, std::span<const double> x);
void spmv(const SparseMatrix &A, std::span<const double> x, std::span<double> y);
Vector residual(const SparseMatrix &A, std::span<const double> x, std::span<const double> b);
void residual(const SparseMatrix &A, std::span<const double> x, std::span<const double> b,
              std::span<double> r);
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// Returns alpha*x + y.
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);
/// y += alpha*x in place.
void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y);

SparseMatrix transpose(const SparseMatrix &A);
SparseMatrix multiply(const SparseMatrix &A, const SparseMatrix &B);
/// Galerkin product R*A*P computed as (R*A)*P.
SparseMatrix triple_product(const SparseMatrix &R, const SparseMatrix &A, const SparseMatrix &P);

// Matrix Market coordinate format.
SparseMatrix read_matrix_market(std::istream &in);
SparseMatrix read_matrix_market(const std::string &path);
void write_matrix_market(std::ostream &out, const SparseMatrix &A);
void write_matrix_market(const std::string &path, const SparseMatrix &A);

} // namespace flexamg
