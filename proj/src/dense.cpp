#include "flexamg/sparse.hpp"

#include "flexamg/error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace flexamg {

DenseMatrix::DenseMatrix(std::size_t nrows, std::size_t ncols, std::size_t cap)
    : nrows_(nrows), ncols_(ncols) {
    if (nrows != 0 && ncols > cap / nrows)
        throw CapacityError("dense matrix " + std::to_string(nrows) + "x" + std::to_string(ncols) +
                            " exceeds the entry cap of " + std::to_string(cap));
    data_.assign(nrows * ncols, 0.0);
}

DenseMatrix DenseMatrix::identity(std::size_t n, std::size_t cap) {
    DenseMatrix I(n, n, cap);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

Vector DenseMatrix::column(std::size_t j) const {
    Vector c(nrows_);
    for (std::size_t i = 0; i < nrows_; ++i) c[i] = (*this)(i, j);
    return c;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> v) {
    if (v.size() != nrows_) throw DimensionError("set_column: length mismatch");
    for (std::size_t i = 0; i < nrows_; ++i) (*this)(i, j) = v[i];
}

Vector DenseMatrix::apply(std::span<const double> x) const {
    if (x.size() != ncols_) throw DimensionError("dense apply: length mismatch");
    Vector y(nrows_, 0.0);
    for (std::size_t i = 0; i < nrows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < ncols_; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix &B) const {
    if (ncols_ != B.nrows_) throw DimensionError("dense multiply: inner dimension mismatch");
    DenseMatrix C(nrows_, B.ncols_, nrows_ * B.ncols_ + 1);
    for (std::size_t i = 0; i < nrows_; ++i)
        for (std::size_t k = 0; k < ncols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < B.ncols_; ++j) C(i, j) += a * B(k, j);
        }
    return C;
}

DenseMatrix DenseMatrix::operator-(const DenseMatrix &B) const {
    if (nrows_ != B.nrows_ || ncols_ != B.ncols_) throw DimensionError("dense subtract: shape mismatch");
    DenseMatrix C = *this;
    for (std::size_t k = 0; k < data_.size(); ++k) C.data_[k] -= B.data_[k];
    return C;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix T(ncols_, nrows_, nrows_ * ncols_ + 1);
    for (std::size_t i = 0; i < nrows_; ++i)
        for (std::size_t j = 0; j < ncols_; ++j) T(j, i) = (*this)(i, j);
    return T;
}

double DenseMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

LuFactors dense_lu_factor(const DenseMatrix &A) {
    if (A.nrows() != A.ncols()) throw DimensionError("dense_lu_factor: matrix is not square");
    const std::size_t n = A.nrows();
    LuFactors F{n, A, {}};
    F.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) F.perm[i] = i;
    const double tol = 1e-14 * A.max_abs();
    DenseMatrix &M = F.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M(i, k)) > std::abs(M(p, k))) p = i;
        if (!(std::abs(M(p, k)) > tol) || tol == 0.0)
            throw SingularMatrixError("dense_lu_factor: singular to tolerance at pivot row " +
                                          std::to_string(k),
                                      k);
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(M(p, j), M(k, j));
            std::swap(F.perm[p], F.perm[k]);
        }
        const double pivot = M(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = M(i, k) / pivot;
            M(i, k) = l;
            if (l == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) M(i, j) -= l * M(k, j);
        }
    }
    return F;
}

Vector dense_lu_solve(const LuFactors &F, std::span<const double> b) {
    if (b.size() != F.n) throw DimensionError("dense_lu_solve: rhs length mismatch");
    const std::size_t n = F.n;
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[F.perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= F.lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= F.lu(i, j) * x[j];
        x[i] = s / F.lu(i, i);
    }
    return x;
}

} // namespace flexamg
