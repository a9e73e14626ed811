#pragma once

// Dense kernels sized for n up to ~1000 rows and very wide designs.
// Everything here is a pure function of its inputs.

#include <cstddef>
#include <span>

#include "holp/matrix.hpp"

namespace holp {

enum class Trans : bool { No = false, Yes = true };

/// op(A) * op(B). Throws DimensionMismatch naming both shapes.
DataMatrix mat_mul(const DataMatrix& a, const DataMatrix& b, Trans ta = Trans::No,
                   Trans tb = Trans::No);

/// X * v
Vector mat_vec(const DataMatrix& x, std::span<const double> v);
/// X^T * w, streaming the rows of X once.
Vector mat_tvec(const DataMatrix& x, std::span<const double> w);

/// X * X^T (n x n), exactly symmetric. Cost O(n^2 p) with one pass over
/// X per column chunk.
DataMatrix gram_rows(const DataMatrix& x);

/// Lower Cholesky factor of a symmetric positive-definite matrix.
class SpdFactor {
public:
    std::size_t dim() const noexcept { return lower_.rows(); }
    const DataMatrix& lower() const noexcept { return lower_; }

private:
    explicit SpdFactor(DataMatrix lower) : lower_(std::move(lower)) {}
    DataMatrix lower_;
    friend SpdFactor spd_factor(const DataMatrix&);
};

/// Cholesky factorization. Throws NotPositiveDefinite with the failing
/// pivot when the matrix is (numerically) singular or indefinite.
SpdFactor spd_factor(const DataMatrix& a);

/// A^{-1} B using the factor of A.
DataMatrix spd_solve(const SpdFactor& f, const DataMatrix& b);
Vector spd_solve(const SpdFactor& f, std::span<const double> b);

/// Thin SVD, A = U diag(singular_values) V^T with singular values descending.
struct SvdResult {
    DataMatrix u;  // rows(A) x k
    Vector singular_values;  // k = min(rows, cols)
    DataMatrix v;  // cols(A) x k
};

/// One-sided Jacobi SVD. Oracle-scale only: min(rows, cols) <= 512.
SvdResult svd_small(const DataMatrix& a, std::size_t max_sweeps = 100);

/// Moore-Penrose pseudo-inverse V D^+ U^T from an SVD; singular values below
/// rcond * sigma_max are treated as zero.
DataMatrix pinv_from_svd(const SvdResult& svd, double rcond = 1e-12);

}  // namespace holp
