#pragma once

#include <cstdint>

#include "zul/matrix.hpp"

namespace zul {

// Thin SVD, m = U diag(s) V^T with s non-increasing and non-negative.
struct SvdResult {
  Matrix u;                // m x r
  Vector singular_values;  // r, r = min(rows, cols)
  Matrix vt;               // r x n
};

// Throws NumericalError (naming the dimensions) if the factorization does
// not converge.
SvdResult svd(const Matrix& m);

// Count of singular values above rel_tol * s[0]; 0 for a zero spectrum.
// Expects a non-increasing, non-negative sequence and rel_tol > 0.
Index numeric_rank(const Vector& singular_values, double rel_tol);

// P = I - V_r V_r^T where V_r spans the row space of m (top-r right singular
// vectors at tolerance rel_tol). P is cols(m) x cols(m), symmetric,
// idempotent, with m P ~ 0 and rank(P) = cols(m) - numeric_rank(m).
// A 0-row input yields the identity.
Matrix row_null_projector(const Matrix& m, double rel_tol);

inline constexpr std::int64_t kKroneckerEntryCap = std::int64_t{1} << 26;

// Block matrix with (i,j) block a(i,j) * b. Rejects outputs above entry_cap.
Matrix kronecker(const Matrix& a, const Matrix& b,
                 std::int64_t entry_cap = kKroneckerEntryCap);

// Column-major stacking, so vec(A X B) = (B^T kron A) vec(X).
Matrix vectorize(const Matrix& m);
Matrix unvectorize(const Matrix& v, Index rows, Index cols);

// Solves X S = RHS for symmetric S via LDLT. `ridge` is an absolute Tikhonov
// term added to the diagonal only when the plain solve fails the residual
// gate (relative residual 1e-9). Throws NumericalError with a condition
// estimate when both attempts fail.
Matrix solve_right_sym(const Matrix& rhs, const Matrix& s, double ridge);

// n_samples x 2 scores of (optionally centered) data on its top-2 right
// singular vectors. The sign of each component is fixed so its
// largest-magnitude loading is positive, making output deterministic.
Matrix pca_2d(const Matrix& data, bool center);

}  // namespace zul
