#include "zul/matrix_kernel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <sstream>

#include "zul/errors.hpp"

namespace zul {

SvdResult svd(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0)
    return {Matrix(m.rows(), 0), Vector(0), Matrix(0, m.cols())};
  require_finite(m, "svd input");

  // JacobiSVD over BDCSVD: slower asymptotically but immune to the
  // clustered-singular-value deflation trouble BDCSVD shows on projector-like
  // inputs, and every matrix this library factors is desk-sized.
  Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "SVD did not converge on a " << m.rows() << "x" << m.cols()
        << " matrix";
    throw NumericalError(msg.str());
  }
  SvdResult out{dec.matrixU(), dec.singularValues(),
                dec.matrixV().transpose()};
  require_finite(out.u, "svd U");
  require_finite(out.vt, "svd V^T");
  return out;
}

Index numeric_rank(const Vector& singular_values, double rel_tol) {
  if (rel_tol <= 0.0)
    throw ValidationError("numeric_rank: rel_tol must be > 0");
  if (singular_values.size() == 0) return 0;
  const double cutoff = rel_tol * singular_values[0];
  Index r = 0;
  while (r < singular_values.size() && singular_values[r] > cutoff) ++r;
  return singular_values[0] == 0.0 ? 0 : r;
}

Matrix row_null_projector(const Matrix& m, double rel_tol) {
  const Index d = m.cols();
  if (m.rows() == 0) return Matrix::Identity(d, d);

  const SvdResult dec = svd(m);
  const Index r = numeric_rank(dec.singular_values, rel_tol);
  Matrix p = Matrix::Identity(d, d);
  if (r > 0) {
    const Matrix v_r = dec.vt.topRows(r).transpose();  // d x r
    p.noalias() -= v_r * v_r.transpose();
  }
  p = 0.5 * (p + p.transpose());  // enforce symmetry at roundoff level
  require_finite(p, "row_null_projector");
  return p;
}

Matrix kronecker(const Matrix& a, const Matrix& b, std::int64_t entry_cap) {
  const std::int64_t entries = static_cast<std::int64_t>(a.rows()) * a.cols() *
                               b.rows() * b.cols();
  if (entries > entry_cap) {
    std::ostringstream msg;
    msg << "kronecker: output " << a.rows() * b.rows() << "x"
        << a.cols() * b.cols() << " (" << entries
        << " entries) exceeds cap " << entry_cap;
    throw ValidationError(msg.str());
  }
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix vectorize(const Matrix& m) {
  // MatrixXd is column-major, so this is the column-stacking vec(.)
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvectorize(const Matrix& v, Index rows, Index cols) {
  if (v.cols() > 1 || v.size() != rows * cols) {
    std::ostringstream msg;
    msg << "unvectorize: need a length-" << rows * cols << " column, got "
        << v.rows() << "x" << v.cols();
    throw ValidationError(msg.str());
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

namespace {

// Residual relative to the right-hand side. Gate for the unridged attempt:
// a singular factorization can emit a huge null-space component that a
// backward-error test would wave through.
double rhs_rel_residual(const Matrix& x, const Matrix& s, const Matrix& rhs) {
  return (x * s - rhs).norm() / std::max(1.0, rhs.norm());
}

// Normwise backward error. Gate for the ridged solve, whose legitimate
// solution norm grows like 1/ridge when the RHS has a component outside
// range(S); the evaluated residual then floors at eps * ||X|| * ||S|| and a
// RHS-relative test could never pass.
double backward_error(const Matrix& x, const Matrix& s, const Matrix& rhs) {
  return (x * s - rhs).norm() /
         (x.norm() * s.norm() + std::max(1.0, rhs.norm()));
}

constexpr double kSolveResidualTol = 1e-9;

}  // namespace

Matrix solve_right_sym(const Matrix& rhs, const Matrix& s, double ridge) {
  if (s.rows() != s.cols())
    throw ValidationError("solve_right_sym: S must be square");
  if (rhs.cols() != s.rows())
    throw ValidationError("solve_right_sym: RHS cols must match dim(S)");
  if ((s - s.transpose()).norm() > 1e-8 * std::max(1.0, s.norm()))
    throw ValidationError("solve_right_sym: S is not symmetric");
  if (s.rows() == 0) return Matrix(rhs.rows(), 0);

  // X S = RHS  <=>  S X^T = RHS^T for symmetric S. Iterative refinement
  // recovers the residual gate on ill-conditioned systems, where a single
  // LDLT solve lands around eps * cond.
  const auto attempt = [&](const Matrix& sys) -> Matrix {
    Eigen::LDLT<Matrix> ldlt(sys);
    if (ldlt.info() != Eigen::Success) return Matrix();
    Matrix x = ldlt.solve(rhs.transpose()).transpose();
    if (!x.allFinite()) return Matrix();
    for (int pass = 0; pass < 3; ++pass) {
      const Matrix residual = rhs - x * sys;
      if (residual.norm() <= kSolveResidualTol * std::max(1.0, rhs.norm()))
        break;
      const Matrix correction = ldlt.solve(residual.transpose()).transpose();
      if (!correction.allFinite()) break;
      x += correction;
    }
    return x;
  };

  // Fast path: the forward residual certifies the solve outright.
  Matrix x = attempt(s);
  if (x.size() > 0 && rhs_rel_residual(x, s, rhs) <= kSolveResidualTol)
    return x;

  // The forward residual evaluation floors at eps * ||X|| * ||S||, so it
  // cannot certify legitimately ill-conditioned solves; the backward error
  // can, but would also wave through the junk null-space component a LDLT
  // of a genuinely singular S emits. Route on the measured spectrum.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().cwiseAbs().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  const bool invertible = lo > 0.0 && hi / lo <= 1e12;
  if (invertible && x.size() > 0 &&
      backward_error(x, s, rhs) <= kSolveResidualTol)
    return x;

  if (!invertible && ridge > 0.0) {
    const Matrix s_ridged =
        s + ridge * Matrix::Identity(s.rows(), s.cols());
    x = attempt(s_ridged);
    if (x.size() > 0 &&
        backward_error(x, s_ridged, rhs) <= kSolveResidualTol)
      return x;
  }

  std::ostringstream msg;
  msg << "solve_right_sym: singular system (dim " << s.rows()
      << ", ridge " << ridge << ", |lambda| range [" << lo << ", " << hi
      << "], condition estimate " << (lo > 0 ? hi / lo : INFINITY) << ")";
  throw NumericalError(msg.str());
}

Matrix pca_2d(const Matrix& data, bool center) {
  if (data.cols() < 2)
    throw ValidationError("pca_2d: need at least 2 feature dimensions");
  if (data.rows() < 2)
    throw ValidationError("pca_2d: need at least 2 samples");

  Matrix x = data;
  if (center) x.rowwise() -= data.colwise().mean();

  const SvdResult dec = svd(x);
  Matrix components = dec.vt.topRows(2).transpose();  // d x 2
  for (Index j = 0; j < 2; ++j) {
    Index at = 0;
    components.col(j).cwiseAbs().maxCoeff(&at);
    if (components(at, j) < 0.0) components.col(j) = -components.col(j);
  }
  Matrix scores = x * components;
  require_finite(scores, "pca_2d scores");
  return scores;
}

}  // namespace zul
