#include <doctest.h>

#include "zul/errors.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/rng.hpp"

using namespace zul;

namespace {

// Projector spectra are {0, 1}: count singular values above 1/2. Relative
// thresholds misfire when P is the zero matrix.
Index projector_rank(const Matrix& p) {
  const Vector sv = svd(p).singular_values;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 0.5) ++rank;
  return rank;
}

}  // namespace

TEST_CASE("svd of a diagonal matrix") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 2.0;
  const SvdResult dec = svd(m);
  CHECK(dec.singular_values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(dec.singular_values[1] == doctest::Approx(2.0).epsilon(1e-14));
  // U and V are the identity up to column signs.
  CHECK(dec.u.cwiseAbs().isApprox(Matrix::Identity(2, 2), 1e-12));
  CHECK(dec.vt.cwiseAbs().isApprox(Matrix::Identity(2, 2), 1e-12));
}

TEST_CASE("svd of the zero matrix") {
  const SvdResult dec = svd(Matrix::Zero(2, 3));
  REQUIRE(dec.singular_values.size() == 2);
  CHECK(dec.singular_values[0] == 0.0);
  CHECK(dec.singular_values[1] == 0.0);
}

TEST_CASE("svd reconstructs a random 8x3 matrix") {
  RngStream rng(42, "svd");
  const Matrix m = rng.gaussian_matrix(8, 3);
  const SvdResult dec = svd(m);
  const Matrix back = dec.u * dec.singular_values.asDiagonal() * dec.vt;
  CHECK((back - m).norm() <= 1e-12 * m.norm());
  for (Index i = 1; i < dec.singular_values.size(); ++i)
    CHECK(dec.singular_values[i - 1] >= dec.singular_values[i]);
}

TEST_CASE("numeric_rank thresholds") {
  Vector s(3);
  s << 3.0, 2.0, 1e-15;
  CHECK(numeric_rank(s, 1e-10) == 2);

  Vector zeros = Vector::Zero(2);
  CHECK(numeric_rank(zeros, 1e-10) == 0);
  CHECK(numeric_rank(zeros, 0.5) == 0);

  CHECK_THROWS_AS(numeric_rank(s, 0.0), ValidationError);
}

TEST_CASE("numeric_rank of an exact rank-3 product") {
  RngStream rng(3, "rank");
  const Matrix m = rng.gaussian_matrix(8, 3) * rng.gaussian_matrix(3, 5);
  CHECK(numeric_rank(svd(m).singular_values, 1e-10) == 3);
}

TEST_CASE("row_null_projector on an axis-aligned row") {
  Matrix m(1, 3);
  m << 1.0, 0.0, 0.0;
  Matrix expected = Matrix::Zero(3, 3);
  expected(1, 1) = 1.0;
  expected(2, 2) = 1.0;
  CHECK(row_null_projector(m, 1e-10).isApprox(expected, 1e-12));
}

TEST_CASE("row_null_projector of a full-rank square matrix is zero") {
  Matrix m(3, 3);
  m << 2, 1, 0, 0, 3, 1, 1, 0, 2;
  CHECK(row_null_projector(m, 1e-10).norm() <= 1e-12);
}

TEST_CASE("row_null_projector on a random wide rank-3 matrix") {
  RngStream rng(5, "proj");
  const Matrix m = rng.gaussian_matrix(3, 8);  // full row rank 3
  const Matrix p = row_null_projector(m, 1e-10);
  CHECK(projector_rank(p) == 5);
  CHECK((m * p).norm() <= 1e-11 * m.norm());
}

TEST_CASE("projector identities and the rank law over random instances") {
  for (int t = 0; t < 100; ++t) {
    RngStream rng(1000 + static_cast<std::uint64_t>(t), "proj-prop");
    const Index rows = 1 + static_cast<Index>(rng.next_u64() % 6);
    const Index cols = 2 + static_cast<Index>(rng.next_u64() % 12);
    const Matrix m = rng.gaussian_matrix(rows, cols);
    for (const double rel_tol : {1e-8, 1e-10, 1e-12}) {
      const Matrix p = row_null_projector(m, rel_tol);
      CHECK((p - p.transpose()).norm() <= 1e-10);
      CHECK((p * p - p).norm() <= 1e-10);
      CHECK((m * p).norm() <= 1e-10 * std::max(1.0, m.norm()));
    }
    const Matrix p = row_null_projector(m, 1e-10);
    const Index rank_m = numeric_rank(svd(m).singular_values, 1e-10);
    CHECK(projector_rank(p) + rank_m == cols);
  }
}

TEST_CASE("kronecker with an identity factor is a block diagonal") {
  RngStream rng(7, "kron");
  const Matrix a = rng.gaussian_matrix(2, 3);
  const Matrix k = kronecker(Matrix::Identity(2, 2), a);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 6);
  CHECK(k.block(0, 0, 2, 3).isApprox(a));
  CHECK(k.block(2, 3, 2, 3).isApprox(a));
  CHECK(k.block(0, 3, 2, 3).norm() == 0.0);
  CHECK(k.block(2, 0, 2, 3).norm() == 0.0);
}

TEST_CASE("kronecker with a 1x1 left factor scales") {
  Matrix a(1, 1);
  a << -2.5;
  RngStream rng(8, "kron");
  const Matrix b = rng.gaussian_matrix(3, 2);
  CHECK(kronecker(a, b).isApprox(-2.5 * b));
}

TEST_CASE("kronecker definition expansion") {
  Matrix a(2, 2), b(2, 2), expected(4, 4);
  a << 1, 2, 3, 4;
  b << 0, 1, 1, 0;
  expected << 0, 1, 0, 2,
              1, 0, 2, 0,
              0, 3, 0, 4,
              3, 0, 4, 0;
  CHECK(kronecker(a, b).isApprox(expected));
}

TEST_CASE("kronecker rejects outputs above the entry cap") {
  const Matrix a = Matrix::Ones(8, 8);
  const Matrix b = Matrix::Ones(8, 8);
  CHECK_THROWS_AS(kronecker(a, b, 1000), ValidationError);
}

TEST_CASE("vectorize stacks columns") {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const Matrix v = vectorize(m);
  REQUIRE(v.rows() == 4);
  CHECK(v(0, 0) == 1.0);
  CHECK(v(1, 0) == 3.0);
  CHECK(v(2, 0) == 2.0);
  CHECK(v(3, 0) == 4.0);
  CHECK(unvectorize(v, 2, 2).isApprox(m));
}

TEST_CASE("unvectorize rejects length mismatch") {
  CHECK_THROWS_AS(unvectorize(Matrix::Zero(3, 1), 2, 2), ValidationError);
}

TEST_CASE("vec identity vec(AXB) = (B^T kron A) vec(X)") {
  {
    RngStream rng(9, "vec");
    const Matrix a = rng.gaussian_matrix(3, 2);
    const Matrix x = rng.gaussian_matrix(2, 4);
    const Matrix b = rng.gaussian_matrix(4, 3);
    const Matrix lhs = vectorize(a * x * b);
    const Matrix rhs = kronecker(b.transpose(), a) * vectorize(x);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
  }
  for (int t = 0; t < 100; ++t) {
    RngStream rng(2000 + static_cast<std::uint64_t>(t), "vec-prop");
    const Index m = 1 + static_cast<Index>(rng.next_u64() % 5);
    const Index n = 1 + static_cast<Index>(rng.next_u64() % 5);
    const Index p = 1 + static_cast<Index>(rng.next_u64() % 5);
    const Matrix a = rng.gaussian_matrix(m, n);
    const Matrix x = rng.gaussian_matrix(n, p);
    const Matrix b = rng.gaussian_matrix(p, m);
    const Matrix lhs = vectorize(a * x * b);
    const Matrix rhs = kronecker(b.transpose(), a) * vectorize(x);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("solve_right_sym identity and scalar cases") {
  RngStream rng(11, "solve");
  Matrix s = rng.gaussian_matrix(4, 4);
  s = s * s.transpose() + Matrix::Identity(4, 4);  // SPD
  CHECK(solve_right_sym(s, s, 0.0).isApprox(Matrix::Identity(4, 4), 1e-10));

  const Matrix m = rng.gaussian_matrix(3, 4);
  const Matrix two_i = 2.0 * Matrix::Identity(4, 4);
  CHECK(solve_right_sym(m, two_i, 0.0).isApprox(0.5 * m, 1e-12));
}

TEST_CASE("solve_right_sym residual on a random SPD system") {
  RngStream rng(11, "spd");
  Matrix s = rng.gaussian_matrix(6, 6);
  s = s * s.transpose() + 0.1 * Matrix::Identity(6, 6);
  const Matrix rhs = rng.gaussian_matrix(6, 6);
  const Matrix x = solve_right_sym(rhs, s, 0.0);
  CHECK((x * s - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
}

TEST_CASE("solve_right_sym residual gate across conditionings") {
  // Forward-evaluated residuals floor at eps * cond (the product x * s
  // itself carries eps * ||x|| * ||s|| of roundoff), so the RHS-relative
  // gate is measurable up to cond ~ 1e6 and the backward error carries the
  // contract beyond that.
  RngStream rng(13, "cond");
  const Index d = 8;
  const auto spd_with_condition = [&](double log10_cond) {
    const Matrix q =
        Eigen::HouseholderQR<Matrix>(rng.gaussian_matrix(d, d)).householderQ();
    Vector lambda(d);
    for (Index i = 0; i < d; ++i)
      lambda[i] = std::pow(10.0, -log10_cond * static_cast<double>(i) /
                                     static_cast<double>(d - 1));
    Matrix s = q * lambda.asDiagonal() * q.transpose();
    return Matrix(0.5 * (s + s.transpose()));
  };

  const Matrix rhs = rng.gaussian_matrix(5, d);

  const Matrix s6 = spd_with_condition(6.0);
  const Matrix x6 = solve_right_sym(rhs, s6, 0.0);
  CHECK((x6 * s6 - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));

  // no ridge needed: the system is ill-conditioned but invertible
  const Matrix s10 = spd_with_condition(10.0);
  const Matrix x10 = solve_right_sym(rhs, s10, 0.0);
  CHECK((x10 * s10 - rhs).norm() <=
        1e-9 * (x10.norm() * s10.norm() + std::max(1.0, rhs.norm())));
}

TEST_CASE("solve_right_sym validates symmetry") {
  RngStream rng(12, "sym");
  const Matrix s = rng.gaussian_matrix(4, 4);  // not symmetric
  CHECK_THROWS_AS(solve_right_sym(Matrix::Identity(4, 4), s, 0.0),
                  ValidationError);
}

TEST_CASE("solve_right_sym falls back to ridge on singular systems") {
  // rank-1 PSD matrix, inconsistent RHS: hopeless without ridge.
  Vector u(3);
  u << 1.0, 2.0, -1.0;
  const Matrix s = u * u.transpose();
  Matrix rhs(1, 3);
  rhs << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(solve_right_sym(rhs, s, 0.0), NumericalError);

  const double mu = 1e-8 * s.trace() / 3.0;
  const Matrix x = solve_right_sym(rhs, s, mu);
  const Matrix ridged = s + mu * Matrix::Identity(3, 3);
  // inconsistent RHS blows ||X|| up to ~1/mu; the meaningful gate is the
  // normwise backward error
  CHECK((x * ridged - rhs).norm() <=
        1e-9 * (x.norm() * ridged.norm() + std::max(1.0, rhs.norm())));
}

TEST_CASE("pca_2d collapses collinear points onto one component") {
  Matrix data(5, 3);
  Vector dir(3);
  dir << 1.0, -2.0, 0.5;
  for (Index i = 0; i < 5; ++i)
    data.row(i) = (static_cast<double>(i) - 2.0) * dir.transpose();
  const Matrix scores = pca_2d(data, true);
  REQUIRE(scores.cols() == 2);
  CHECK(scores.col(1).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("pca_2d reproduces axis-aligned 2-D data") {
  Matrix data(4, 2);
  data << 2, 0, -2, 0, 0, 1, 0, -1;
  const Matrix scores = pca_2d(data, true);
  CHECK(scores.isApprox(data, 1e-12));
}

TEST_CASE("pca_2d validates dimensions") {
  CHECK_THROWS_AS(pca_2d(Matrix::Zero(5, 1), true), ValidationError);
  CHECK_THROWS_AS(pca_2d(Matrix::Zero(1, 3), true), ValidationError);
}
