#include <doctest.h>

#include <cmath>

#include "zul/additive_unlearn.hpp"
#include "zul/errors.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/oracle.hpp"
#include "zul/rng.hpp"

using namespace zul;

namespace {

struct TestInstance {
  Matrix w;
  KnowledgeSets sets;
  Matrix p_m;
};

TestInstance make_instance(std::uint64_t seed, Index d_k, Index d_m,
                           Index n_f, Index n_0) {
  RngStream rng(seed, "additive-test");
  TestInstance inst;
  inst.w = rng.gaussian_matrix(d_m, d_k) / std::sqrt(static_cast<double>(d_k));
  inst.sets.k_f.resize(d_k, n_f);
  for (Index c = 0; c < n_f; ++c) inst.sets.k_f.col(c) = rng.unit_vector(d_k);
  inst.sets.m_f = inst.w * inst.sets.k_f;
  inst.sets.k_0.resize(d_k, n_0);
  for (Index c = 0; c < n_0; ++c) inst.sets.k_0.col(c) = rng.unit_vector(d_k);
  inst.sets.m_0 = inst.w * inst.sets.k_0;
  inst.sets.m_n.resize(d_m, n_f);
  for (Index c = 0; c < n_f; ++c) inst.sets.m_n.col(c) = rng.unit_vector(d_m);
  inst.p_m = retain_null_projector(inst.sets.k_0);
  return inst;
}

}  // namespace

TEST_CASE("retain_null_projector on an axis-aligned utility key") {
  Matrix k_0 = Matrix::Zero(3, 1);
  k_0(0, 0) = 1.0;
  Matrix expected = Matrix::Zero(3, 3);
  expected(1, 1) = 1.0;
  expected(2, 2) = 1.0;
  CHECK(retain_null_projector(k_0).isApprox(expected, 1e-12));
}

TEST_CASE("retain_null_projector of a full-rank K_0 is zero") {
  RngStream rng(51, "pm");
  Matrix k_0 = rng.gaussian_matrix(4, 4);
  k_0 += 4.0 * Matrix::Identity(4, 4);
  CHECK(retain_null_projector(k_0).norm() == 0.0);
}

TEST_CASE("retain_null_projector matches the SVD route") {
  RngStream rng(4, "pm-svd");
  const Matrix k_0 = rng.gaussian_matrix(12, 5);
  const Matrix p_m = retain_null_projector(k_0);

  CHECK((p_m - p_m.transpose()).norm() <= 1e-10);
  CHECK((p_m * p_m - p_m).norm() <= 1e-10);
  CHECK((p_m * k_0).norm() <= 1e-11 * k_0.norm());
  Index rank_pm = 0;
  const Vector sv = svd(p_m).singular_values;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 0.5) ++rank_pm;
  CHECK(rank_pm == 7);

  // independent construction from the SVD of K_0^T
  const Matrix via_svd = row_null_projector(k_0.transpose(), 1e-10);
  CHECK((p_m - via_svd).norm() <= 1e-9);
}

TEST_CASE("assemble_sylvester builds the documented blocks") {
  const TestInstance inst = make_instance(4, 10, 8, 3, 4);
  const SylvesterSystem sys = assemble_sylvester(inst.w, inst.sets, inst.p_m);

  CHECK(sys.q.isApprox(
      inst.sets.m_f * inst.sets.m_f.transpose() + Matrix::Identity(8, 8),
      1e-14));
  CHECK((sys.h - sys.h.transpose()).norm() <= 1e-12 * std::max(1.0, sys.h.norm()));
  CHECK((sys.c - sys.c.transpose()).norm() <= 1e-12 * std::max(1.0, sys.c.norm()));

  // Q is SPD, H and C are PSD
  Eigen::SelfAdjointEigenSolver<Matrix> eq(sys.q);
  CHECK(eq.eigenvalues().minCoeff() >= 1.0 - 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> eh(sys.h);
  CHECK(eh.eigenvalues().minCoeff() >= -1e-12);

  SUBCASE("zero-value forget columns still give Q = I") {
    KnowledgeSets sets = inst.sets;
    sets.m_f = Matrix::Zero(8, 3);
    const SylvesterSystem sys2 = assemble_sylvester(inst.w, sets, inst.p_m);
    CHECK(sys2.q.isApprox(Matrix::Identity(8, 8), 1e-14));
  }

  SUBCASE("empty forget set is rejected") {
    KnowledgeSets sets = inst.sets;
    sets.k_f = Matrix(10, 0);
    sets.m_f = Matrix(8, 0);
    sets.m_n = Matrix(8, 0);
    CHECK_THROWS_AS(assemble_sylvester(inst.w, sets, inst.p_m),
                    ValidationError);
  }
}

TEST_CASE("solve_sylvester_kron degenerate equations") {
  SUBCASE("Q = I, H = 0, C = I collapses to D = Z") {
    RngStream rng(52, "kron");
    SylvesterSystem sys;
    sys.q = Matrix::Identity(3, 3);
    sys.h = Matrix::Zero(4, 4);
    sys.c = Matrix::Identity(4, 4);
    sys.z = rng.gaussian_matrix(3, 4);
    CHECK(solve_sylvester_kron(sys).isApprox(sys.z, 1e-12));
  }

  SUBCASE("scalar algebra") {
    SylvesterSystem sys;
    sys.q = 2.0 * Matrix::Ones(1, 1);
    sys.h = 3.0 * Matrix::Ones(1, 1);
    sys.c = Matrix::Ones(1, 1);
    sys.z = 14.0 * Matrix::Ones(1, 1);
    CHECK(solve_sylvester_kron(sys)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("solve_sylvester_kron meets its residual contract") {
  const TestInstance inst = make_instance(8, 6, 6, 2, 3);
  const SylvesterSystem sys = assemble_sylvester(inst.w, inst.sets, inst.p_m);
  const Matrix d_tilde = solve_sylvester_kron(sys);
  CHECK(sylvester_residual(sys, d_tilde) <= 1e-9);

  GdConfig cfg;
  cfg.grad_tol = 1e-10;
  cfg.max_iters = 100000;
  const GdResult gd = solve_gd(inst.w, inst.sets, inst.p_m, cfg);
  CHECK(gd.converged);
  CHECK((d_tilde - gd.d_tilde).norm() <= 1e-5 * (1.0 + d_tilde.norm()));
}

TEST_CASE("solve_sylvester_kron enforces the dimension cap") {
  const TestInstance inst = make_instance(53, 8, 8, 2, 4);
  const SylvesterSystem sys = assemble_sylvester(inst.w, inst.sets, inst.p_m);
  CHECK_THROWS_AS(solve_sylvester_kron(sys, 32), ComplexityLimitError);
}

TEST_CASE("objective_gradient vanishes at the Kronecker solution") {
  const TestInstance inst = make_instance(54, 7, 6, 2, 3);
  const SylvesterSystem sys = assemble_sylvester(inst.w, inst.sets, inst.p_m);
  const Matrix d_tilde = solve_sylvester_kron(sys);
  const Matrix grad = objective_gradient(d_tilde, inst.w, inst.sets, inst.p_m);
  const double scale = std::max(1.0, 2.0 * sys.z.norm());
  CHECK(grad.norm() <= 1e-7 * scale);
}

TEST_CASE("objective_gradient matches central finite differences") {
  const TestInstance inst = make_instance(10, 5, 5, 2, 3);
  RngStream rng(10, "fd-point");
  const Matrix point = rng.gaussian_matrix(5, 5);
  const Matrix analytic =
      objective_gradient(point, inst.w, inst.sets, inst.p_m);
  const Matrix numeric = finite_diff_gradient(
      [&](const Matrix& x) {
        return additive_objective(x, inst.w, inst.sets, inst.p_m);
      },
      point, 1e-6);
  CHECK((analytic - numeric).norm() <= 1e-4 * std::max(1.0, analytic.norm()));
}

TEST_CASE("objective_gradient on the all-zero instance is zero") {
  KnowledgeSets sets;
  sets.k_f = Matrix::Zero(4, 2);
  sets.m_f = Matrix::Zero(3, 2);
  sets.m_n = Matrix::Zero(3, 2);
  sets.k_0 = Matrix::Zero(4, 2);
  sets.m_0 = Matrix::Zero(3, 2);
  const Matrix w = Matrix::Zero(3, 4);
  const Matrix p_m = Matrix::Identity(4, 4);
  const Matrix grad = objective_gradient(Matrix::Zero(3, 4), w, sets, p_m);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("solve_gd from the Kronecker solution converges immediately") {
  const TestInstance inst = make_instance(55, 6, 6, 2, 3);
  const SylvesterSystem sys = assemble_sylvester(inst.w, inst.sets, inst.p_m);
  const Matrix d_tilde = solve_sylvester_kron(sys);
  GdConfig cfg;
  const GdResult gd = solve_gd(inst.w, inst.sets, inst.p_m, cfg, d_tilde);
  CHECK(gd.converged);
  CHECK(gd.iters <= 2);
}

TEST_CASE("solve_gd with a dead projector returns a zero effective update") {
  TestInstance inst = make_instance(56, 5, 5, 2, 3);
  inst.p_m = Matrix::Zero(5, 5);
  const GdResult gd = solve_gd(inst.w, inst.sets, inst.p_m, GdConfig{});
  CHECK(gd.converged);
  CHECK((gd.d_tilde * inst.p_m).norm() == 0.0);
  const Matrix w_new = apply_additive(inst.w, gd.d_tilde, inst.p_m);
  CHECK((w_new - inst.w).norm() == 0.0);
}

TEST_CASE("solve_gd flags budget exhaustion instead of throwing") {
  const TestInstance inst = make_instance(57, 8, 8, 3, 4);
  GdConfig cfg;
  cfg.max_iters = 1;
  cfg.grad_tol = 1e-14;
  const GdResult gd = solve_gd(inst.w, inst.sets, inst.p_m, cfg);
  CHECK_FALSE(gd.converged);
  CHECK(gd.iters == 1);
}

TEST_CASE("GD objective agrees with the Kronecker solve at d = 16") {
  const TestInstance inst = make_instance(12, 16, 16, 4, 8);
  const SylvesterSystem sys = assemble_sylvester(inst.w, inst.sets, inst.p_m);
  const Matrix closed = solve_sylvester_kron(sys, /*dim_cap=*/4096);
  GdConfig cfg;
  cfg.grad_tol = 1e-10;
  cfg.max_iters = 200000;
  const GdResult gd = solve_gd(inst.w, inst.sets, inst.p_m, cfg);
  const double closed_objective =
      additive_objective(closed, inst.w, inst.sets, inst.p_m);
  CHECK(gd.objective <= closed_objective + 1e-6 * (1.0 + closed_objective));
  CHECK(std::abs(gd.objective - closed_objective) <=
        1e-6 * (1.0 + closed_objective));
}

TEST_CASE("apply_additive preserves the utility mapping exactly") {
  const TestInstance inst = make_instance(4, 12, 10, 3, 5);

  SUBCASE("no-op with a zero update") {
    const Matrix w_new =
        apply_additive(inst.w, Matrix::Zero(10, 12), inst.p_m);
    CHECK((w_new - inst.w).norm() == 0.0);
  }

  SUBCASE("any update leaves W K_0 untouched") {
    RngStream rng(58, "apply");
    const Matrix d_tilde = rng.gaussian_matrix(10, 12);
    const Matrix w_new = apply_additive(inst.w, d_tilde, inst.p_m);
    CHECK(((w_new - inst.w) * inst.sets.k_0).norm() <=
          1e-10 * inst.w.norm() * inst.sets.k_0.norm());
  }

  SUBCASE("the solved edit reduces the forget term") {
    const SylvesterSystem sys =
        assemble_sylvester(inst.w, inst.sets, inst.p_m);
    const Matrix d_tilde = solve_sylvester_kron(sys);
    const Matrix w_new = apply_additive(inst.w, d_tilde, inst.p_m);
    const double before = (inst.w * inst.sets.k_f - inst.sets.m_n).squaredNorm();
    const double after = (w_new * inst.sets.k_f - inst.sets.m_n).squaredNorm();
    CHECK(after < before);
    // exact retain preservation at solver output
    CHECK(((w_new - inst.w) * inst.sets.k_0).norm() <=
          1e-10 * std::max(1e-300, (inst.w * inst.sets.k_0).norm()));
  }
}

TEST_CASE("GD objective is non-increasing across accepted steps") {
  // monotonicity probe: rerun GD tracking the objective by hand
  const TestInstance inst = make_instance(59, 9, 9, 3, 4);
  GdConfig cfg;
  cfg.max_iters = 200;
  Matrix d = Matrix::Zero(9, 9);
  double prev = additive_objective(d, inst.w, inst.sets, inst.p_m);
  const GdResult gd = solve_gd(inst.w, inst.sets, inst.p_m, cfg);
  CHECK(gd.objective <= prev);
  // and the returned best iterate evaluates to the reported objective
  CHECK(additive_objective(gd.d_tilde, inst.w, inst.sets, inst.p_m) ==
        doctest::Approx(gd.objective).epsilon(1e-12));
}
