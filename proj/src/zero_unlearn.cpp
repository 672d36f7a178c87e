#include "zul/zero_unlearn.hpp"

#include <chrono>
#include <cmath>

#include "zul/errors.hpp"
#include "zul/matrix_kernel.hpp"

namespace zul {

namespace {

void check_dims(const Matrix& w, const KnowledgeSets& sets) {
  const Index d_m = w.rows();
  const Index d_k = w.cols();
  if (sets.k_f.rows() != d_k || sets.k_0.rows() != d_k)
    throw ValidationError("knowledge sets: key dimension does not match W");
  if (sets.m_f.rows() != d_m || sets.m_0.rows() != d_m ||
      sets.m_n.rows() != d_m)
    throw ValidationError("knowledge sets: value dimension does not match W");
  if (sets.m_f.cols() != sets.k_f.cols() ||
      sets.m_n.cols() != sets.k_f.cols())
    throw ValidationError("knowledge sets: forget column counts disagree");
  if (sets.m_0.cols() != sets.k_0.cols())
    throw ValidationError("knowledge sets: utility column counts disagree");
}

}  // namespace

ObjectiveTerms objective_terms(const Matrix& w_eff, const Matrix& w_orig,
                               const KnowledgeSets& sets) {
  if (w_eff.rows() != w_orig.rows() || w_eff.cols() != w_orig.cols())
    throw ValidationError("objective_terms: W_eff and W_orig shapes differ");
  check_dims(w_eff, sets);

  ObjectiveTerms terms;
  const Matrix forget_out = w_eff * sets.k_f;
  terms.zero = (sets.m_f.transpose() * forget_out).squaredNorm();
  terms.forget = (forget_out - sets.m_n).squaredNorm();
  terms.utility = (w_eff * sets.k_0 - sets.m_0).squaredNorm();
  terms.reg = (w_eff - w_orig).squaredNorm();
  return terms;
}

ClosedFormResult closed_form_update(const Matrix& w, const KnowledgeSets& sets,
                                    double rel_tol, double ridge) {
  check_dims(w, sets);
  const auto t0 = std::chrono::steady_clock::now();
  const Index d_m = w.rows();

  // P annihilates the rows of M_f^T; empty forget set degenerates to P = I.
  const Matrix p = row_null_projector(sets.m_f.transpose(), rel_tol);
  // trace of an orthogonal projector counts its rank, here d_m - rank(M_f^T)
  const Index projector_rank = static_cast<Index>(std::llround(p.trace()));

  const Matrix a = sets.m_n * sets.k_f.transpose() +
                   sets.m_0 * sets.k_0.transpose();
  const Matrix b = sets.k_f * sets.k_f.transpose() +
                   sets.k_0 * sets.k_0.transpose();
  const Matrix s =
      w * (b + Matrix::Identity(b.rows(), b.cols())) * w.transpose();
  const Matrix g = (a + w) * w.transpose();

  const double mu =
      d_m > 0 ? ridge * s.trace() / static_cast<double>(d_m) : ridge;
  const Matrix d_base = solve_right_sym(g, s, mu > 0.0 ? mu : ridge);

  ClosedFormResult result;
  result.d_star = p * d_base;
  require_finite(result.d_star, "closed_form_update D*");
  result.w_new = result.d_star * w;

  result.report.method = "multiplicative";
  result.report.before = objective_terms(w, w, sets);
  result.report.after = objective_terms(result.w_new, w, sets);
  result.report.projector_rank = projector_rank;
  result.report.stationarity_residual =
      stationarity_residual(result.d_star, w, sets, rel_tol);
  result.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

double stationarity_residual(const Matrix& d_star, const Matrix& w,
                             const KnowledgeSets& sets, double rel_tol) {
  check_dims(w, sets);
  if (d_star.rows() != w.rows() || d_star.cols() != w.rows())
    throw ValidationError("stationarity_residual: D must be d_m x d_m");

  const Matrix p = row_null_projector(sets.m_f.transpose(), rel_tol);
  const Matrix wk_f = w * sets.k_f;
  const Matrix wk_0 = w * sets.k_0;

  const Matrix bracket = (d_star * wk_f - sets.m_n) * wk_f.transpose() +
                         (d_star * wk_0 - sets.m_0) * wk_0.transpose() +
                         (d_star * w - w) * w.transpose();
  const Matrix constant_part = sets.m_n * wk_f.transpose() +
                               sets.m_0 * wk_0.transpose() +
                               w * w.transpose();
  const double scale = std::max(1.0, constant_part.norm());
  return (p * bracket).norm() / scale;
}

}  // namespace zul
