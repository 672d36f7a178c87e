#include "zul/additive_unlearn.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <sstream>

#include "zul/errors.hpp"
#include "zul/log.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/rng.hpp"

namespace zul {

Matrix retain_null_projector(const Matrix& k_0, double rel_tol) {
  const Index d_k = k_0.rows();
  const Matrix second_moment = k_0 * k_0.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(second_moment);
  if (eig.info() != Eigen::Success)
    throw NumericalError("retain_null_projector: eigendecomposition failed on dim " +
                         std::to_string(d_k));

  // Eigen sorts eigenvalues ascending; the null block comes first.
  const Vector& lambda = eig.eigenvalues();
  const double lambda_max = lambda.size() ? std::max(0.0, lambda[lambda.size() - 1]) : 0.0;
  const double cutoff = rel_tol * lambda_max;
  Index null_dim = 0;
  while (null_dim < lambda.size() && lambda[null_dim] <= cutoff) ++null_dim;

  if (null_dim == 0) {
    log_info("retain_null_projector: K_0 has full rank " +
             std::to_string(d_k) +
             "; P_m = 0 and the additive edit has zero capacity");
    return Matrix::Zero(d_k, d_k);
  }
  const Matrix u_null = eig.eigenvectors().leftCols(null_dim);
  Matrix p_m = u_null * u_null.transpose();
  p_m = 0.5 * (p_m + p_m.transpose());
  require_finite(p_m, "retain_null_projector");
  return p_m;
}

SylvesterSystem assemble_sylvester(const Matrix& w, const KnowledgeSets& sets,
                                   const Matrix& p_m) {
  if (sets.k_f.cols() < 1)
    throw ValidationError("assemble_sylvester: the additive path requires n_f >= 1");
  const Index d_m = w.rows();
  const Index d_k = w.cols();
  if (sets.k_f.rows() != d_k || sets.m_f.rows() != d_m ||
      sets.m_n.rows() != d_m || sets.m_n.cols() != sets.k_f.cols() ||
      sets.m_f.cols() != sets.k_f.cols())
    throw ValidationError("assemble_sylvester: knowledge set shapes do not match W");
  if (p_m.rows() != d_k || p_m.cols() != d_k)
    throw ValidationError("assemble_sylvester: P_m must be d_k x d_k");

  SylvesterSystem sys;
  sys.q = sets.m_f * sets.m_f.transpose() + Matrix::Identity(d_m, d_m);
  const Matrix kkt = sets.k_f * sets.k_f.transpose();
  sys.h = p_m * kkt * p_m.transpose();
  sys.c = p_m * p_m.transpose();
  sys.z = sets.m_n * sets.k_f.transpose() * p_m.transpose() -
          sys.q * w * kkt * p_m.transpose();
  require_finite(sys.z, "assemble_sylvester Z");
  return sys;
}

double sylvester_residual(const SylvesterSystem& sys, const Matrix& d_tilde) {
  return (sys.q * d_tilde * sys.h + d_tilde * sys.c - sys.z).norm() /
         std::max(1.0, sys.z.norm());
}

Matrix solve_sylvester_kron(const SylvesterSystem& sys, Index dim_cap) {
  const Index d_m = sys.q.rows();
  const Index d_k = sys.h.rows();
  const Index dim = d_m * d_k;
  if (dim > dim_cap) {
    std::ostringstream msg;
    msg << "solve_sylvester_kron: d_m*d_k = " << dim << " exceeds dim_cap "
        << dim_cap << "; the dense vectorized system is " << dim << "x" << dim
        << " and costs O((d_m*d_k)^3) time / O((d_m*d_k)^2) memory -- use the "
           "gradient solver for instances this large";
    throw ComplexityLimitError(msg.str());
  }

  const std::int64_t entries = static_cast<std::int64_t>(dim) * dim;
  Matrix system = kronecker(sys.h.transpose(), sys.q, entries) +
                  kronecker(sys.c.transpose(), Matrix::Identity(d_m, d_m),
                            entries);

  // Singular whenever P_m != I, but always consistent; the min-norm
  // least-squares solution is the one orthogonal to the do-nothing
  // directions (X with X P_m = 0).
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(system);
  const Matrix d_tilde = unvectorize(cod.solve(vectorize(sys.z)), d_m, d_k);
  require_finite(d_tilde, "solve_sylvester_kron");

  const double residual = sylvester_residual(sys, d_tilde);
  if (residual > 1e-8) {
    std::ostringstream msg;
    msg << "solve_sylvester_kron: residual " << residual
        << " exceeds 1e-8 (system rank " << cod.rank() << "/" << dim << ")";
    throw NumericalError(msg.str());
  }
  return d_tilde;
}

double additive_objective(const Matrix& d_tilde, const Matrix& w,
                          const KnowledgeSets& sets, const Matrix& p_m) {
  const Matrix effective = d_tilde * p_m;
  const Matrix forget_out = (w + effective) * sets.k_f;
  return (sets.m_f.transpose() * forget_out).squaredNorm() +
         (forget_out - sets.m_n).squaredNorm() + effective.squaredNorm();
}

Matrix objective_gradient(const Matrix& d_tilde, const Matrix& w,
                          const KnowledgeSets& sets, const Matrix& p_m) {
  const Index d_m = w.rows();
  if (d_tilde.rows() != d_m || d_tilde.cols() != w.cols())
    throw ValidationError("objective_gradient: D must match W's shape");

  const Matrix shifted = w + d_tilde * p_m;
  const Matrix t = shifted * sets.k_f;  // (W + D P_m) K_f
  // Q t = (M_f M_f^T + I) t, kept as skinny products.
  const Matrix qt = sets.m_f * (sets.m_f.transpose() * t) + t;
  const Matrix kf_pm = sets.k_f.transpose() * p_m.transpose();
  return 2.0 * (qt * kf_pm - sets.m_n * kf_pm +
                (d_tilde * p_m) * p_m.transpose());
}

namespace {

// Largest curvature of the quadratic form via power iteration on
// X -> Q X H + X C; the gradient is 2x that map plus a constant.
double lipschitz_estimate(const SylvesterSystem& sys) {
  RngStream rng(0x5eedu, "lipschitz");
  Matrix x = rng.gaussian_matrix(sys.q.rows(), sys.h.rows());
  double norm = x.norm();
  if (norm == 0.0) return 0.0;
  x /= norm;
  double lambda = 0.0;
  for (int it = 0; it < 25; ++it) {
    Matrix y = sys.q * x * sys.h + x * sys.c;
    lambda = y.norm();
    if (lambda < 1e-300) return 0.0;
    x = y / lambda;
  }
  return 2.0 * lambda;
}

}  // namespace

GdResult solve_gd(const Matrix& w, const KnowledgeSets& sets,
                  const Matrix& p_m, const GdConfig& cfg,
                  const std::optional<Matrix>& init) {
  if (sets.k_f.cols() < 1)
    throw ValidationError("solve_gd: the additive path requires n_f >= 1");
  if (cfg.max_iters < 1)
    throw ValidationError("solve_gd: max_iters must be >= 1");
  if (cfg.grad_tol <= 0.0)
    throw ValidationError("solve_gd: grad_tol must be > 0");

  const SylvesterSystem sys = assemble_sylvester(w, sets, p_m);
  const double lipschitz = lipschitz_estimate(sys);
  const double base_step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

  GdResult result;
  result.d_tilde = init.value_or(Matrix::Zero(w.rows(), w.cols()));
  if (init && (init->rows() != w.rows() || init->cols() != w.cols()))
    throw ValidationError("solve_gd: init must match W's shape");

  double objective = additive_objective(result.d_tilde, w, sets, p_m);
  Matrix best = result.d_tilde;
  double best_objective = objective;

  Matrix grad = objective_gradient(result.d_tilde, w, sets, p_m);
  const double initial_grad_norm = grad.norm();
  const double stop = cfg.grad_tol * (1.0 + initial_grad_norm);

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const double grad_norm = grad.norm();
    result.final_grad_norm = grad_norm;
    if (grad_norm <= stop) {
      result.converged = true;
      break;
    }

    double step = base_step;
    const double grad_sq = grad.squaredNorm();
    Matrix candidate;
    double candidate_objective = objective;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      candidate = result.d_tilde - step * grad;
      candidate_objective = additive_objective(candidate, w, sets, p_m);
      if (candidate_objective <=
          objective - cfg.sufficient_decrease * step * grad_sq) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) break;  // stalled at roundoff; best iterate stands

    result.d_tilde = std::move(candidate);
    objective = candidate_objective;
    if (objective < best_objective) {
      best_objective = objective;
      best = result.d_tilde;
    }
    grad = objective_gradient(result.d_tilde, w, sets, p_m);
  }

  result.iters = it;
  result.d_tilde = std::move(best);
  result.objective = best_objective;
  result.final_grad_norm =
      objective_gradient(result.d_tilde, w, sets, p_m).norm();
  if (!result.converged && result.final_grad_norm <= stop)
    result.converged = true;
  if (!result.converged)
    log_debug("solve_gd: not converged after " + std::to_string(it) +
              " iterations (grad norm " +
              std::to_string(result.final_grad_norm) + ")");
  return result;
}

Matrix apply_additive(const Matrix& w, const Matrix& d_tilde,
                      const Matrix& p_m) {
  if (d_tilde.rows() != w.rows() || d_tilde.cols() != w.cols())
    throw ValidationError("apply_additive: D must match W's shape");
  if (p_m.rows() != w.cols() || p_m.cols() != w.cols())
    throw ValidationError("apply_additive: P_m must be d_k x d_k");
  Matrix w_new = w + d_tilde * p_m;
  require_finite(w_new, "apply_additive");
  return w_new;
}

}  // namespace zul
