#include "zul/oracle.hpp"

#include <cmath>

#include "zul/errors.hpp"
#include "zul/matrix_kernel.hpp"
#include "zul/rng.hpp"
#include "zul/zero_unlearn.hpp"

namespace zul {

namespace {

double power_iteration_lipschitz(const Matrix& p, const Matrix& s) {
  RngStream rng(0x5eedu, "lipschitz");
  Matrix x = rng.gaussian_matrix(p.rows(), p.rows());
  double norm = x.norm();
  if (norm == 0.0) return 0.0;
  x /= norm;
  double lambda = 0.0;
  for (int it = 0; it < 25; ++it) {
    Matrix y = p * (x * s);
    lambda = y.norm();
    if (lambda < 1e-300) return 0.0;
    x = y / lambda;
  }
  return 2.0 * lambda;
}

}  // namespace

OracleResult gd_multiplicative_oracle(const Matrix& w,
                                      const KnowledgeSets& sets,
                                      const GdConfig& cfg, double rel_tol) {
  if (cfg.max_iters < 1)
    throw ValidationError("gd_multiplicative_oracle: max_iters must be >= 1");
  if (cfg.grad_tol <= 0.0)
    throw ValidationError("gd_multiplicative_oracle: grad_tol must be > 0");

  const Matrix p = row_null_projector(sets.m_f.transpose(), rel_tol);
  const Matrix b = sets.k_f * sets.k_f.transpose() +
                   sets.k_0 * sets.k_0.transpose();
  const Matrix s =
      w * (b + Matrix::Identity(b.rows(), b.cols())) * w.transpose();

  // Same term evaluator as the editor; iterates stay in {P D = D}, where the
  // projected and unprojected objectives coincide.
  const auto objective = [&](const Matrix& d) {
    return objective_terms(d * w, w, sets).total();
  };
  const Matrix wk_f = w * sets.k_f;
  const Matrix wk_0 = w * sets.k_0;
  const auto gradient = [&](const Matrix& d) -> Matrix {
    return 2.0 * (p * ((d * wk_f - sets.m_n) * wk_f.transpose() +
                       (d * wk_0 - sets.m_0) * wk_0.transpose() +
                       (d * w - w) * w.transpose()));
  };

  const double lipschitz = power_iteration_lipschitz(p, s);
  const double base_step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

  OracleResult result;
  result.solution = p;  // the in-subspace identity
  double objective_value = objective(result.solution);
  Matrix grad = gradient(result.solution);
  const double stop = cfg.grad_tol * (1.0 + grad.norm());

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    result.grad_norm = grad.norm();
    if (result.grad_norm <= stop) {
      result.converged = true;
      break;
    }
    double step = base_step;
    const double grad_sq = grad.squaredNorm();
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Matrix candidate = result.solution - step * grad;
      const double candidate_objective = objective(candidate);
      if (candidate_objective <= objective_value - 1e-4 * step * grad_sq) {
        result.solution = std::move(candidate);
        objective_value = candidate_objective;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    grad = gradient(result.solution);
  }

  result.iters = it;
  result.objective_value = objective_value;
  result.grad_norm = grad.norm();
  if (!result.converged) result.converged = result.grad_norm <= stop;
  return result;
}

Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& objective,
                            const Matrix& point, double eps) {
  if (eps <= 0.0)
    throw ValidationError("finite_diff_gradient: eps must be > 0");
  Matrix grad(point.rows(), point.cols());
  Matrix probe = point;
  for (Index i = 0; i < point.rows(); ++i) {
    for (Index j = 0; j < point.cols(); ++j) {
      const double h = eps * (1.0 + std::abs(point(i, j)));
      probe(i, j) = point(i, j) + h;
      const double up = objective(probe);
      probe(i, j) = point(i, j) - h;
      const double down = objective(probe);
      probe(i, j) = point(i, j);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace zul
