#pragma once

#include <functional>

#include "zul/additive_unlearn.hpp"
#include "zul/fact_store.hpp"
#include "zul/matrix.hpp"

namespace zul {

struct OracleResult {
  double objective_value = 0.0;
  Matrix solution;
  int iters = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Projected gradient descent on the regularized multiplicative objective
// over {D : P D = D}, with the same projector and the same term evaluator
// the closed form uses. Certifies the closed form: the oracle objective can
// never land meaningfully below it.
OracleResult gd_multiplicative_oracle(const Matrix& w,
                                      const KnowledgeSets& sets,
                                      const GdConfig& cfg,
                                      double rel_tol = 1e-10);

// Central differences, entry step eps * (1 + |x_ij|).
Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& objective,
                            const Matrix& point, double eps);

}  // namespace zul
