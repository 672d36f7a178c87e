#pragma once

#include <optional>

#include "zul/fact_store.hpp"
#include "zul/matrix.hpp"
#include "zul/zero_unlearn.hpp"

namespace zul {

// Q D H + D C = Z with Q = M_f M_f^T + I, H = P_m K_f K_f^T P_m^T,
// C = P_m P_m^T, Z = M_n K_f^T P_m^T - Q W K_f K_f^T P_m^T.
struct SylvesterSystem {
  Matrix q;  // d_m x d_m, SPD
  Matrix h;  // d_k x d_k, PSD
  Matrix c;  // d_k x d_k, PSD
  Matrix z;  // d_m x d_k
};

struct GdConfig {
  int max_iters = 10000;
  double grad_tol = 1e-8;  // stop at ||g|| <= grad_tol * (1 + ||g_0||)
  // Backtracking line search seeded by a power-iteration Lipschitz estimate.
  double backtrack_factor = 0.5;
  double sufficient_decrease = 1e-4;
};

struct GdResult {
  Matrix d_tilde;
  int iters = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  double objective = 0.0;
};

// Module default for the "zero eigenvalue" threshold of K_0 K_0^T
// (lambda counts as zero when lambda <= rel_tol * lambda_max).
inline constexpr double kRetainNullTol = 1e-8;

// P_m = U' U'^T over the zero-eigenvalue eigenvectors of K_0 K_0^T; maps onto
// the right null space of K_0^T so P_m K_0 ~ 0. Full-rank K_0 yields P_m = 0
// (zero edit capacity; logged as a warning, not an error).
Matrix retain_null_projector(const Matrix& k_0, double rel_tol = kRetainNullTol);

// Requires n_f >= 1 (the additive path is the multi-sample variant).
SylvesterSystem assemble_sylvester(const Matrix& w, const KnowledgeSets& sets,
                                   const Matrix& p_m);

inline constexpr Index kDefaultDimCap = 2048;

// ||Q D H + D C - Z||_F / max(1, ||Z||_F)
double sylvester_residual(const SylvesterSystem& sys, const Matrix& d_tilde);

// Dense vectorized solve: vec(D) = (H^T kron Q + C^T kron I)^-1 vec(Z) via a
// rank-revealing min-norm least-squares factorization (the system is
// singular whenever P_m != I but always consistent). Refuses instances with
// d_m * d_k > dim_cap: the dense path costs O((d_m d_k)^3) time and
// O((d_m d_k)^2) memory, which is the complexity wall the gradient solver
// exists to avoid.
Matrix solve_sylvester_kron(const SylvesterSystem& sys,
                            Index dim_cap = kDefaultDimCap);

// ||M_f^T ((W + D P_m) K_f)||^2 + ||(W + D P_m) K_f - M_n||^2 + ||D P_m||^2
double additive_objective(const Matrix& d_tilde, const Matrix& w,
                          const KnowledgeSets& sets, const Matrix& p_m);

// Analytic gradient of additive_objective:
//   2 [ Q (W + D P_m) K_f K_f^T P_m^T - M_n K_f^T P_m^T + D P_m P_m^T ]
Matrix objective_gradient(const Matrix& d_tilde, const Matrix& w,
                          const KnowledgeSets& sets, const Matrix& p_m);

// Convex GD with backtracking; returns the best iterate. Non-convergence is
// a flagged result, not an error. `init` defaults to the zero matrix.
GdResult solve_gd(const Matrix& w, const KnowledgeSets& sets,
                  const Matrix& p_m, const GdConfig& cfg,
                  const std::optional<Matrix>& init = std::nullopt);

// w + d_tilde * p_m; preserves W K_0 exactly because P_m K_0 = 0.
Matrix apply_additive(const Matrix& w, const Matrix& d_tilde,
                      const Matrix& p_m);

}  // namespace zul
