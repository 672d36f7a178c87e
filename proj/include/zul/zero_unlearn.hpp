#pragma once

#include <string>

#include "zul/fact_store.hpp"
#include "zul/matrix.hpp"

namespace zul {

// Squared Frobenius norms of the four objective terms.
struct ObjectiveTerms {
  double zero = 0.0;     // ||M_f^T (W_eff K_f)||^2
  double forget = 0.0;   // ||W_eff K_f - M_n||^2
  double utility = 0.0;  // ||W_eff K_0 - M_0||^2
  double reg = 0.0;      // ||W_eff - W_orig||^2

  double total() const { return zero + forget + utility + reg; }
};

struct EditReport {
  std::string method;
  ObjectiveTerms before;
  ObjectiveTerms after;
  Index projector_rank = 0;
  double stationarity_residual = 0.0;
  double wall_time_seconds = 0.0;

  // Iterative solvers only.
  bool has_gd_stats = false;
  int iters = 0;
  double final_grad_norm = 0.0;
  bool converged = true;
};

ObjectiveTerms objective_terms(const Matrix& w_eff, const Matrix& w_orig,
                               const KnowledgeSets& sets);

struct ClosedFormResult {
  Matrix d_star;
  Matrix w_new;
  EditReport report;
};

// Multiplicative closed form: P from the row-null projector of M_f^T,
// D* = P (A + W) W^T (W (B + I) W^T)^-1 with A = M_n K_f^T + M_0 K_0^T and
// B = K_f K_f^T + K_0 K_0^T, then W <- D* W. `ridge` is the relative ridge
// scale (absolute term ridge * trace(S) / dim applied only on fallback).
// An empty forget set uses P = I and reduces to a pure preservation solve.
ClosedFormResult closed_form_update(const Matrix& w, const KnowledgeSets& sets,
                                    double rel_tol, double ridge);

// Frobenius norm of
//   P [ (D W K_f - M_n)(W K_f)^T + (D W K_0 - M_0)(W K_0)^T + (D W - W) W^T ]
// normalized by the scale of its constant part. Closed-form outputs satisfy
// this to ~1e-8 relative.
double stationarity_residual(const Matrix& d_star, const Matrix& w,
                             const KnowledgeSets& sets,
                             double rel_tol = 1e-10);

}  // namespace zul
