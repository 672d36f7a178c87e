#pragma once

#include <Eigen/Dense>

namespace zul {

// Universal numeric carrier: dense 2-D array of 64-bit floats.
// Zero-dimension matrices are legal in-process (empty forget sets produce
// 0-column K_f/M_f/M_n).
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

bool all_finite(const Matrix& m);

// Throws NumericalError naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& m, const char* what);

inline double frob(const Matrix& m) { return m.norm(); }

}  // namespace zul
