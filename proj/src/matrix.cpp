#include "zul/matrix.hpp"

#include <cmath>
#include <sstream>

#include "zul/errors.hpp"

namespace zul {

bool all_finite(const Matrix& m) {
  return m.allFinite();
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    std::ostringstream msg;
    msg << what << ": non-finite entry in " << m.rows() << "x" << m.cols()
        << " matrix";
    throw NumericalError(msg.str());
  }
}

}  // namespace zul
