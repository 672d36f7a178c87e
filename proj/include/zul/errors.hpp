#pragma once

#include <stdexcept>
#include <string>

namespace zul {

// Bad caller input: config fields, dimension mismatches, malformed files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A factorization or solve failed beyond recovery (non-finite output,
// residual above tolerance after the ridge fallback, SVD non-convergence).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Instance exceeds a hard complexity cap (dense Kronecker path).
class ComplexityLimitError : public NumericalError {
 public:
  explicit ComplexityLimitError(const std::string& msg) : NumericalError(msg) {}
};

// Filesystem trouble; message carries the offending path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace zul
