#include "zul/rng.hpp"

#include <cmath>
#include <cstring>

namespace zul {

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index) {
  std::uint64_t h = fnv1a64(&seed, sizeof(seed));
  h ^= fnv1a64(tag);
  h *= 0x100000001b3ull;
  h ^= fnv1a64(&index, sizeof(index));
  h *= 0x100000001b3ull;
  // Zero would make mt19937_64 use its default seed; avoid the collision.
  return h == 0 ? 0x9e3779b97f4a7c15ull : h;
}

double RngStream::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
  // Box-Muller, cosine branch only; u1 shifted into (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

Vector RngStream::gaussian_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = gaussian();
  return v;
}

Matrix RngStream::gaussian_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gaussian();
  return m;
}

Vector RngStream::unit_vector(Index n) {
  Vector v = gaussian_vector(n);
  double norm = v.norm();
  while (norm < 1e-12) {  // astronomically unlikely; redraw keeps the contract
    v = gaussian_vector(n);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace zul
