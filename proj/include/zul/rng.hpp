#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "zul/matrix.hpp"

namespace zul {

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64(std::string_view s);

// Mixes (seed, tag, index) into a fresh 64-bit seed. Tags keep independent
// draws ("keys", "vocab", "utility", "neutral", "prefix", "paraphrase",
// "eval-eff") on decorrelated streams without any global RNG state.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index = 0);

// Deterministic random stream. Gaussians come from a hand-rolled Box-Muller
// over mt19937_64 uniforms so outputs do not depend on the standard library's
// distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}
  RngStream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
      : gen_(derive_seed(seed, tag, index)) {}

  std::uint64_t next_u64() { return gen_(); }
  double uniform();   // [0, 1)
  double gaussian();  // standard normal

  Vector gaussian_vector(Index n);
  Matrix gaussian_matrix(Index rows, Index cols);  // row-major fill order
  Vector unit_vector(Index n);                     // gaussian, normalized

 private:
  std::mt19937_64 gen_;
};

}  // namespace zul
