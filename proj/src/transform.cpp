#include "anglekv/transform.hpp"

#include <cmath>
#include <string>

#include "anglekv/error.hpp"

namespace anglekv {

void check_head_dim(std::size_t dim) {
  if (dim < 2 || !is_power_of_two(dim)) {
    fail(ErrorKind::InvalidDimension,
         "head dimension " + std::to_string(dim) + " is not a power of two >= 2");
  }
}

SignDiagonal SignDiagonal::sample(std::uint64_t seed, std::size_t dim) {
  check_head_dim(dim);
  SplitMix64 rng(seed);
  std::vector<float> signs(dim);
  for (auto& s : signs) s = (rng.next() & 1U) ? 1.0f : -1.0f;
  return SignDiagonal(seed, std::move(signs));
}

SignDiagonal SignDiagonal::identity(std::size_t dim) {
  check_head_dim(dim);
  return SignDiagonal(0, std::vector<float>(dim, 1.0f));
}

void fwht_inplace(std::span<float> v) {
  const std::size_t n = v.size();
  check_head_dim(n);
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const float a = v[j];
        const float b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
  const float scale = 1.0f / std::sqrt(static_cast<float>(n));
  for (auto& x : v) x *= scale;
}

std::vector<float> fwht(std::span<const float> v) {
  std::vector<float> out(v.begin(), v.end());
  fwht_inplace(out);
  return out;
}

static void check_match(std::size_t got, const SignDiagonal& diag) {
  if (got != diag.dim()) {
    fail(ErrorKind::DimensionMismatch, "vector has " + std::to_string(got) +
                                           " elements, diagonal has " +
                                           std::to_string(diag.dim()));
  }
}

void rotate_forward_inplace(std::span<float> x, const SignDiagonal& diag) {
  check_match(x.size(), diag);
  const auto s = diag.signs();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s[i];
  fwht_inplace(x);
}

std::vector<float> rotate_forward(std::span<const float> x, const SignDiagonal& diag) {
  std::vector<float> out(x.begin(), x.end());
  rotate_forward_inplace(out, diag);
  return out;
}

void rotate_inverse_inplace(std::span<float> y, const SignDiagonal& diag) {
  check_match(y.size(), diag);
  fwht_inplace(y);
  const auto s = diag.signs();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= s[i];
}

std::vector<float> rotate_inverse(std::span<const float> y, const SignDiagonal& diag) {
  std::vector<float> out(y.begin(), y.end());
  rotate_inverse_inplace(out, diag);
  return out;
}

}  // namespace anglekv
