#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace anglekv {

// SplitMix64 stream used for the sign diagonal. Sign i is +1 when the low bit
// of the (i+1)-th output is set, -1 otherwise.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Random +/-1 diagonal shared by every layer, head and token of a cache.
/// Immutable once constructed; a pure function of (seed, dim).
class SignDiagonal {
 public:
  static SignDiagonal sample(std::uint64_t seed, std::size_t dim);
  static SignDiagonal identity(std::size_t dim);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return signs_.size(); }
  std::span<const float> signs() const noexcept { return signs_; }

 private:
  SignDiagonal(std::uint64_t seed, std::vector<float> signs)
      : seed_(seed), signs_(std::move(signs)) {}

  std::uint64_t seed_;
  std::vector<float> signs_;
};

inline SignDiagonal sample_diagonal(std::uint64_t seed, std::size_t dim) {
  return SignDiagonal::sample(seed, dim);
}

// Throws InvalidDimension unless dim >= 2 and a power of two.
void check_head_dim(std::size_t dim);

/// Normalized Walsh-Hadamard transform, in place. Unnormalized butterflies
/// followed by one multiply by 1/sqrt(d).
void fwht_inplace(std::span<float> v);
std::vector<float> fwht(std::span<const float> v);

/// y = H D x
void rotate_forward_inplace(std::span<float> x, const SignDiagonal& diag);
std::vector<float> rotate_forward(std::span<const float> x, const SignDiagonal& diag);

/// x = D H y
void rotate_inverse_inplace(std::span<float> y, const SignDiagonal& diag);
std::vector<float> rotate_inverse(std::span<const float> y, const SignDiagonal& diag);

}  // namespace anglekv
