#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "anglekv/transform.hpp"

namespace anglekv {

/// Uniform grid of n angles on the circle, codeword k at 2*pi*k/n.
class AngleCodebook {
 public:
  static constexpr std::uint64_t kMaxBins = std::uint64_t{1} << 31;

  explicit AngleCodebook(std::uint64_t n);

  std::uint32_t size() const noexcept { return n_; }
  // Fixed packing width, ceil(log2 n).
  unsigned index_bits() const noexcept;
  // Nearest codeword, round-half-up on the bin coordinate then mod n.
  std::uint32_t quantize(double theta) const noexcept;
  // (cos, sin) of codeword k; exact at quarter turns.
  std::pair<double, double> codeword(std::uint32_t k) const noexcept;

 private:
  std::uint32_t n_;
};

struct PolarPair {
  float r = 0.0f;
  std::uint32_t k = 0;
};

struct EncodedVector {
  std::uint32_t n = 0;
  std::vector<PolarPair> pairs;

  std::size_t dim() const noexcept { return 2 * pairs.size(); }
};

// atan2 remapped to [0, 2*pi); atan2(0, 0) = 0.
double pair_angle(float even, float odd) noexcept;

EncodedVector encode_rotated(std::span<const float> y, const AngleCodebook& book);
std::vector<float> decode_rotated(const EncodedVector& e);

EncodedVector encode(std::span<const float> x, const SignDiagonal& diag,
                     const AngleCodebook& book);
std::vector<float> decode(const EncodedVector& e, const SignDiagonal& diag);

/// Theoretical angular rate, log2(n)/2 bits per element.
double angle_bits(const AngleCodebook& book);

}  // namespace anglekv
