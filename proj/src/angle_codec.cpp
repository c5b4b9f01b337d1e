#include "anglekv/angle_codec.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "anglekv/error.hpp"

namespace anglekv {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

AngleCodebook::AngleCodebook(std::uint64_t n) : n_(0) {
  if (n < 2 || n > kMaxBins) {
    fail(ErrorKind::InvalidArgument, "angle codebook size " + std::to_string(n) +
                                         " outside [2, 2^31]");
  }
  n_ = static_cast<std::uint32_t>(n);
}

unsigned AngleCodebook::index_bits() const noexcept {
  return static_cast<unsigned>(std::bit_width(n_ - 1));
}

std::uint32_t AngleCodebook::quantize(double theta) const noexcept {
  const double bin = std::floor(static_cast<double>(n_) * theta / kTwoPi + 0.5);
  return static_cast<std::uint32_t>(static_cast<std::uint64_t>(bin) % n_);
}

std::pair<double, double> AngleCodebook::codeword(std::uint32_t k) const noexcept {
  const std::uint64_t quarter = std::uint64_t{4} * k;
  if (quarter % n_ == 0) {
    switch (quarter / n_) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double phi = kTwoPi * static_cast<double>(k) / static_cast<double>(n_);
  return {std::cos(phi), std::sin(phi)};
}

double pair_angle(float even, float odd) noexcept {
  double theta = std::atan2(static_cast<double>(odd), static_cast<double>(even));
  if (theta < 0.0) theta += kTwoPi;
  return theta;
}

EncodedVector encode_rotated(std::span<const float> y, const AngleCodebook& book) {
  if (y.empty() || y.size() % 2 != 0) {
    fail(ErrorKind::InvalidDimension, "rotated vector length " + std::to_string(y.size()) +
                                          " is not a positive even number");
  }
  EncodedVector out;
  out.n = book.size();
  out.pairs.resize(y.size() / 2);
  for (std::size_t i = 0; i < out.pairs.size(); ++i) {
    const float a = y[2 * i];
    const float b = y[2 * i + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) {
      fail(ErrorKind::NonFinite, "pair " + std::to_string(i) + " is not finite");
    }
    const double da = a;
    const double db = b;
    out.pairs[i].r = static_cast<float>(std::sqrt(da * da + db * db));
    out.pairs[i].k = book.quantize(pair_angle(a, b));
  }
  return out;
}

std::vector<float> decode_rotated(const EncodedVector& e) {
  const AngleCodebook book(e.n);
  std::vector<float> y(e.dim());
  for (std::size_t i = 0; i < e.pairs.size(); ++i) {
    const auto& p = e.pairs[i];
    if (p.k >= e.n) {
      fail(ErrorKind::CorruptData, "angle index " + std::to_string(p.k) +
                                       " out of range for n = " + std::to_string(e.n));
    }
    if (!(p.r >= 0.0f) || !std::isfinite(p.r)) {
      fail(ErrorKind::CorruptData, "pair norm is negative or not finite");
    }
    const auto [c, s] = book.codeword(p.k);
    y[2 * i] = static_cast<float>(p.r * c);
    y[2 * i + 1] = static_cast<float>(p.r * s);
  }
  return y;
}

EncodedVector encode(std::span<const float> x, const SignDiagonal& diag,
                     const AngleCodebook& book) {
  return encode_rotated(rotate_forward(x, diag), book);
}

std::vector<float> decode(const EncodedVector& e, const SignDiagonal& diag) {
  if (e.dim() != diag.dim()) {
    fail(ErrorKind::DimensionMismatch, "encoded vector has dimension " +
                                           std::to_string(e.dim()) + ", diagonal has " +
                                           std::to_string(diag.dim()));
  }
  auto y = decode_rotated(e);
  rotate_inverse_inplace(y, diag);
  return y;
}

double angle_bits(const AngleCodebook& book) {
  return std::log2(static_cast<double>(book.size())) / 2.0;
}

}  // namespace anglekv
