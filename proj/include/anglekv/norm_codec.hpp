#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace anglekv {

enum class NormSpace : std::uint8_t { Linear, Log };

/// How the d/2 pair norms of one vector are stored.
struct NormQuantSpec {
  unsigned bits = 0;
  NormSpace space = NormSpace::Linear;
  bool fp32_passthrough = true;

  static NormQuantSpec fp32() { return {}; }
  static NormQuantSpec linear(unsigned bits) { return {bits, NormSpace::Linear, false}; }
  static NormQuantSpec log(unsigned bits) { return {bits, NormSpace::Log, false}; }

  void validate() const;
  // Storage cost per element: 16 for passthrough, b/2 + 64/d otherwise.
  double bits_per_element(std::size_t head_dim) const;

  friend bool operator==(const NormQuantSpec&, const NormQuantSpec&) = default;
};

std::string to_string(const NormQuantSpec& spec);

// Log-space clamp applied before ln.
inline constexpr double kLogEpsilon = 1e-12;

/// Per-vector min-max quantized norms. In log space r_min/r_max hold the
/// extrema of ln(r).
struct QuantizedNorms {
  float r_min = 0.0f;
  float r_max = 0.0f;
  std::vector<std::uint16_t> codes;
};

QuantizedNorms quantize_norms(std::span<const float> r, const NormQuantSpec& spec);
std::vector<float> dequantize_norms(const QuantizedNorms& q, const NormQuantSpec& spec);

enum class NormProfile { Fp32, Norm8, K8V4Log };

NormProfile parse_norm_profile(const std::string& name);
std::string to_string(NormProfile profile);

/// (K spec, V spec)
std::pair<NormQuantSpec, NormQuantSpec> kv_norm_profile(NormProfile profile);

}  // namespace anglekv
