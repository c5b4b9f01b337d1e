#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "anglekv/container.hpp"

namespace fixtures {

// Hex of the one-token golden blob, from tests/oracles/golden_blob.py.
inline const std::string kGoldenHex =
    "414b564301000000010000000400000001000000010000002a00000000000000"
    "000000008e57b8fd6be3e2640400000004000000000000402b2ba3400220a309"
    "40c2624a3f01";

inline std::vector<std::uint8_t> from_hex(const std::string& hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

inline anglekv::KvTensorSet golden_tensors() {
  anglekv::KvTensorSet t(1, 1, 1, 4);
  const float k[] = {1, 2, 3, 4};
  const float v[] = {0.5F, -1, 0, 2};
  std::copy(std::begin(k), std::end(k), t.vec(0, anglekv::Side::Key, 0, 0).begin());
  std::copy(std::begin(v), std::end(v), t.vec(0, anglekv::Side::Value, 0, 0).begin());
  return t;
}

inline anglekv::LayerQuantConfig golden_config() {
  return anglekv::LayerQuantConfig::uniform(1, {4, 4});
}

inline anglekv::KvTensorSet gaussian_tensors(std::uint32_t layers, std::uint32_t heads,
                                             std::uint32_t tokens, std::uint32_t d,
                                             std::uint64_t seed) {
  anglekv::KvTensorSet t(layers, heads, tokens, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0F, 1.0F);
  for (auto& v : t.data()) v = g(rng);
  return t;
}

}  // namespace fixtures
