#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anglekv/layer_policy.hpp"

namespace anglekv {

enum class Side : std::uint8_t { Key = 0, Value = 1 };

/// Dense KV cache laid out as [layer][side][head][token][dim], float32.
class KvTensorSet {
 public:
  KvTensorSet() = default;
  KvTensorSet(std::uint32_t layers, std::uint32_t heads, std::uint32_t tokens,
              std::uint32_t head_dim);

  std::uint32_t layers() const noexcept { return layers_; }
  std::uint32_t heads() const noexcept { return heads_; }
  std::uint32_t tokens() const noexcept { return tokens_; }
  std::uint32_t head_dim() const noexcept { return head_dim_; }
  std::size_t vector_count() const noexcept {
    return std::size_t{layers_} * 2 * heads_ * tokens_;
  }

  std::span<float> vec(std::uint32_t layer, Side side, std::uint32_t head, std::uint32_t token);
  std::span<const float> vec(std::uint32_t layer, Side side, std::uint32_t head,
                             std::uint32_t token) const;
  // Flat vector index in layout order.
  std::span<float> vec(std::size_t index);
  std::span<const float> vec(std::size_t index) const;

  std::vector<float>& data() noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  friend bool operator==(const KvTensorSet&, const KvTensorSet&) = default;

 private:
  std::uint32_t layers_ = 0;
  std::uint32_t heads_ = 0;
  std::uint32_t tokens_ = 0;
  std::uint32_t head_dim_ = 0;
  std::vector<float> data_;
};

enum class Exec { Serial, Parallel };

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kFixedHeaderBytes = 44;

struct BlobHeader {
  ModelShape shape;  // kv_heads is the stored head count
  std::uint32_t tokens = 0;
  LayerQuantConfig config;  // carries the rotation seed

  std::size_t byte_size() const noexcept { return kFixedHeaderBytes + 8 * config.layers.size(); }
  std::uint64_t record_bytes(std::uint32_t layer, Side side) const;
  std::uint64_t payload_bytes() const;
  std::uint64_t record_offset(std::uint32_t layer, Side side, std::uint32_t head,
                              std::uint32_t token) const;
};

struct CacheBlob {
  BlobHeader header;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> to_bytes() const;
  static CacheBlob from_bytes(std::span<const std::uint8_t> bytes);
};

/// Payload bits per cached element, header reported separately.
struct MeasuredRate {
  std::uint64_t payload_bits = 0;
  std::uint64_t header_bits = 0;
  std::uint64_t elements = 0;
  double bits_per_element = 0.0;  // 0 for an empty cache
};

CacheBlob encode_cache(const KvTensorSet& tensors, const LayerQuantConfig& config,
                       const ModelShape& shape, Exec exec = Exec::Parallel);
KvTensorSet decode_cache(const CacheBlob& blob, Exec exec = Exec::Parallel);
MeasuredRate measured_rate(const CacheBlob& blob);

// Throws InvalidArgument when the blob was written with a different seed.
void check_seed(const CacheBlob& blob, std::uint64_t seed);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace anglekv
