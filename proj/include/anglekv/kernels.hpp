#pragma once

#include <cstdint>
#include <span>

#include "anglekv/angle_codec.hpp"
#include "anglekv/container.hpp"
#include "anglekv/norm_codec.hpp"

namespace anglekv {

// Codec parameters for every record of one (layer, side).
struct RecordLayout {
  AngleCodebook book;
  NormQuantSpec norm;
  std::uint32_t head_dim;
  std::uint64_t bytes;

  RecordLayout(std::uint32_t n, NormQuantSpec norm, std::uint32_t head_dim);
};

// One vector <-> one byte-aligned record. `out` must be zeroed and exactly
// layout.bytes long.
void encode_record(std::span<const float> x, const RecordLayout& layout, const SignDiagonal& diag,
                   std::span<std::uint8_t> out);
void decode_record(std::span<const std::uint8_t> in, const RecordLayout& layout,
                   const SignDiagonal& diag, std::span<float> out);

namespace kernels {

// Serial reference and OpenMP versions; outputs are bitwise identical.
void encode_payload_serial(const KvTensorSet& tensors, const BlobHeader& header,
                           const SignDiagonal& diag, std::span<std::uint8_t> payload);
void encode_payload_omp(const KvTensorSet& tensors, const BlobHeader& header,
                        const SignDiagonal& diag, std::span<std::uint8_t> payload);
void decode_payload_serial(std::span<const std::uint8_t> payload, const BlobHeader& header,
                           const SignDiagonal& diag, KvTensorSet& out);
void decode_payload_omp(std::span<const std::uint8_t> payload, const BlobHeader& header,
                        const SignDiagonal& diag, KvTensorSet& out);

// Quantize-dequantize of `count` contiguous vectors of length d. Used by the
// distortion sweeps.
void roundtrip_serial(std::span<const float> in, std::span<float> out, const RecordLayout& layout,
                      const SignDiagonal& diag);
void roundtrip_omp(std::span<const float> in, std::span<float> out, const RecordLayout& layout,
                   const SignDiagonal& diag);

}  // namespace kernels
}  // namespace anglekv
