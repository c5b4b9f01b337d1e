#include "anglekv/container.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "anglekv/error.hpp"
#include "anglekv/kernels.hpp"

namespace anglekv {

KvTensorSet::KvTensorSet(std::uint32_t layers, std::uint32_t heads, std::uint32_t tokens,
                         std::uint32_t head_dim)
    : layers_(layers), heads_(heads), tokens_(tokens), head_dim_(head_dim),
      data_(std::size_t{layers} * 2 * heads * tokens * head_dim, 0.0f) {}

std::span<float> KvTensorSet::vec(std::size_t index) {
  return std::span<float>(data_).subspan(index * head_dim_, head_dim_);
}

std::span<const float> KvTensorSet::vec(std::size_t index) const {
  return std::span<const float>(data_).subspan(index * head_dim_, head_dim_);
}

static std::size_t flat_index(std::uint32_t layer, Side side, std::uint32_t head,
                              std::uint32_t token, std::uint32_t heads, std::uint32_t tokens) {
  return ((std::size_t{layer} * 2 + static_cast<std::size_t>(side)) * heads + head) * tokens +
         token;
}

std::span<float> KvTensorSet::vec(std::uint32_t layer, Side side, std::uint32_t head,
                                  std::uint32_t token) {
  return vec(flat_index(layer, side, head, token, heads_, tokens_));
}

std::span<const float> KvTensorSet::vec(std::uint32_t layer, Side side, std::uint32_t head,
                                        std::uint32_t token) const {
  return vec(flat_index(layer, side, head, token, heads_, tokens_));
}

std::uint64_t BlobHeader::record_bytes(std::uint32_t layer, Side side) const {
  const auto& l = config.layers.at(layer);
  return side == Side::Key ? record_bits(l.nk, config.k_norm, shape.head_dim) / 8
                           : record_bits(l.nv, config.v_norm, shape.head_dim) / 8;
}

std::uint64_t BlobHeader::payload_bytes() const {
  std::uint64_t per_token = 0;
  for (std::uint32_t l = 0; l < shape.num_layers; ++l) {
    per_token += record_bytes(l, Side::Key) + record_bytes(l, Side::Value);
  }
  return per_token * shape.kv_heads * tokens;
}

std::uint64_t BlobHeader::record_offset(std::uint32_t layer, Side side, std::uint32_t head,
                                        std::uint32_t token) const {
  const std::uint64_t group_records = std::uint64_t{shape.kv_heads} * tokens;
  std::uint64_t at = 0;
  for (std::uint32_t l = 0; l < layer; ++l) {
    at += (record_bytes(l, Side::Key) + record_bytes(l, Side::Value)) * group_records;
  }
  if (side == Side::Value) at += record_bytes(layer, Side::Key) * group_records;
  return at + (std::uint64_t{head} * tokens + token) * record_bytes(layer, side);
}

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'K', 'V', 'C'};

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{in[at + i]} << (8 * i);
  return v;
}

std::uint8_t norm_mode(const NormQuantSpec& s) {
  if (s.fp32_passthrough) return 0;
  return s.space == NormSpace::Log ? 2 : 1;
}

NormQuantSpec norm_from_header(std::uint8_t mode, std::uint8_t bits) {
  NormQuantSpec s;
  switch (mode) {
    case 0:
      if (bits != 0) fail(ErrorKind::Format, "fp32 norm mode with nonzero bit width");
      return NormQuantSpec::fp32();
    case 1: s = NormQuantSpec::linear(bits); break;
    case 2: s = NormQuantSpec::log(bits); break;
    default: fail(ErrorKind::Format, "unknown norm mode " + std::to_string(mode));
  }
  if (bits < 1 || bits > 16) fail(ErrorKind::Format, "norm bit width out of range");
  return s;
}

void check_tensors(const KvTensorSet& t, const ModelShape& shape) {
  if (t.layers() != shape.num_layers || t.head_dim() != shape.head_dim ||
      t.heads() != shape.kv_heads) {
    fail(ErrorKind::DimensionMismatch,
         "tensor set is " + std::to_string(t.layers()) + " layers x " +
             std::to_string(t.heads()) + " heads x d=" + std::to_string(t.head_dim()) +
             ", model shape is " + std::to_string(shape.num_layers) + " x " +
             std::to_string(shape.kv_heads) + " x d=" + std::to_string(shape.head_dim));
  }
  for (const float v : t.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "tensor set contains non-finite values");
  }
}

}  // namespace

std::vector<std::uint8_t> CacheBlob::to_bytes() const {
  const auto& h = header;
  std::vector<std::uint8_t> out;
  out.reserve(h.byte_size() + payload.size());
  for (const auto b : kMagic) out.push_back(b);
  put(out, kFormatVersion, 2);
  put(out, 0, 2);
  put(out, h.shape.num_layers, 4);
  put(out, h.shape.head_dim, 4);
  put(out, h.shape.kv_heads, 4);
  put(out, h.tokens, 4);
  put(out, h.config.seed, 8);
  put(out, norm_mode(h.config.k_norm), 1);
  put(out, h.config.k_norm.fp32_passthrough ? 0 : h.config.k_norm.bits, 1);
  put(out, norm_mode(h.config.v_norm), 1);
  put(out, h.config.v_norm.fp32_passthrough ? 0 : h.config.v_norm.bits, 1);
  put(out, h.config.hash(), 8);
  for (const auto& l : h.config.layers) {
    put(out, l.nk, 4);
    put(out, l.nv, 4);
  }
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

CacheBlob CacheBlob::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeaderBytes) fail(ErrorKind::Format, "blob shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::Format, "bad magic");
  const auto version = get(bytes, 4, 2);
  if (version != kFormatVersion) {
    fail(ErrorKind::Format, "unsupported format version " + std::to_string(version));
  }
  if (get(bytes, 6, 2) != 0) fail(ErrorKind::Format, "reserved header bits set");

  CacheBlob blob;
  auto& h = blob.header;
  h.shape.num_layers = static_cast<std::uint32_t>(get(bytes, 8, 4));
  h.shape.head_dim = static_cast<std::uint32_t>(get(bytes, 12, 4));
  h.shape.kv_heads = static_cast<std::uint32_t>(get(bytes, 16, 4));
  h.tokens = static_cast<std::uint32_t>(get(bytes, 20, 4));
  h.config.seed = get(bytes, 24, 8);
  h.config.k_norm = norm_from_header(bytes[32], bytes[33]);
  h.config.v_norm = norm_from_header(bytes[34], bytes[35]);
  const std::uint64_t stored_hash = get(bytes, 36, 8);

  if (h.shape.num_layers == 0 || h.shape.num_layers > (1U << 20)) {
    fail(ErrorKind::Format, "implausible layer count");
  }
  if (bytes.size() < h.byte_size()) fail(ErrorKind::Format, "truncated layer table");
  for (std::uint32_t l = 0; l < h.shape.num_layers; ++l) {
    const std::size_t at = kFixedHeaderBytes + 8 * std::size_t{l};
    h.config.layers.push_back({static_cast<std::uint32_t>(get(bytes, at, 4)),
                               static_cast<std::uint32_t>(get(bytes, at + 4, 4))});
  }
  try {
    h.config.check_against(h.shape);
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("header: ") + e.what());
  }
  if (h.config.hash() != stored_hash) fail(ErrorKind::Format, "header config hash mismatch");

  const std::uint64_t expected = h.payload_bytes();
  const std::uint64_t actual = bytes.size() - h.byte_size();
  if (actual < expected) fail(ErrorKind::Format, "truncated payload");
  if (actual > expected) fail(ErrorKind::Format, "trailing bytes after payload");
  blob.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.byte_size()), bytes.end());
  return blob;
}

CacheBlob encode_cache(const KvTensorSet& tensors, const LayerQuantConfig& config,
                       const ModelShape& shape, Exec exec) {
  config.check_against(shape);
  check_tensors(tensors, shape);

  CacheBlob blob;
  blob.header.shape = shape;
  blob.header.tokens = tensors.tokens();
  blob.header.config = config;
  blob.payload.assign(blob.header.payload_bytes(), 0);

  const auto diag = SignDiagonal::sample(config.seed, shape.head_dim);
  if (exec == Exec::Parallel) {
    kernels::encode_payload_omp(tensors, blob.header, diag, blob.payload);
  } else {
    kernels::encode_payload_serial(tensors, blob.header, diag, blob.payload);
  }
  return blob;
}

KvTensorSet decode_cache(const CacheBlob& blob, Exec exec) {
  const auto& h = blob.header;
  h.config.check_against(h.shape);
  if (blob.payload.size() != h.payload_bytes()) fail(ErrorKind::Format, "payload size mismatch");

  KvTensorSet out(h.shape.num_layers, h.shape.kv_heads, h.tokens, h.shape.head_dim);
  const auto diag = SignDiagonal::sample(h.config.seed, h.shape.head_dim);
  if (exec == Exec::Parallel) {
    kernels::decode_payload_omp(blob.payload, h, diag, out);
  } else {
    kernels::decode_payload_serial(blob.payload, h, diag, out);
  }
  return out;
}

MeasuredRate measured_rate(const CacheBlob& blob) {
  MeasuredRate m;
  m.payload_bits = blob.payload.size() * 8ULL;
  m.header_bits = blob.header.byte_size() * 8ULL;
  m.elements = std::uint64_t{blob.header.shape.num_layers} * 2 * blob.header.shape.kv_heads *
               blob.header.tokens * blob.header.shape.head_dim;
  if (m.elements > 0) m.bits_per_element = static_cast<double>(m.payload_bits) / m.elements;
  return m;
}

void check_seed(const CacheBlob& blob, std::uint64_t seed) {
  if (blob.header.config.seed != seed) {
    fail(ErrorKind::InvalidArgument, "blob was encoded with seed " +
                                         std::to_string(blob.header.config.seed) +
                                         ", not " + std::to_string(seed));
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

}  // namespace anglekv
