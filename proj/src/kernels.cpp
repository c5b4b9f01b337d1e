#include "anglekv/kernels.hpp"

#include <exception>
#include <mutex>
#include <vector>

#include "anglekv/bitstream.hpp"
#include "anglekv/error.hpp"

namespace anglekv {

RecordLayout::RecordLayout(std::uint32_t n, NormQuantSpec norm_spec, std::uint32_t dim)
    : book(n), norm(norm_spec), head_dim(dim), bytes(record_bits(n, norm_spec, dim) / 8) {}

void encode_record(std::span<const float> x, const RecordLayout& layout, const SignDiagonal& diag,
                   std::span<std::uint8_t> out) {
  if (out.size() != layout.bytes) fail(ErrorKind::InvalidArgument, "record buffer size");
  std::vector<float> y(x.begin(), x.end());
  rotate_forward_inplace(y, diag);
  const EncodedVector enc = encode_rotated(y, layout.book);

  BitWriter w(out);
  if (layout.norm.fp32_passthrough) {
    for (const auto& p : enc.pairs) w.write_f32(p.r);
  } else {
    std::vector<float> r(enc.pairs.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = enc.pairs[i].r;
    const QuantizedNorms q = quantize_norms(r, layout.norm);
    w.write_f32(q.r_min);
    w.write_f32(q.r_max);
    for (const auto c : q.codes) w.write(c, layout.norm.bits);
  }
  const unsigned width = layout.book.index_bits();
  for (const auto& p : enc.pairs) w.write(p.k, width);
}

void decode_record(std::span<const std::uint8_t> in, const RecordLayout& layout,
                   const SignDiagonal& diag, std::span<float> out) {
  if (in.size() != layout.bytes) fail(ErrorKind::Format, "record size mismatch");
  const std::size_t pairs = layout.head_dim / 2;
  BitReader rd(in);

  EncodedVector enc;
  enc.n = layout.book.size();
  enc.pairs.resize(pairs);
  if (layout.norm.fp32_passthrough) {
    for (auto& p : enc.pairs) p.r = rd.read_f32();
  } else {
    QuantizedNorms q;
    q.r_min = rd.read_f32();
    q.r_max = rd.read_f32();
    q.codes.resize(pairs);
    for (auto& c : q.codes) c = static_cast<std::uint16_t>(rd.read(layout.norm.bits));
    const auto r = dequantize_norms(q, layout.norm);
    for (std::size_t i = 0; i < pairs; ++i) enc.pairs[i].r = r[i];
  }
  const unsigned width = layout.book.index_bits();
  for (auto& p : enc.pairs) p.k = static_cast<std::uint32_t>(rd.read(width));

  const auto x = decode(enc, diag);
  std::copy(x.begin(), x.end(), out.begin());
}

namespace kernels {
namespace {

// First exception thrown inside a parallel region, rethrown afterwards.
class ErrorSlot {
 public:
  void capture() {
    std::lock_guard lock(mu_);
    if (!err_) err_ = std::current_exception();
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr err_;
};

struct PayloadPlan {
  std::vector<RecordLayout> layouts;  // index 2 * layer + side
  std::uint64_t records_per_group;

  explicit PayloadPlan(const BlobHeader& h)
      : records_per_group(std::uint64_t{h.shape.kv_heads} * h.tokens) {
    for (std::uint32_t l = 0; l < h.shape.num_layers; ++l) {
      layouts.emplace_back(h.config.layers[l].nk, h.config.k_norm, h.shape.head_dim);
      layouts.emplace_back(h.config.layers[l].nv, h.config.v_norm, h.shape.head_dim);
    }
  }

  std::uint64_t record_count() const { return layouts.size() * records_per_group; }
};

// Records are laid out in the same order as tensor vectors, so record i
// belongs to vector i and group i / records_per_group.
std::vector<std::uint64_t> record_offsets(const PayloadPlan& plan) {
  std::vector<std::uint64_t> offsets(plan.layouts.size());
  std::uint64_t at = 0;
  for (std::size_t g = 0; g < plan.layouts.size(); ++g) {
    offsets[g] = at;
    at += plan.layouts[g].bytes * plan.records_per_group;
  }
  return offsets;
}

void encode_one(const KvTensorSet& tensors, const PayloadPlan& plan,
                const std::vector<std::uint64_t>& offsets, const SignDiagonal& diag,
                std::span<std::uint8_t> payload, std::uint64_t i) {
  const std::uint64_t g = i / plan.records_per_group;
  const std::uint64_t j = i % plan.records_per_group;
  const auto& layout = plan.layouts[g];
  encode_record(tensors.vec(i), layout, diag,
                payload.subspan(offsets[g] + j * layout.bytes, layout.bytes));
}

void decode_one(std::span<const std::uint8_t> payload, const PayloadPlan& plan,
                const std::vector<std::uint64_t>& offsets, const SignDiagonal& diag,
                KvTensorSet& out, std::uint64_t i) {
  const std::uint64_t g = i / plan.records_per_group;
  const std::uint64_t j = i % plan.records_per_group;
  const auto& layout = plan.layouts[g];
  decode_record(payload.subspan(offsets[g] + j * layout.bytes, layout.bytes), layout, diag,
                out.vec(i));
}

}  // namespace

void encode_payload_serial(const KvTensorSet& tensors, const BlobHeader& header,
                           const SignDiagonal& diag, std::span<std::uint8_t> payload) {
  const PayloadPlan plan(header);
  const auto offsets = record_offsets(plan);
  for (std::uint64_t i = 0; i < plan.record_count(); ++i) {
    encode_one(tensors, plan, offsets, diag, payload, i);
  }
}

void encode_payload_omp(const KvTensorSet& tensors, const BlobHeader& header,
                        const SignDiagonal& diag, std::span<std::uint8_t> payload) {
  const PayloadPlan plan(header);
  const auto offsets = record_offsets(plan);
  const auto count = static_cast<std::int64_t>(plan.record_count());
  ErrorSlot err;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      encode_one(tensors, plan, offsets, diag, payload, static_cast<std::uint64_t>(i));
    } catch (...) {
      err.capture();
    }
  }
  err.rethrow();
}

void decode_payload_serial(std::span<const std::uint8_t> payload, const BlobHeader& header,
                           const SignDiagonal& diag, KvTensorSet& out) {
  const PayloadPlan plan(header);
  const auto offsets = record_offsets(plan);
  for (std::uint64_t i = 0; i < plan.record_count(); ++i) {
    decode_one(payload, plan, offsets, diag, out, i);
  }
}

void decode_payload_omp(std::span<const std::uint8_t> payload, const BlobHeader& header,
                        const SignDiagonal& diag, KvTensorSet& out) {
  const PayloadPlan plan(header);
  const auto offsets = record_offsets(plan);
  const auto count = static_cast<std::int64_t>(plan.record_count());
  ErrorSlot err;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      decode_one(payload, plan, offsets, diag, out, static_cast<std::uint64_t>(i));
    } catch (...) {
      err.capture();
    }
  }
  err.rethrow();
}

namespace {

void roundtrip_one(std::span<const float> in, std::span<float> out, const RecordLayout& layout,
                   const SignDiagonal& diag, std::vector<std::uint8_t>& scratch) {
  scratch.assign(layout.bytes, 0);
  encode_record(in, layout, diag, scratch);
  decode_record(scratch, layout, diag, out);
}

void check_batch(std::span<const float> in, std::span<float> out, const RecordLayout& layout) {
  if (in.size() != out.size() || in.size() % layout.head_dim != 0) {
    fail(ErrorKind::DimensionMismatch, "batch buffers do not hold whole vectors");
  }
}

}  // namespace

void roundtrip_serial(std::span<const float> in, std::span<float> out, const RecordLayout& layout,
                      const SignDiagonal& diag) {
  check_batch(in, out, layout);
  const std::size_t d = layout.head_dim;
  std::vector<std::uint8_t> scratch;
  for (std::size_t v = 0; v < in.size() / d; ++v) {
    roundtrip_one(in.subspan(v * d, d), out.subspan(v * d, d), layout, diag, scratch);
  }
}

void roundtrip_omp(std::span<const float> in, std::span<float> out, const RecordLayout& layout,
                   const SignDiagonal& diag) {
  check_batch(in, out, layout);
  const std::size_t d = layout.head_dim;
  const auto count = static_cast<std::int64_t>(in.size() / d);
  ErrorSlot err;
#pragma omp parallel
  {
    std::vector<std::uint8_t> scratch;
#pragma omp for schedule(static)
    for (std::int64_t v = 0; v < count; ++v) {
      try {
        const auto off = static_cast<std::size_t>(v) * d;
        roundtrip_one(in.subspan(off, d), out.subspan(off, d), layout, diag, scratch);
      } catch (...) {
        err.capture();
      }
    }
  }
  err.rethrow();
}

}  // namespace kernels
}  // namespace anglekv
