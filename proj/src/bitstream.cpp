#include "anglekv/bitstream.hpp"

#include <algorithm>
#include <bit>

#include "anglekv/error.hpp"

namespace anglekv {

void BitWriter::write(std::uint64_t value, unsigned width) {
  if (width > 64 || pos_ + width > out_.size() * 8ULL) {
    fail(ErrorKind::InvalidArgument, "bit writer overflow");
  }
  if (width < 64) value &= (std::uint64_t{1} << width) - 1;
  while (width > 0) {
    const unsigned offset = pos_ % 8;
    const unsigned take = std::min(width, 8U - offset);
    out_[pos_ / 8] |= static_cast<std::uint8_t>((value & ((1U << take) - 1)) << offset);
    value >>= take;
    width -= take;
    pos_ += take;
  }
}

void BitWriter::write_f32(float value) { write(std::bit_cast<std::uint32_t>(value), 32); }

std::uint64_t BitReader::read(unsigned width) {
  if (width > 64 || pos_ + width > in_.size() * 8ULL) {
    fail(ErrorKind::Format, "truncated bitstream");
  }
  std::uint64_t value = 0;
  unsigned got = 0;
  while (got < width) {
    const unsigned offset = pos_ % 8;
    const unsigned take = std::min(width - got, 8U - offset);
    const std::uint64_t bits = (in_[pos_ / 8] >> offset) & ((1U << take) - 1);
    value |= bits << got;
    got += take;
    pos_ += take;
  }
  return value;
}

float BitReader::read_f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(read(32))); }

}  // namespace anglekv
