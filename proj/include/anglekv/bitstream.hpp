#pragma once

#include <cstdint>
#include <span>

namespace anglekv {

// LSB-first bit writer into a caller-sized, zero-initialized buffer. Bit i of
// the stream is bit (i % 8) of byte i / 8, which is the same as packing
// LSB-first into little-endian words of any width.
class BitWriter {
 public:
  explicit BitWriter(std::span<std::uint8_t> out) : out_(out) {}

  void write(std::uint64_t value, unsigned width);
  void write_f32(float value);

  std::uint64_t bit_position() const noexcept { return pos_; }

 private:
  std::span<std::uint8_t> out_;
  std::uint64_t pos_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t read(unsigned width);
  float read_f32();

  std::uint64_t bit_position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::uint64_t pos_ = 0;
};

}  // namespace anglekv
