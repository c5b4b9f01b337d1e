#pragma once

#include <stdexcept>
#include <string>

namespace anglekv {

enum class ErrorKind {
  InvalidDimension,
  DimensionMismatch,
  InvalidArgument,
  NonFinite,
  CorruptData,
  Format,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace anglekv
