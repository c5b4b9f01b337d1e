#include "anglekv/error.hpp"

namespace anglekv {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid dimension";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::NonFinite: return "non-finite input";
    case ErrorKind::CorruptData: return "corrupt data";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Io: return "I/O error";
  }
  return "unknown error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace anglekv
