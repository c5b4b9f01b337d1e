#pragma once

#include <iosfwd>

namespace anglekv::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kValidation = 5,
};

// Entry point behind the `anglekv` binary; tests call it directly.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anglekv::cli
