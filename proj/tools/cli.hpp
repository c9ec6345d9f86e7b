#pragma once

#include <iosfwd>

#include "volkey/error.hpp"

namespace volkey::cli {

enum ExitCode : int {
  ok = 0,
  failure = 1,
  io_error = 2,
  format_error = 3,
  data_error = 4,
  parameter_error = 5,
  size_error = 6,
  no_consensus = 7,
};

int exit_code(ErrorKind kind);

/// Entry point behind the `volkey` executable; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace volkey::cli
