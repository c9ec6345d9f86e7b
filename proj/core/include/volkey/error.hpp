#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace volkey {

enum class ErrorKind {
  io,
  format,
  data,
  parameter,
  size,
  empty_histogram,
  no_consensus,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace volkey
