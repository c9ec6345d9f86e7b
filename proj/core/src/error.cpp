#include "volkey/error.hpp"

namespace volkey {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io error";
    case ErrorKind::format: return "format error";
    case ErrorKind::data: return "data error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::size: return "size error";
    case ErrorKind::empty_histogram: return "empty histogram";
    case ErrorKind::no_consensus: return "no consensus";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace volkey
