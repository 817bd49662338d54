#include "cdd/format.hpp"

#include <charconv>

namespace cdd {

std::string format_double(double value) {
  // shortest text that parses back to the same double
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, result.ptr};
}

}  // namespace cdd
