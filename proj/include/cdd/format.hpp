#pragma once

#include <string>

namespace cdd {

/// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace cdd
