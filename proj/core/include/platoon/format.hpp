#pragma once

#include <string>

namespace platoon {

/// Shortest decimal representation that parses back to the same double
/// (to_chars round-trip); "inf"/"-inf" for infinities.
std::string format_double(double x);

}  // namespace platoon
