#pragma once

#include <string>

namespace mdg {

/// Shortest decimal string that parses back to exactly `value` ('.' decimal
/// point, independent of locale). Non-finite values print as nan / inf / -inf.
std::string format_double(double value);

}  // namespace mdg
