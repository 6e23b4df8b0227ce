#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace nfb::csv {

/// Nine significant digits, "%.9g".
std::string number(double v);

/// Writes one record; fields are already formatted and contain no separators.
void row(std::ostream& os, std::initializer_list<std::string_view> fields);

} // namespace nfb::csv
