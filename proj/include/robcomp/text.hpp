#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace robcomp {

// Shortest text that reads back to the same double; locale-independent.
std::string format_number(double v);

// Whole-token parse with std::from_chars; nullopt on any junk or non-finite value.
std::optional<double> parse_number(std::string_view text);

}  // namespace robcomp
