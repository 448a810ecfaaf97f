#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace actforge::text {

/// Lowercase, trim, and collapse internal whitespace runs to one space.
/// No punctuation is touched. Used on both sides of every action comparison.
std::string normalize(std::string_view s);

/// Splits a normalized string into tokens on spaces and the bracket/comma
/// punctuation used by ShopSim actions ("search[red shirt]" -> search, red,
/// shirt).
std::vector<std::string> tokenize(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace actforge::text
