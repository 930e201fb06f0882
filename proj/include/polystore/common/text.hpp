#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace polystore::text {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool is_ident_start(char c);
bool is_ident_char(char c);
bool is_identifier(std::string_view s);

/// Single-quote `s`, doubling embedded quotes.
std::string quote(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace polystore::text
