#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "polystore/relational/relation.hpp"

namespace polystore::rel {

/// Parses a `name:type,...` header line. Errors name line 1.
Schema parse_csv_header(std::string_view line);

/// Splits one CSV record; single-quoted fields may contain commas and `''`.
/// Quoted fields are returned unescaped. Throws Errc::parse on an
/// unterminated quote.
std::vector<std::string> split_csv_record(std::string_view line, bool* quoted = nullptr);

/// Reads a whole CSV document into a relation named `name`. Rows go into a
/// staging relation first, so a bad line never leaves partial data behind.
Relation read_csv(const std::string& name, std::istream& in);

void write_csv(const Relation& rel, std::ostream& out);

}  // namespace polystore::rel
