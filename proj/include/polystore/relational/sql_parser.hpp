#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "polystore/relational/sql_ast.hpp"

namespace polystore::rel {

/// Parses exactly one statement (a trailing `;` is allowed). Throws
/// ParseError carrying the byte offset of the offending token.
Statement parse_sql(std::string_view text);

/// Parses a `;`-separated script.
std::vector<Statement> parse_sql_script(std::string_view text);

/// Table names a statement reads or writes, placeholders excluded, sorted.
std::vector<std::string> referenced_tables(const Statement& stmt);

}  // namespace polystore::rel
