#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "polystore/common/value.hpp"
#include "polystore/relational/relation.hpp"
#include "polystore/relational/sql_ast.hpp"

namespace polystore::rel {

/// A statement yields a relation, or a scalar for bare `COUNT(*)` and for
/// DDL/DML (affected row count).
using QueryOutput = std::variant<Relation, Value>;

/// Embedded relational engine over the SQL dialect in docs/grammar.md.
///
/// Concurrency: any number of statements may read concurrently. Writes to a
/// table (load, INSERT, CREATE, DROP) take that table's lock exclusively.
/// There are no cross-statement transactions.
class RelationalEngine {
 public:
  RelationalEngine() = default;
  RelationalEngine(const RelationalEngine&) = delete;
  RelationalEngine& operator=(const RelationalEngine&) = delete;

  /// Throws Errc::duplicate_name or Errc::schema_invariant.
  void create_table(const std::string& name, Schema schema);

  /// Appends the body rows of a CSV document, creating the table from the
  /// header when it does not exist yet. Returns the number of rows appended.
  std::size_t load_csv(const std::string& name, std::istream& in);

  QueryOutput execute(std::string_view sql);
  QueryOutput execute(const Statement& stmt);

  /// Runs `;`-separated statements in order; returns the output of the last
  /// SELECT (or of the last statement if none is a SELECT).
  QueryOutput execute_script(std::string_view sql);

  /// Registers `rel` under its own name.
  void store(Relation rel, bool replace = false);
  Relation snapshot(const std::string& name) const;
  Schema schema_of(const std::string& name) const;
  bool has_table(const std::string& name) const;
  bool drop(const std::string& name);
  std::vector<std::string> table_names() const;
  std::size_t resident_bytes() const;

 private:
  struct Table {
    mutable std::shared_mutex mutex;
    Relation relation;
  };

  std::shared_ptr<Table> find(const std::string& name) const;
  Relation run_select(const SelectStmt& stmt, bool* scalar_count) const;

  mutable std::shared_mutex catalog_mutex_;
  std::map<std::string, std::shared_ptr<Table>> tables_;
};

/// Convenience: the scalar of a QueryOutput, or throws.
const Value& scalar_of(const QueryOutput& out);
const Relation& relation_of(const QueryOutput& out);

}  // namespace polystore::rel
