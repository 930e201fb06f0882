#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "polystore/common/value.hpp"

namespace polystore::rel {

struct ColumnDef {
  std::string name;
  ColumnType type = ColumnType::int64;

  bool operator==(const ColumnDef&) const = default;
};

using Schema = std::vector<ColumnDef>;

using ColumnData =
    std::variant<std::vector<std::int64_t>, std::vector<double>, std::vector<std::string>>;

/// A named table stored column-wise. Every row has schema-arity values and
/// every value has its column's declared type.
class Relation {
 public:
  Relation() = default;
  /// Throws Errc::schema_invariant on duplicate or invalid column names.
  Relation(std::string name, Schema schema);

  const std::string& name() const noexcept { return name_; }
  void rename(std::string name) { name_ = std::move(name); }
  const Schema& schema() const noexcept { return schema_; }
  std::size_t arity() const noexcept { return schema_.size(); }
  std::size_t size() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::optional<std::size_t> column_index(std::string_view name) const;
  const ColumnData& column(std::size_t index) const { return columns_.at(index); }

  Value at(std::size_t row, std::size_t col) const;
  std::vector<Value> row(std::size_t r) const;

  /// Appends one row. int64 values widen into float64 columns; any other
  /// mismatch throws Errc::type_incoercible, wrong arity Errc::arity_mismatch.
  void append(const std::vector<Value>& row);
  void append_from(const Relation& other, std::size_t row);
  void reserve(std::size_t rows);

  /// Approximate heap footprint.
  std::size_t bytes() const;

 private:
  std::string name_;
  Schema schema_;
  std::vector<ColumnData> columns_;
  std::size_t rows_ = 0;
};

/// Rows sorted into a deterministic order, for comparisons only.
std::vector<std::vector<Value>> canonical_rows(const Relation& r);

}  // namespace polystore::rel
