#include "polystore/relational/relation.hpp"

#include <algorithm>
#include <set>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"

namespace polystore::rel {

namespace {

ColumnData make_column(ColumnType type) {
  switch (type) {
    case ColumnType::int64: return std::vector<std::int64_t>{};
    case ColumnType::float64: return std::vector<double>{};
    case ColumnType::text: return std::vector<std::string>{};
  }
  return std::vector<std::int64_t>{};
}

}  // namespace

Relation::Relation(std::string name, Schema schema)
    : name_(std::move(name)), schema_(std::move(schema)) {
  std::set<std::string, std::less<>> seen;
  for (const auto& col : schema_) {
    if (col.name.empty()) {
      throw Error(Errc::schema_invariant, "empty column name in '" + name_ + "'");
    }
    if (!seen.insert(col.name).second) {
      throw Error(Errc::schema_invariant,
                  "column '" + col.name + "' repeated in schema of '" + name_ + "'");
    }
    columns_.push_back(make_column(col.type));
  }
}

std::optional<std::size_t> Relation::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  return std::nullopt;
}

Value Relation::at(std::size_t row, std::size_t col) const {
  return std::visit([row](const auto& v) -> Value { return v[row]; }, columns_.at(col));
}

std::vector<Value> Relation::row(std::size_t r) const {
  std::vector<Value> out;
  out.reserve(arity());
  for (std::size_t c = 0; c < arity(); ++c) out.push_back(at(r, c));
  return out;
}

void Relation::append(const std::vector<Value>& row) {
  if (row.size() != arity()) {
    throw Error(Errc::arity_mismatch, "row has " + std::to_string(row.size()) +
                                          " values, '" + name_ + "' has arity " +
                                          std::to_string(arity()));
  }
  // Validate before mutating so a failed append leaves the table intact.
  for (std::size_t c = 0; c < arity(); ++c) {
    const auto want = schema_[c].type;
    const auto got = type_of(row[c]);
    if (got != want && !(want == ColumnType::float64 && got == ColumnType::int64)) {
      throw Error(Errc::type_incoercible,
                  std::string(type_name(got)) + " value for " + std::string(type_name(want)) +
                      " column '" + schema_[c].name + "'");
    }
  }
  for (std::size_t c = 0; c < arity(); ++c) {
    switch (schema_[c].type) {
      case ColumnType::int64:
        std::get<0>(columns_[c]).push_back(std::get<std::int64_t>(row[c]));
        break;
      case ColumnType::float64:
        std::get<1>(columns_[c]).push_back(as_double(row[c]));
        break;
      case ColumnType::text:
        std::get<2>(columns_[c]).push_back(std::get<std::string>(row[c]));
        break;
    }
  }
  ++rows_;
}

void Relation::append_from(const Relation& other, std::size_t row) {
  append(other.row(row));
}

void Relation::reserve(std::size_t rows) {
  for (auto& col : columns_) std::visit([rows](auto& v) { v.reserve(rows); }, col);
}

std::size_t Relation::bytes() const {
  std::size_t total = 0;
  for (const auto& col : columns_) {
    std::visit(
        [&total](const auto& v) {
          using T = typename std::decay_t<decltype(v)>::value_type;
          total += v.capacity() * sizeof(T);
          if constexpr (std::is_same_v<T, std::string>) {
            for (const auto& s : v) total += s.capacity() > 15 ? s.capacity() : 0;
          }
        },
        col);
  }
  return total;
}

std::vector<std::vector<Value>> canonical_rows(const Relation& r) {
  std::vector<std::vector<Value>> rows;
  rows.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) rows.push_back(r.row(i));
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    for (std::size_t c = 0; c < a.size(); ++c) {
      int cmp = compare(a[c], b[c]);
      if (cmp != 0) return cmp < 0;
    }
    return false;
  });
  return rows;
}

}  // namespace polystore::rel
