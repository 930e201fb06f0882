#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polystore/array/dense_array.hpp"
#include "polystore/island/registry.hpp"
#include "polystore/island/result.hpp"
#include "polystore/relational/relation.hpp"

namespace polystore::island {

/// How to translate one object between data models.
///
/// relational -> array: `dim_columns` (int64) index a dense box with origin
/// 0; `value_column` holds the cell. Without `fill` every cell of the box
/// must be present.
/// array -> relational: one row per cell, columns `dim_columns` then
/// `value_column`; NaN cells of a filtered array are skipped.
/// relational <-> document: documents are keyed `key_prefix` + the text of
/// `key_column`; every other column is a text field. `schema` restores the
/// column types on the way back.
struct CastSpec {
  DataModel source = DataModel::relational;
  DataModel target = DataModel::array;
  std::vector<std::string> dim_columns;
  std::string value_column = "val";
  std::string key_column = "key";
  std::string key_prefix;
  std::optional<double> fill;
  std::optional<rel::Schema> schema;

  bool operator==(const CastSpec&) const = default;
};

nlohmann::json to_json(const CastSpec& spec);
CastSpec cast_spec_from_json(const nlohmann::json& j);

/// Cell-table convention for an array held by the relational engine.
std::string cells_table(const std::string& array_name);
std::vector<std::string> cell_dim_columns(std::size_t rank);  // d1..dk

/// All columns but the last are dimensions; the last is the value.
CastSpec default_rel_to_array(const rel::Schema& schema);
/// d1..dk, val.
CastSpec default_array_to_rel(std::size_t rank);

array::DenseArray rel_to_array(const rel::Relation& r, const CastSpec& spec, std::string name);
rel::Relation array_to_rel(const array::DenseArray& a, const CastSpec& spec, std::string name);
Documents rel_to_docs(const rel::Relation& r, const CastSpec& spec);
rel::Relation docs_to_rel(const Documents& docs, const CastSpec& spec, std::string name);

/// Converts a query result into `target`, with default specs.
Result convert(const Result& r, DataModel target, const std::string& name);

}  // namespace polystore::island
