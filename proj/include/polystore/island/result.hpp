#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "polystore/array/dense_array.hpp"
#include "polystore/common/value.hpp"
#include "polystore/island/registry.hpp"
#include "polystore/keyvalue/kv_store.hpp"
#include "polystore/relational/relation.hpp"

namespace polystore::island {

using Documents = std::vector<kv::Document>;

/// What any island query produces, in the data model of its island.
using Result = std::variant<Value, rel::Relation, array::DenseArray, Documents>;

DataModel model_of(const Result& r);
std::string_view kind_name(const Result& r);

/// Relative tolerance for floats in canonical comparison.
inline constexpr double kCanonicalTolerance = 1e-9;

bool close(double a, double b, double tol = kCanonicalTolerance);

/// Equality up to row order (relations), float tolerance, and NaN == NaN.
/// Object names are ignored; column and dimension names are not.
bool canonical_equal(const Result& a, const Result& b, std::string* why = nullptr);

/// Deterministic JSON form (relation rows in stored order).
nlohmann::json to_json(const Result& r);

/// Human-readable table; `max_rows` truncates long outputs.
std::string render_table(const Result& r, std::size_t max_rows = 50);
std::string render_csv(const Result& r);

}  // namespace polystore::island
