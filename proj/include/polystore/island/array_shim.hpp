#pragma once

#include <string>
#include <vector>

#include "polystore/array/array_expr.hpp"
#include "polystore/island/result.hpp"
#include "polystore/relational/relational_engine.hpp"

namespace polystore::island {

/// An ARRAY-island expression rendered as SQL over cell tables
/// (`<array>_cells` with columns d1..dk, val). Nested operators that cannot
/// be fused into one statement are materialized as temp tables by `setup`
/// and removed by `cleanup`.
struct SqlTranslation {
  std::vector<std::string> setup;
  std::string final;
  std::vector<std::string> cleanup;
  array::ExprType type;
  bool value_set = false;  // `final` yields one column of distinct values

  std::string script() const;
};

/// Syntactic test: dwt_haar and bin_hist have no SQL form, and the output
/// of distinct has no cell indices, so only count and distinct may consume it.
bool sql_translatable(const array::ArrayExpr& expr);

/// Throws Errc::untranslatable, or the type checker's errors.
SqlTranslation translate_to_sql(const array::ArrayExpr& expr, const array::ShapeLookup& shapes,
                                const std::string& temp_prefix);

/// Cell rows (d1..dk, val) back into a dense array of the given shape;
/// absent cells become NaN and, for a filtered shape, set the kept count.
array::DenseArray cells_to_array(const rel::Relation& cells, const array::ArrayShape& shape,
                                 std::string name);

/// Relational engine output of `final` in the array data model.
Result adapt_sql_output(const rel::QueryOutput& out, const SqlTranslation& t);

}  // namespace polystore::island
