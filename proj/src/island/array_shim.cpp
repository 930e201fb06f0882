#include "polystore/island/array_shim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polystore/common/error.hpp"
#include "polystore/island/cast.hpp"

namespace polystore::island {

using array::ArrayExpr;
using array::ArrayOp;

namespace {

[[noreturn]] void untranslatable(const ArrayExpr& e, const std::string& why) {
  throw Error(Errc::untranslatable,
              std::string(array::op_name(e.op)) + " has no relational translation: " + why);
}

std::string cmp_sql(array::Cmp c) {
  switch (c) {
    case array::Cmp::eq: return "=";
    case array::Cmp::ne: return "<>";
    case array::Cmp::lt: return "<";
    case array::Cmp::le: return "<=";
    case array::Cmp::gt: return ">";
    case array::Cmp::ge: return ">=";
  }
  return "=";
}

std::string dim_list(std::size_t rank, const std::string& qualifier = "") {
  std::string out;
  for (const auto& d : cell_dim_columns(rank)) out += (qualifier.empty() ? "" : qualifier + ".") + d + ", ";
  return out;
}

// A pending SELECT, or a table plus WHERE conjuncts.
struct Source {
  std::string select;
  std::string table;
  std::vector<std::string> conds;
  std::size_t rank = 0;
  bool values = false;
};

std::string where_clause(const std::vector<std::string>& conds) {
  std::string out;
  for (std::size_t i = 0; i < conds.size(); ++i) out += (i ? " AND " : " WHERE ") + conds[i];
  return out;
}

class Translator {
 public:
  Translator(const array::ShapeLookup& shapes, std::string prefix)
      : shapes_(shapes), prefix_(std::move(prefix)) {}

  SqlTranslation run(const ArrayExpr& e) {
    t_.type = array::check(e, shapes_);
    if (e.op == ArrayOp::count) {
      auto s = as_table(visit(e.args[0]));
      t_.final = "SELECT COUNT(*) FROM " + s.table + where_clause(s.conds);
    } else {
      auto s = visit(e);
      t_.value_set = s.values;
      t_.final = as_select(s);
    }
    return std::move(t_);
  }

 private:
  Source visit(const ArrayExpr& e) {
    switch (e.op) {
      case ArrayOp::ref: {
        Source s;
        s.table = cells_table(e.name);
        s.rank = shapes_(e.name).dims.size();
        return s;
      }
      case ArrayOp::scan:
        return visit(e.args[0]);
      case ArrayOp::count:
        untranslatable(e, "count yields a scalar");
      case ArrayOp::distinct: {
        auto s = visit(e.args[0]);
        if (s.values) return s;
        s = as_table(std::move(s));
        Source out;
        out.select = "SELECT DISTINCT val FROM " + s.table + where_clause(s.conds);
        out.values = true;
        return out;
      }
      case ArrayOp::filter: {
        auto s = visit(e.args[0]);
        if (s.values) untranslatable(e, "distinct output has no cell indices");
        s = as_table(std::move(s));
        for (const auto& p : e.predicates) s.conds.push_back("val " + cmp_sql(p.op) + " " + format_double(p.operand));
        return s;
      }
      case ArrayOp::multiply: {
        auto a = visit(e.args[0]);
        auto b = visit(e.args[1]);
        if (a.values || b.values) untranslatable(e, "distinct output has no cell indices");
        a = materialized(std::move(a));
        b = materialized(std::move(b));
        Source out;
        out.rank = 2;
        out.select = "SELECT a.d1 AS d1, b.d2 AS d2, SUM(a.val * b.val) AS val FROM " + a.table +
                     " a JOIN " + b.table + " b ON a.d2 = b.d1 GROUP BY a.d1, b.d2";
        return out;
      }
      case ArrayOp::subarray: {
        auto s = visit(e.args[0]);
        if (s.values) untranslatable(e, "distinct output has no cell indices");
        s = as_table(std::move(s));
        std::string cols;
        for (std::size_t d = 0; d < s.rank; ++d) {
          const auto col = "d" + std::to_string(d + 1);
          const auto lo = std::to_string(e.ints[2 * d]);
          cols += col + " - " + lo + " AS " + col + ", ";
          s.conds.push_back(col + " >= " + lo);
          s.conds.push_back(col + " <= " + std::to_string(e.ints[2 * d + 1]));
        }
        Source out;
        out.rank = s.rank;
        out.select = "SELECT " + cols + "val FROM " + s.table + where_clause(s.conds);
        return out;
      }
      case ArrayOp::dwt_haar:
        untranslatable(e, "no wavelet operator in SQL");
      case ArrayOp::bin_hist:
        untranslatable(e, "no histogram operator in SQL");
    }
    untranslatable(e, "unknown operator");
  }

  std::string as_select(const Source& s) const {
    if (!s.select.empty()) return s.select;
    const auto cols = s.values ? std::string("val") : dim_list(s.rank) + "val";
    return "SELECT " + cols + " FROM " + s.table + where_clause(s.conds);
  }

  // Turns a pending SELECT into a temp table; conds stay pending.
  Source as_table(Source s) {
    if (s.select.empty()) return s;
    const auto name = prefix_ + "s" + std::to_string(counter_++) + "_cells";
    t_.setup.push_back("CREATE TABLE " + name + " AS " + s.select);
    t_.cleanup.push_back("DROP TABLE IF EXISTS " + name);
    Source out;
    out.table = name;
    out.rank = s.rank;
    out.values = s.values;
    return out;
  }

  // A bare table: pending SELECTs and WHERE conjuncts are both materialized.
  Source materialized(Source s) {
    if (!s.select.empty() || s.conds.empty()) return as_table(std::move(s));
    s.select = as_select(s);
    s.conds.clear();
    return as_table(std::move(s));
  }

  const array::ShapeLookup& shapes_;
  std::string prefix_;
  std::size_t counter_ = 0;
  SqlTranslation t_;
};

bool consumes_cells(ArrayOp op) {
  return op == ArrayOp::filter || op == ArrayOp::multiply || op == ArrayOp::subarray;
}

bool yields_values(const ArrayExpr& e) {
  if (e.op == ArrayOp::distinct) return true;
  if (e.op == ArrayOp::scan) return yields_values(e.args[0]);
  return false;
}

}  // namespace

std::string SqlTranslation::script() const {
  std::string out;
  for (const auto& s : setup) out += s + ";\n";
  out += final + ";";
  for (const auto& s : cleanup) out += "\n" + s + ";";
  return out;
}

bool sql_translatable(const ArrayExpr& e) {
  if (e.op == ArrayOp::dwt_haar || e.op == ArrayOp::bin_hist) return false;
  for (const auto& a : e.args) {
    if (consumes_cells(e.op) && yields_values(a)) return false;
    if (!sql_translatable(a)) return false;
  }
  return true;
}

SqlTranslation translate_to_sql(const ArrayExpr& expr, const array::ShapeLookup& shapes,
                                const std::string& temp_prefix) {
  return Translator(shapes, temp_prefix).run(expr);
}

array::DenseArray cells_to_array(const rel::Relation& cells, const array::ArrayShape& shape,
                                 std::string name) {
  const auto rank = shape.dims.size();
  if (cells.arity() != rank + 1) {
    throw Error(Errc::shape_mismatch, "cell table '" + cells.name() + "' has arity " +
                                          std::to_string(cells.arity()) + ", expected " + std::to_string(rank + 1));
  }
  const auto total = array::product(shape.dims);
  std::vector<double> values(total, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(total, false);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      const auto v = cells.at(r, d);
      if (type_of(v) != ColumnType::int64) throw Error(Errc::type_incoercible, "cell index is not int64");
      const auto i = std::get<std::int64_t>(v);
      if (i < 0 || static_cast<std::size_t>(i) >= shape.dims[d].length) {
        throw Error(Errc::shape_mismatch, "cell index " + std::to_string(i) + " outside dimension '" +
                                              shape.dims[d].name + "'");
      }
      off = off * shape.dims[d].length + static_cast<std::size_t>(i);
    }
    if (seen[off]) throw Error(Errc::duplicate_dimension, "duplicate cell in '" + cells.name() + "'");
    seen[off] = true;
    values[off] = as_double(cells.at(r, rank));
  }
  array::DenseArray out(std::move(name), shape.dims, std::move(values));
  if (shape.filtered) {
    out.set_kept_count(cells.size());
  } else if (cells.size() != total) {
    throw Error(Errc::density, "cell table '" + cells.name() + "' does not cover its array");
  }
  return out;
}

Result adapt_sql_output(const rel::QueryOutput& out, const SqlTranslation& t) {
  if (t.type.scalar) {
    const auto& v = rel::scalar_of(out);
    return Value(static_cast<std::int64_t>(as_double(v)));
  }
  const auto& r = rel::relation_of(out);
  if (t.value_set) {
    std::vector<double> values;
    values.reserve(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double v = as_double(r.at(i, 0));
      if (!std::isnan(v)) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return array::DenseArray("distinct", {{"value", n}}, std::move(values));
  }
  return cells_to_array(r, {t.type.dims, t.type.filtered}, "result");
}

}  // namespace polystore::island
