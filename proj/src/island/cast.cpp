#include "polystore/island/cast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "polystore/common/error.hpp"

namespace polystore::island {

namespace {

std::string tuple_text(const std::vector<std::size_t>& idx) {
  std::string s = "(";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  return s + ")";
}

std::size_t require_column(const rel::Relation& r, const std::string& name) {
  const auto c = r.column_index(name);
  if (!c) throw Error(Errc::unknown_column, "cast: no column '" + name + "' in '" + r.name() + "'");
  return *c;
}

}  // namespace

nlohmann::json to_json(const CastSpec& s) {
  nlohmann::json j = {{"source", model_name(s.source)},
                      {"target", model_name(s.target)},
                      {"dim_columns", s.dim_columns},
                      {"value_column", s.value_column},
                      {"key_column", s.key_column},
                      {"key_prefix", s.key_prefix}};
  if (s.fill) j["fill"] = *s.fill;
  if (s.schema) {
    auto cols = nlohmann::json::array();
    for (const auto& c : *s.schema) cols.push_back({{"name", c.name}, {"type", type_name(c.type)}});
    j["schema"] = cols;
  }
  return j;
}

CastSpec cast_spec_from_json(const nlohmann::json& j) {
  CastSpec s;
  s.source = parse_model(j.at("source").get<std::string>());
  s.target = parse_model(j.at("target").get<std::string>());
  s.dim_columns = j.value("dim_columns", std::vector<std::string>{});
  s.value_column = j.value("value_column", "val");
  s.key_column = j.value("key_column", "key");
  s.key_prefix = j.value("key_prefix", "");
  if (j.contains("fill")) s.fill = j["fill"].get<double>();
  if (j.contains("schema")) {
    rel::Schema schema;
    for (const auto& c : j["schema"]) {
      schema.push_back({c.at("name").get<std::string>(), parse_type_name(c.at("type").get<std::string>())});
    }
    s.schema = std::move(schema);
  }
  return s;
}

std::string cells_table(const std::string& array_name) { return array_name + "_cells"; }

std::vector<std::string> cell_dim_columns(std::size_t rank) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= rank; ++i) out.push_back("d" + std::to_string(i));
  return out;
}

CastSpec default_rel_to_array(const rel::Schema& schema) {
  if (schema.size() < 2) {
    throw Error(Errc::type_incoercible, "an array needs at least one dimension column and a value column");
  }
  CastSpec s;
  s.source = DataModel::relational;
  s.target = DataModel::array;
  for (std::size_t i = 0; i + 1 < schema.size(); ++i) s.dim_columns.push_back(schema[i].name);
  s.value_column = schema.back().name;
  return s;
}

CastSpec default_array_to_rel(std::size_t rank) {
  CastSpec s;
  s.source = DataModel::array;
  s.target = DataModel::relational;
  s.dim_columns = cell_dim_columns(rank);
  s.value_column = "val";
  return s;
}

array::DenseArray rel_to_array(const rel::Relation& r, const CastSpec& spec, std::string name) {
  if (spec.dim_columns.empty()) throw Error(Errc::invalid_argument, "cast: no dimension columns");
  std::vector<std::size_t> dcols;
  for (const auto& d : spec.dim_columns) {
    const auto c = require_column(r, d);
    if (r.schema()[c].type != ColumnType::int64) {
      throw Error(Errc::type_incoercible, "cast: dimension column '" + d + "' is not int64");
    }
    dcols.push_back(c);
  }
  const auto vcol = require_column(r, spec.value_column);
  if (r.schema()[vcol].type == ColumnType::text) {
    throw Error(Errc::type_incoercible, "cast: value column '" + spec.value_column + "' is text");
  }
  if (r.empty()) throw Error(Errc::density, "cast: no rows, so no array box");
  const auto rank = dcols.size();
  std::vector<std::size_t> extent(rank, 0);
  for (std::size_t row = 0; row < r.size(); ++row) {
    for (std::size_t d = 0; d < rank; ++d) {
      const auto v = std::get<std::int64_t>(r.at(row, dcols[d]));
      if (v < 0) {
        throw Error(Errc::density, "cast: negative index " + std::to_string(v) + " in '" + spec.dim_columns[d] + "'");
      }
      extent[d] = std::max(extent[d], static_cast<std::size_t>(v) + 1);
    }
  }
  std::vector<array::Dim> dims;
  for (std::size_t d = 0; d < rank; ++d) dims.push_back({spec.dim_columns[d], extent[d]});
  const auto total = array::product(dims);
  std::vector<double> values(total, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(total, false);
  std::vector<std::size_t> idx(rank);
  for (std::size_t row = 0; row < r.size(); ++row) {
    for (std::size_t d = 0; d < rank; ++d) idx[d] = static_cast<std::size_t>(std::get<std::int64_t>(r.at(row, dcols[d])));
    std::size_t off = 0;
    for (std::size_t d = 0; d < rank; ++d) off = off * extent[d] + idx[d];
    if (seen[off]) throw Error(Errc::duplicate_dimension, "cast: duplicate index " + tuple_text(idx));
    seen[off] = true;
    values[off] = as_double(r.at(row, vcol));
  }
  for (std::size_t off = 0; off < total; ++off) {
    if (seen[off]) continue;
    if (!spec.fill) {
      std::vector<std::size_t> missing(rank);
      auto rest = off;
      for (std::size_t d = rank; d-- > 0;) {
        missing[d] = rest % extent[d];
        rest /= extent[d];
      }
      throw Error(Errc::density, "cast: missing index " + tuple_text(missing) + " and no fill value");
    }
    values[off] = *spec.fill;
  }
  return array::DenseArray(std::move(name), std::move(dims), std::move(values));
}

rel::Relation array_to_rel(const array::DenseArray& a, const CastSpec& spec, std::string name) {
  auto cols = spec.dim_columns.empty() ? cell_dim_columns(a.rank()) : spec.dim_columns;
  if (cols.size() != a.rank()) throw Error(Errc::invalid_argument, "cast: one column name per dimension needed");
  rel::Schema schema;
  for (const auto& c : cols) schema.push_back({c, ColumnType::int64});
  schema.push_back({spec.value_column, ColumnType::float64});
  rel::Relation out(std::move(name), std::move(schema));
  out.reserve(a.kept_count().value_or(a.cell_count()));
  std::vector<Value> row(a.rank() + 1);
  for (std::size_t i = 0; i < a.cell_count(); ++i) {
    const double v = a.values()[i];
    if (a.filtered() && std::isnan(v)) continue;
    const auto idx = a.index_of(i);
    for (std::size_t d = 0; d < a.rank(); ++d) row[d] = static_cast<std::int64_t>(idx[d]);
    row[a.rank()] = v;
    out.append(row);
  }
  return out;
}

Documents rel_to_docs(const rel::Relation& r, const CastSpec& spec) {
  const auto kcol = require_column(r, spec.key_column);
  Documents docs;
  docs.reserve(r.size());
  std::unordered_set<std::string> keys;
  for (std::size_t row = 0; row < r.size(); ++row) {
    kv::Document d;
    d.key = spec.key_prefix + to_text(r.at(row, kcol));
    if (!keys.insert(d.key).second) throw Error(Errc::duplicate_name, "cast: duplicate document key '" + d.key + "'");
    for (std::size_t c = 0; c < r.arity(); ++c) {
      if (c != kcol) d.fields[r.schema()[c].name] = to_text(r.at(row, c));
    }
    docs.push_back(std::move(d));
  }
  std::sort(docs.begin(), docs.end(), [](const auto& x, const auto& y) { return x.key < y.key; });
  return docs;
}

rel::Relation docs_to_rel(const Documents& docs, const CastSpec& spec, std::string name) {
  rel::Schema schema;
  if (spec.schema) {
    schema = *spec.schema;
  } else {
    std::set<std::string> fields;
    for (const auto& d : docs) {
      for (const auto& [f, _] : d.fields) fields.insert(f);
    }
    fields.erase(spec.key_column);
    schema.push_back({spec.key_column, ColumnType::text});
    for (const auto& f : fields) schema.push_back({f, ColumnType::text});
  }
  rel::Relation out(std::move(name), schema);
  out.reserve(docs.size());
  for (const auto& d : docs) {
    if (d.key.compare(0, spec.key_prefix.size(), spec.key_prefix) != 0) {
      throw Error(Errc::type_incoercible, "cast: key '" + d.key + "' lacks prefix '" + spec.key_prefix + "'");
    }
    std::vector<Value> row;
    for (const auto& col : schema) {
      std::string text;
      if (col.name == spec.key_column) {
        text = d.key.substr(spec.key_prefix.size());
      } else {
        auto f = d.fields.find(col.name);
        if (f == d.fields.end()) {
          throw Error(Errc::schema_invariant, "cast: document '" + d.key + "' has no field '" + col.name + "'");
        }
        text = f->second;
      }
      try {
        row.push_back(parse_literal(text, col.type));
      } catch (const Error&) {
        throw Error(Errc::type_incoercible, "cast: '" + text + "' is not " + std::string(type_name(col.type)));
      }
    }
    out.append(row);
  }
  return out;
}

Result convert(const Result& r, DataModel target, const std::string& name) {
  if (model_of(r) == target && !std::holds_alternative<Value>(r)) return r;
  // A scalar is a one-cell array, or a one-row, one-column relation.
  if (const auto* v = std::get_if<Value>(&r)) {
    if (target == DataModel::array) {
      if (!is_numeric(*v)) throw Error(Errc::type_incoercible, "cast: text scalar to array");
      return array::DenseArray(name, {{"i", 1}}, {as_double(*v)});
    }
    rel::Relation rel(name, {{"val", type_of(*v)}});
    rel.append({*v});
    if (target == DataModel::relational) return rel;
    CastSpec s;
    s.key_column = "val";
    return rel_to_docs(rel, s);
  }
  switch (model_of(r)) {
    case DataModel::relational: {
      const auto& rel = std::get<rel::Relation>(r);
      if (target == DataModel::array) return rel_to_array(rel, default_rel_to_array(rel.schema()), name);
      CastSpec s;
      s.key_column = rel.arity() ? rel.schema()[0].name : "key";
      return rel_to_docs(rel, s);
    }
    case DataModel::array: {
      const auto& a = std::get<array::DenseArray>(r);
      auto rel = array_to_rel(a, default_array_to_rel(a.rank()), name);
      if (target == DataModel::relational) return rel;
      CastSpec s;
      s.key_column = "d1";
      if (a.rank() != 1) throw Error(Errc::type_incoercible, "cast: only rank-1 arrays map to documents");
      return rel_to_docs(rel, s);
    }
    case DataModel::document: {
      const auto& docs = std::get<Documents>(r);
      auto rel = docs_to_rel(docs, CastSpec{}, name);
      if (target == DataModel::relational) return rel;
      return rel_to_array(rel, default_rel_to_array(rel.schema()), name);
    }
  }
  throw Error(Errc::type_incoercible, "cast: unsupported conversion");
}

}  // namespace polystore::island
