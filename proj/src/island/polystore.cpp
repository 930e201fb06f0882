#include "polystore/island/polystore.hpp"

#include <algorithm>
#include <istream>
#include <set>

#include "polystore/array/array_file.hpp"
#include "polystore/common/error.hpp"
#include "polystore/island/array_shim.hpp"
#include "polystore/relational/sql_parser.hpp"

namespace polystore::island {

namespace {

Result from_output(rel::QueryOutput out) {
  if (auto* r = std::get_if<rel::Relation>(&out)) return std::move(*r);
  return std::get<Value>(out);
}

Result from_text_output(kv::TextOutput out) {
  if (auto* docs = std::get_if<Documents>(&out)) return std::move(*docs);
  rel::Relation r("termcount", {{"term", ColumnType::text}, {"n", ColumnType::int64}});
  for (auto& [term, n] : std::get<std::vector<kv::TermCount>>(out)) r.append({term, n});
  return r;
}

// Drops the shim's temp tables however the script ends.
struct Cleanup {
  rel::RelationalEngine& engine;
  const std::vector<std::string>& statements;
  ~Cleanup() {
    for (const auto& s : statements) {
      try {
        engine.execute(s);
      } catch (...) {
      }
    }
  }
};

}  // namespace

std::size_t Polystore::load_csv(const std::string& table, std::istream& in) {
  return rel_.load_csv(table, in);
}

std::string Polystore::load_array(std::istream& in, Engine engine) {
  auto a = array::read_array(in);
  auto name = a.name();
  store_array(std::move(a), engine);
  return name;
}

std::size_t Polystore::load_jsonl(std::istream& in) { return kv_.load_jsonl(in); }

void Polystore::store_array(array::DenseArray a, Engine engine, bool replace) {
  switch (engine) {
    case Engine::array:
      arr_.store(std::move(a), replace);
      return;
    case Engine::relational: {
      const auto name = a.name();
      auto cells = array_to_rel(a, default_array_to_rel(a.rank()), cells_table(name));
      rel_.store(std::move(cells), replace);
      register_cells(name, {a.dims(), a.filtered()});
      return;
    }
    case Engine::kv:
      break;
  }
  throw Error(Errc::invalid_argument, "arrays live in the array or relational engine");
}

void Polystore::register_cells(const std::string& name, const array::ArrayShape& shape) {
  std::lock_guard lock(directory_mutex_);
  directory_[name] = shape;
}

array::ArrayShape Polystore::array_shape(const std::string& name) const {
  if (arr_.has(name)) return arr_.shape_of(name);
  {
    std::lock_guard lock(directory_mutex_);
    auto it = directory_.find(name);
    if (it != directory_.end()) return it->second;
  }
  const auto table = cells_table(name);
  if (!rel_.has_table(table)) throw Error(Errc::unknown_object, "unknown array '" + name + "'");
  // A cell table loaded directly: its box is the extent of its indices.
  const auto cells = rel_.snapshot(table);
  if (cells.arity() < 2) throw Error(Errc::shape_mismatch, "'" + table + "' is not a cell table");
  array::ArrayShape shape;
  const auto rank = cells.arity() - 1;
  for (std::size_t d = 0; d < rank; ++d) {
    if (cells.schema()[d].type != ColumnType::int64) {
      throw Error(Errc::shape_mismatch, "'" + table + "' column " + cells.schema()[d].name + " is not int64");
    }
    std::size_t extent = 0;
    for (std::size_t r = 0; r < cells.size(); ++r) {
      const auto v = std::get<std::int64_t>(cells.at(r, d));
      if (v >= 0) extent = std::max(extent, static_cast<std::size_t>(v) + 1);
    }
    shape.dims.push_back({"d" + std::to_string(d + 1), extent});
  }
  return shape;
}

bool Polystore::resident(const std::string& object, DataModel model, Engine engine) const {
  switch (model) {
    case DataModel::array:
      if (engine == Engine::array) return arr_.has(object);
      if (engine == Engine::relational) return rel_.has_table(cells_table(object));
      return false;
    case DataModel::relational:
      return engine == Engine::relational && rel_.has_table(object);
    case DataModel::document:
      return engine == Engine::kv;
  }
  return false;
}

std::vector<Engine> Polystore::locate(const std::string& object, DataModel model) const {
  std::vector<Engine> out;
  for (auto e : {Engine::relational, Engine::array, Engine::kv}) {
    if (resident(object, model, e)) out.push_back(e);
  }
  return out;
}

array::DenseArray Polystore::read_array_object(const std::string& name, Engine engine) const {
  if (engine == Engine::array) return *arr_.get(name);
  if (engine == Engine::relational) {
    return cells_to_array(rel_.snapshot(cells_table(name)), array_shape(name), name);
  }
  throw Error(Errc::invalid_argument, "the kv engine holds no arrays");
}

std::string Polystore::shim_translate(std::string_view island, Engine engine, std::string_view text) const {
  const auto& isl = find_island(island);
  if (!isl.has_engine(engine)) {
    throw Error(Errc::invalid_argument, std::string(engine_name(engine)) + " is not a member of " + isl.name);
  }
  if (isl.language == Language::array_expr && engine == Engine::relational) {
    const auto expr = array::parse_array_expr(text);
    return translate_to_sql(expr, [this](const std::string& n) { return array_shape(n); }, "__x").script();
  }
  return std::string(text);
}

bool Polystore::supports(std::string_view island, Engine engine, std::string_view text) const {
  const auto& isl = find_island(island);
  if (!isl.has_engine(engine)) return false;
  if (isl.language == Language::array_expr && engine == Engine::relational) {
    return sql_translatable(array::parse_array_expr(text));
  }
  return true;
}

Result Polystore::execute(std::string_view island, Engine engine, std::string_view text) {
  const auto& isl = find_island(island);
  if (!isl.has_engine(engine)) {
    throw Error(Errc::invalid_argument, std::string(engine_name(engine)) + " is not a member of " + isl.name);
  }
  switch (isl.language) {
    case Language::sql_select: {
      auto stmt = rel::parse_sql(text);
      if (!std::holds_alternative<rel::SelectStmt>(stmt)) {
        throw ParseError(isl.name + " accepts a single SELECT", 0);
      }
      return from_output(rel_.execute(stmt));
    }
    case Language::sql_script:
      return from_output(rel_.execute_script(text));
    case Language::text:
      return from_text_output(kv::execute(kv_, text));
    case Language::array_expr:
      break;
  }
  if (engine == Engine::array) {
    auto out = arr_.execute(text);
    if (auto* a = std::get_if<array::DenseArray>(&out)) return std::move(*a);
    return Value(std::get<std::int64_t>(out));
  }
  const auto expr = array::parse_array_expr(text);
  const auto t = translate_to_sql(expr, [this](const std::string& n) { return array_shape(n); },
                                  temp_name("x") + "_");
  Cleanup guard{rel_, t.cleanup};
  for (const auto& s : t.setup) rel_.execute(s);
  return adapt_sql_output(rel_.execute(t.final), t);
}

std::vector<std::string> Polystore::referenced_objects(std::string_view text, std::string_view island) const {
  const auto& isl = find_island(island);
  std::set<std::string> out;
  switch (isl.language) {
    case Language::sql_select:
    case Language::sql_script:
      for (const auto& stmt : rel::parse_sql_script(text)) {
        for (auto& t : rel::referenced_tables(stmt)) out.insert(std::move(t));
      }
      break;
    case Language::array_expr:
      for (auto& a : array::referenced_arrays(array::parse_array_expr(text))) out.insert(std::move(a));
      break;
    case Language::text:
      kv::parse_text_query(text);
      out.insert("kv");
      break;
  }
  return {out.begin(), out.end()};
}

std::string Polystore::cast_migrate(const std::string& object, Engine from, Engine to, const CastSpec& spec,
                                    const std::string& target_name) {
  const auto target = target_name.empty() ? object : target_name;
  Result source;
  switch (spec.source) {
    case DataModel::relational:
      if (from != Engine::relational) throw Error(Errc::invalid_argument, "relations live in the relational engine");
      source = rel_.snapshot(object);
      break;
    case DataModel::array:
      source = read_array_object(object, from);
      break;
    case DataModel::document:
      if (from != Engine::kv) throw Error(Errc::invalid_argument, "documents live in the kv engine");
      source = kv_.scan(object);
      break;
  }
  Result converted;
  const auto key = std::pair{spec.source, spec.target};
  if (spec.source == spec.target) {
    converted = std::move(source);
  } else if (key == std::pair{DataModel::relational, DataModel::array}) {
    const auto& r = std::get<rel::Relation>(source);
    converted = rel_to_array(r, spec.dim_columns.empty() ? default_rel_to_array(r.schema()) : spec, target);
  } else if (key == std::pair{DataModel::array, DataModel::relational}) {
    converted = array_to_rel(std::get<array::DenseArray>(source), spec, target);
  } else if (key == std::pair{DataModel::relational, DataModel::document}) {
    converted = rel_to_docs(std::get<rel::Relation>(source), spec);
  } else if (key == std::pair{DataModel::document, DataModel::relational}) {
    converted = docs_to_rel(std::get<Documents>(source), spec, target);
  } else {
    converted = convert(source, spec.target, target);
  }
  switch (spec.target) {
    case DataModel::array: {
      auto a = std::get<array::DenseArray>(std::move(converted));
      a.rename(target);
      store_array(std::move(a), to);
      return to == Engine::relational ? cells_table(target) : target;
    }
    case DataModel::relational: {
      if (to != Engine::relational) throw Error(Errc::invalid_argument, "relations live in the relational engine");
      auto r = std::get<rel::Relation>(std::move(converted));
      r.rename(target);
      rel_.store(std::move(r));
      return target;
    }
    case DataModel::document: {
      if (to != Engine::kv) throw Error(Errc::invalid_argument, "documents live in the kv engine");
      for (auto& d : std::get<Documents>(converted)) kv_.put(std::move(d.key), std::move(d.fields));
      return spec.key_prefix;
    }
  }
  return target;
}

std::string Polystore::materialize(const Result& r, DataModel model, Engine engine, const std::string& name) {
  auto converted = convert(r, model, name);
  switch (model) {
    case DataModel::array: {
      auto a = std::get<array::DenseArray>(std::move(converted));
      a.rename(name);
      store_array(std::move(a), engine);
      return engine == Engine::relational ? cells_table(name) : name;
    }
    case DataModel::relational: {
      auto rel = std::get<rel::Relation>(std::move(converted));
      rel.rename(name);
      rel_.store(std::move(rel));
      return name;
    }
    case DataModel::document: {
      const auto prefix = name + "/";
      for (auto& d : std::get<Documents>(converted)) kv_.put(prefix + d.key, std::move(d.fields));
      return prefix;
    }
  }
  return name;
}

void Polystore::drop_object(const std::string& name, DataModel model, Engine engine) {
  switch (model) {
    case DataModel::array:
      if (engine == Engine::array) {
        arr_.drop(name);
      } else {
        rel_.drop(cells_table(name));
        std::lock_guard lock(directory_mutex_);
        directory_.erase(name);
      }
      return;
    case DataModel::relational:
      rel_.drop(name);
      return;
    case DataModel::document:
      kv_.erase_prefix(name + "/");
      return;
  }
}

std::size_t Polystore::resident_bytes(Engine e) const {
  switch (e) {
    case Engine::relational: return rel_.resident_bytes();
    case Engine::array: return arr_.resident_bytes();
    case Engine::kv: return kv_.resident_bytes();
  }
  return 0;
}

std::string Polystore::temp_name(std::string_view tag) {
  return "__" + std::string(tag) + std::to_string(temp_counter_++);
}

}  // namespace polystore::island
