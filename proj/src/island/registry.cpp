#include "polystore/island/registry.hpp"

#include <algorithm>

#include "polystore/common/error.hpp"

namespace polystore::island {

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::relational: return "relational";
    case Engine::array: return "array";
    case Engine::kv: return "kv";
  }
  return "?";
}

Engine parse_engine(std::string_view name) {
  for (auto e : {Engine::relational, Engine::array, Engine::kv}) {
    if (engine_name(e) == name) return e;
  }
  throw Error(Errc::invalid_argument, "unknown engine '" + std::string(name) + "'");
}

std::string_view model_name(DataModel m) {
  switch (m) {
    case DataModel::relational: return "relational";
    case DataModel::array: return "array";
    case DataModel::document: return "document";
  }
  return "?";
}

DataModel parse_model(std::string_view name) {
  for (auto m : {DataModel::relational, DataModel::array, DataModel::document}) {
    if (model_name(m) == name) return m;
  }
  throw Error(Errc::invalid_argument, "unknown data model '" + std::string(name) + "'");
}

DataModel native_model(Engine e) {
  switch (e) {
    case Engine::relational: return DataModel::relational;
    case Engine::array: return DataModel::array;
    case Engine::kv: return DataModel::document;
  }
  return DataModel::relational;
}

bool Island::has_engine(Engine e) const {
  return std::find(engines.begin(), engines.end(), e) != engines.end();
}

const std::vector<Island>& registry_islands() {
  static const std::vector<Island> islands = {
      {"RELATIONAL", DataModel::relational, Language::sql_select, {Engine::relational}, false},
      {"ARRAY", DataModel::array, Language::array_expr, {Engine::array, Engine::relational}, false},
      {"TEXT", DataModel::document, Language::text, {Engine::kv}, false},
      {"D_REL", DataModel::relational, Language::sql_script, {Engine::relational}, true},
      {"D_ARR", DataModel::array, Language::array_expr, {Engine::array}, true},
      {"D_KV", DataModel::document, Language::text, {Engine::kv}, true},
  };
  return islands;
}

const Island& find_island(std::string_view name) {
  for (const auto& i : registry_islands()) {
    if (i.name == name) return i;
  }
  throw Error(Errc::unknown_island, "unknown island '" + std::string(name) + "'");
}

bool is_island(std::string_view name) {
  const auto& all = registry_islands();
  return std::any_of(all.begin(), all.end(), [&](const Island& i) { return i.name == name; });
}

}  // namespace polystore::island
