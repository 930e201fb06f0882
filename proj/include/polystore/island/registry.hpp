#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace polystore::island {

enum class Engine { relational, array, kv };
enum class DataModel { relational, array, document };

std::string_view engine_name(Engine e);
Engine parse_engine(std::string_view name);  // throws Errc::invalid_argument
std::string_view model_name(DataModel m);
DataModel parse_model(std::string_view name);
DataModel native_model(Engine e);

/// Which language an island's query text is written in.
enum class Language { sql_select, sql_script, array_expr, text };

struct Island {
  std::string name;
  DataModel model;
  Language language;
  std::vector<Engine> engines;  // member engines, first is the home engine
  bool degenerate = false;

  bool has_engine(Engine e) const;
};

/// RELATIONAL, ARRAY, TEXT, and the degenerate D_REL, D_ARR, D_KV.
const std::vector<Island>& registry_islands();
/// Throws Errc::unknown_island.
const Island& find_island(std::string_view name);
bool is_island(std::string_view name);

}  // namespace polystore::island
