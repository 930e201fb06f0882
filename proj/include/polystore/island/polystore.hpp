#pragma once

#include <atomic>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polystore/array/array_engine.hpp"
#include "polystore/island/cast.hpp"
#include "polystore/island/registry.hpp"
#include "polystore/island/result.hpp"
#include "polystore/keyvalue/kv_store.hpp"
#include "polystore/relational/relational_engine.hpp"

namespace polystore::island {

/// The three engines behind one catalog of islands.
///
/// An ARRAY-island object `X` lives either as array `X` in the array
/// engine or as cell table `X_cells` in the relational engine. The
/// directory remembers the shape of every cell table, since a table of
/// cells alone cannot say whether trailing cells were filtered out.
class Polystore {
 public:
  Polystore() = default;
  Polystore(const Polystore&) = delete;
  Polystore& operator=(const Polystore&) = delete;

  rel::RelationalEngine& relational() { return rel_; }
  array::ArrayEngine& arrays() { return arr_; }
  kv::KvStore& kv() { return kv_; }
  const rel::RelationalEngine& relational() const { return rel_; }
  const array::ArrayEngine& arrays() const { return arr_; }
  const kv::KvStore& kv() const { return kv_; }

  // Loading

  std::size_t load_csv(const std::string& table, std::istream& in);
  /// Returns the array's name; its cells go to `engine`.
  std::string load_array(std::istream& in, Engine engine = Engine::array);
  std::size_t load_jsonl(std::istream& in);

  /// Stores an array on either ARRAY-island engine.
  void store_array(array::DenseArray a, Engine engine, bool replace = false);

  // Shims

  /// Native text `engine` would run for `text`; throws Errc::untranslatable
  /// when the island operator has no form on that engine.
  std::string shim_translate(std::string_view island, Engine engine, std::string_view text) const;
  /// Cheap syntactic version of the above, usable on texts with placeholders.
  bool supports(std::string_view island, Engine engine, std::string_view text) const;

  /// Runs island text on one member engine and returns the result in the
  /// island's data model.
  Result execute(std::string_view island, Engine engine, std::string_view text);

  /// Objects named by island text (tables, arrays, or the store "kv").
  std::vector<std::string> referenced_objects(std::string_view text, std::string_view island) const;

  // Placement and migration

  /// Shape of an ARRAY-island object wherever it lives.
  array::ArrayShape array_shape(const std::string& name) const;
  /// Is the object directly usable by `engine` under `model`?
  bool resident(const std::string& object, DataModel model, Engine engine) const;
  /// Engines on which the object is resident.
  std::vector<Engine> locate(const std::string& object, DataModel model) const;

  /// Moves `object` between engines under `spec`. Returns the engine-level
  /// name of the new object (`<name>_cells` for arrays in the relational
  /// engine, `<name>/` for a document prefix).
  std::string cast_migrate(const std::string& object, Engine from, Engine to, const CastSpec& spec,
                           const std::string& target_name = "");

  /// Stores a result on `engine` in `model` under `name`, converting as
  /// needed. Returns the engine-level name.
  std::string materialize(const Result& r, DataModel model, Engine engine, const std::string& name);
  /// Removes what materialize created; missing objects are ignored.
  void drop_object(const std::string& name, DataModel model, Engine engine);

  std::size_t resident_bytes(Engine e) const;

  /// Unique prefix for temp objects.
  std::string temp_name(std::string_view tag);

 private:
  array::DenseArray read_array_object(const std::string& name, Engine engine) const;
  void register_cells(const std::string& name, const array::ArrayShape& shape);

  rel::RelationalEngine rel_;
  array::ArrayEngine arr_;
  kv::KvStore kv_;

  mutable std::mutex directory_mutex_;
  std::map<std::string, array::ArrayShape> directory_;  // by array name
  std::atomic<std::uint64_t> temp_counter_{0};
};

}  // namespace polystore::island
