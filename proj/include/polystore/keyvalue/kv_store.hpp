#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace polystore::kv {

using Fields = std::map<std::string, std::string>;

struct Document {
  std::string key;
  Fields fields;

  bool operator==(const Document&) const = default;
};

using TermCount = std::pair<std::string, std::int64_t>;

/// Splits on Unicode whitespace, lowercases ASCII letters, strips leading
/// and trailing ASCII punctuation; empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Ordered document store. Scans are concurrent, puts exclusive.
class KvStore {
 public:
  KvStore() = default;
  KvStore(const KvStore&) = delete;
  KvStore& operator=(const KvStore&) = delete;

  void put(std::string key, Fields fields);
  std::optional<Document> get(const std::string& key) const;
  std::vector<Document> scan(std::string_view prefix) const;
  std::vector<TermCount> termcount(std::string_view prefix, const std::string& field) const;
  /// Removes every document under `prefix`; returns how many.
  std::size_t erase_prefix(std::string_view prefix);

  /// One `{"key":..., "fields":{...}}` object per line. Returns documents read.
  std::size_t load_jsonl(std::istream& in);

  std::size_t size() const;
  std::size_t resident_bytes() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Fields, std::less<>> docs_;
};

/// The TEXT island language: `scan('p')`, `get('k')`, `termcount('p','f')`.
/// A bare name `x` in place of a quoted argument means the prefix `x/`.
struct TextQuery {
  enum class Kind { scan, get, termcount } kind = Kind::scan;
  std::vector<std::string> args;
};

using TextOutput = std::variant<std::vector<Document>, std::vector<TermCount>>;

TextQuery parse_text_query(std::string_view text);
std::string render(const TextQuery& q);
TextOutput execute(const KvStore& store, const TextQuery& q);
TextOutput execute(const KvStore& store, std::string_view text);

}  // namespace polystore::kv
