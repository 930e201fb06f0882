#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "polystore/poly/poly_ast.hpp"

namespace polystore::island {
class Polystore;
}

namespace polystore::mw {

struct Constant {
  bool numeric = false;
  std::string text;

  bool operator==(const Constant&) const = default;
};

/// Performance-history key of a query.
///
/// `structure` hashes the whole scope tree with literals replaced by typed
/// slots (`?num`, `?str`), referenced objects by `?obj`, placeholders by
/// `$c`/`$r`, keywords lowercased and whitespace collapsed. Two queries that
/// differ only in literal values therefore share `structure` and `objects`.
struct Signature {
  std::string structure;            // 16 hex digits
  std::vector<std::string> objects; // sorted, unique
  std::vector<Constant> constants;  // in order of appearance

  bool same_shape(const Signature& o) const { return structure == o.structure && objects == o.objects; }
  bool operator==(const Signature&) const = default;
};

/// Normalized text of one island fragment and the constants it contains.
struct Normalized {
  std::string text;
  std::vector<Constant> constants;
};
Normalized normalize(std::string_view text, const std::vector<std::string>& objects);

Signature signature_of(const poly::Decomposition& d, const island::Polystore& ps);

/// Normalized L1 on numeric constants, Hamming on text; constants lists of
/// different length (or kind) are infinitely far apart.
double constant_distance(const std::vector<Constant>& a, const std::vector<Constant>& b);

nlohmann::json to_json(const Signature& s);
Signature signature_from_json(const nlohmann::json& j);

}  // namespace polystore::mw
