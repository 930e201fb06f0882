#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace polystore {

enum class ColumnType { int64, float64, text };

using Value = std::variant<std::int64_t, double, std::string>;

std::string_view type_name(ColumnType type);
ColumnType parse_type_name(std::string_view name);  // throws Errc::bad_literal

inline ColumnType type_of(const Value& v) {
  return static_cast<ColumnType>(v.index());
}

inline bool is_numeric(const Value& v) { return v.index() != 2; }

/// Numeric view; throws Errc::type_incoercible on text.
double as_double(const Value& v);

/// Shortest text that reads back to the same value.
std::string to_text(const Value& v);
std::string format_double(double d);

/// Parse `text` as a literal of `type`; throws Errc::bad_literal.
Value parse_literal(std::string_view text, ColumnType type);

/// Three-way comparison used by predicates and canonical ordering. Numbers
/// compare numerically across int64/float64; text sorts after numbers.
int compare(const Value& a, const Value& b);

inline bool values_equal(const Value& a, const Value& b) { return compare(a, b) == 0; }

/// Hash consistent with values_equal.
struct ValueHash {
  std::size_t operator()(const Value& v) const noexcept;
};
struct ValueEq {
  bool operator()(const Value& a, const Value& b) const noexcept { return compare(a, b) == 0; }
};

}  // namespace polystore
