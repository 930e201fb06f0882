#include "polystore/common/value.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <system_error>

#include "polystore/common/error.hpp"

namespace polystore {

std::string_view type_name(ColumnType type) {
  switch (type) {
    case ColumnType::int64: return "int64";
    case ColumnType::float64: return "float64";
    case ColumnType::text: return "text";
  }
  return "?";
}

ColumnType parse_type_name(std::string_view name) {
  if (name == "int64") return ColumnType::int64;
  if (name == "float64") return ColumnType::float64;
  if (name == "text") return ColumnType::text;
  throw Error(Errc::bad_literal, "unknown column type '" + std::string(name) + "'");
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw Error(Errc::type_incoercible, "text value used where a number is required");
}

std::string format_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

std::string to_text(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

Value parse_literal(std::string_view text, ColumnType type) {
  switch (type) {
    case ColumnType::int64: {
      std::int64_t out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw Error(Errc::bad_literal, "not an int64: '" + std::string(text) + "'");
      }
      return out;
    }
    case ColumnType::float64: {
      if (text == "nan") return std::nan("");
      if (text == "inf") return HUGE_VAL;
      if (text == "-inf") return -HUGE_VAL;
      double out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw Error(Errc::bad_literal, "not a float64: '" + std::string(text) + "'");
      }
      return out;
    }
    case ColumnType::text:
      return std::string(text);
  }
  return std::string(text);
}

int compare(const Value& a, const Value& b) {
  const bool an = is_numeric(a);
  const bool bn = is_numeric(b);
  if (an && bn) {
    if (a.index() == 0 && b.index() == 0) {
      auto x = std::get<std::int64_t>(a);
      auto y = std::get<std::int64_t>(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    double x = as_double(a);
    double y = as_double(b);
    if (std::isnan(x) || std::isnan(y)) {
      // NaN sorts last and equals itself, so canonical ordering stays total.
      if (std::isnan(x) && std::isnan(y)) return 0;
      return std::isnan(x) ? 1 : -1;
    }
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (an != bn) return an ? -1 : 1;
  int c = std::get<std::string>(a).compare(std::get<std::string>(b));
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

std::size_t ValueHash::operator()(const Value& v) const noexcept {
  if (const auto* s = std::get_if<std::string>(&v)) return std::hash<std::string>{}(*s);
  double d = v.index() == 0 ? static_cast<double>(std::get<std::int64_t>(v)) : std::get<double>(v);
  if (d == 0.0) d = 0.0;  // fold -0
  if (std::isnan(d)) return 0x7ff8;
  return std::hash<double>{}(d);
}

}  // namespace polystore
