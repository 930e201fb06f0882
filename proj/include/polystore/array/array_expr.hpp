#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "polystore/array/dense_array.hpp"

namespace polystore::array {

enum class ArrayOp { ref, scan, count, distinct, filter, multiply, dwt_haar, bin_hist, subarray };

enum class Cmp { eq, ne, lt, le, gt, ge };

/// `val <op> number`, the only predicate form `filter` accepts.
struct ValuePredicate {
  Cmp op = Cmp::eq;
  double operand = 0.0;

  bool test(double v) const;
};

/// Parsed functional array expression.
struct ArrayExpr {
  ArrayOp op = ArrayOp::ref;
  std::string name;          // ref only
  bool placeholder = false;  // ref to a `$c0`-style middleware slot
  std::vector<ArrayExpr> args;
  std::vector<ValuePredicate> predicates;  // filter
  std::vector<std::int64_t> ints;          // bin_hist: bins; subarray: lo,hi pairs
  std::size_t position = 0;
};

std::string_view op_name(ArrayOp op);

/// Throws ParseError with the byte offset.
ArrayExpr parse_array_expr(std::string_view text);

/// Canonical rendering; parse(render(e)) == e.
std::string render(const ArrayExpr& expr);

/// Sorted array names referenced, placeholders excluded.
std::vector<std::string> referenced_arrays(const ArrayExpr& expr);

/// Static shape of a stored array.
struct ArrayShape {
  std::vector<Dim> dims;
  bool filtered = false;
};

/// Static type of an expression. `length_known` is false for the output of
/// distinct, whose length is data-dependent.
struct ExprType {
  bool scalar = false;
  std::vector<Dim> dims;
  bool filtered = false;
  bool length_known = true;
};

using ShapeLookup = std::function<ArrayShape(const std::string& name)>;

/// Type-checks `expr`; throws Errc::shape_mismatch (or the lookup's error).
ExprType check(const ArrayExpr& expr, const ShapeLookup& lookup);

}  // namespace polystore::array
