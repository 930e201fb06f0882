#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polystore/common/value.hpp"

namespace polystore::rel {

enum class CmpOp { eq, ne, lt, le, gt, ge };
enum class BinOp { add, sub, mul, div, mod };
enum class AggFn { sum, count, min, max };
enum class ScalarFn { floor, ln, sqrt, abs, least, greatest };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct ColumnRef {
  std::string qualifier;  // empty when unqualified
  std::string name;
};

struct Literal {
  Value value;
};

struct Binary {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Negate {
  ExprPtr operand;
};

struct Call {
  ScalarFn fn;
  std::vector<ExprPtr> args;
};

/// `arg` is null for COUNT(*).
struct Aggregate {
  AggFn fn;
  ExprPtr arg;
};

struct Expr {
  std::variant<ColumnRef, Literal, Binary, Negate, Call, Aggregate> node;
  std::size_t position = 0;
};

struct Comparison {
  CmpOp op;
  ExprPtr lhs;
  ExprPtr rhs;
  std::size_t position = 0;
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;
};

struct TableRef {
  std::string name;
  std::string alias;
  bool placeholder = false;  // `$c0`-style middleware placeholder
  std::size_t position = 0;
};

struct SelectStmt {
  bool distinct = false;
  bool star = false;
  std::vector<SelectItem> items;
  std::vector<TableRef> from;             // one table, or two for a join
  std::optional<Comparison> join_on;      // JOIN ... ON form
  std::vector<Comparison> where;          // conjunction
  std::vector<ExprPtr> group_by;
  std::optional<std::int64_t> limit;
};

struct CreateAsStmt {
  std::string table;
  SelectStmt select;
};

struct InsertSelectStmt {
  std::string table;
  SelectStmt select;
};

struct DropStmt {
  std::string table;
  bool if_exists = false;
};

using Statement = std::variant<SelectStmt, CreateAsStmt, InsertSelectStmt, DropStmt>;

}  // namespace polystore::rel
