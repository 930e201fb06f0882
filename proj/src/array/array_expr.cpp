#include "polystore/array/array_expr.hpp"

#include <cctype>
#include <charconv>
#include <set>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"
#include "polystore/common/value.hpp"
#include "polystore/kernels/kernels.hpp"

namespace polystore::array {

bool ValuePredicate::test(double v) const {
  switch (op) {
    case Cmp::eq: return v == operand;
    case Cmp::ne: return v != operand && v == v;
    case Cmp::lt: return v < operand;
    case Cmp::le: return v <= operand;
    case Cmp::gt: return v > operand;
    case Cmp::ge: return v >= operand;
  }
  return false;
}

std::string_view op_name(ArrayOp op) {
  switch (op) {
    case ArrayOp::ref: return "ref";
    case ArrayOp::scan: return "scan";
    case ArrayOp::count: return "count";
    case ArrayOp::distinct: return "distinct";
    case ArrayOp::filter: return "filter";
    case ArrayOp::multiply: return "multiply";
    case ArrayOp::dwt_haar: return "dwt_haar";
    case ArrayOp::bin_hist: return "bin_hist";
    case ArrayOp::subarray: return "subarray";
  }
  return "?";
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  ArrayExpr parse() {
    auto e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string word() {
    skip_ws();
    const auto start = pos_;
    if (pos_ < src_.size() && src_[pos_] == '$') ++pos_;
    while (pos_ < src_.size() && text::is_ident_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  double number() {
    skip_ws();
    const auto start = pos_;
    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) ++pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                  src_[pos_] == '.' ||
                                  ((src_[pos_] == '-' || src_[pos_] == '+') &&
                                   (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    auto text = src_.substr(start, pos_ - start);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      pos_ = start;
      fail("expected number");
    }
    return v;
  }

  std::int64_t integer() {
    skip_ws();
    const auto start = pos_;
    if (pos_ < src_.size() && src_[pos_] == '-') ++pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const auto text = src_.substr(start, pos_ - start);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      pos_ = start;
      fail("expected integer");
    }
    return v;
  }

  ValuePredicate predicate() {
    skip_ws();
    const auto at = pos_;
    if (word() != "val") {
      pos_ = at;
      fail("expected 'val' in filter predicate");
    }
    skip_ws();
    ValuePredicate p;
    auto two = src_.substr(pos_, 2);
    if (two == "<=") { p.op = Cmp::le; pos_ += 2; }
    else if (two == ">=") { p.op = Cmp::ge; pos_ += 2; }
    else if (two == "<>" || two == "!=") { p.op = Cmp::ne; pos_ += 2; }
    else if (two == "==") { p.op = Cmp::eq; pos_ += 2; }
    else if (accept('<')) p.op = Cmp::lt;
    else if (accept('>')) p.op = Cmp::gt;
    else if (accept('=')) p.op = Cmp::eq;
    else fail("expected comparison operator");
    p.operand = number();
    return p;
  }

  ArrayExpr expr() {
    if (++depth_ > 200) fail("expression nested too deeply");
    skip_ws();
    ArrayExpr e;
    e.position = pos_;
    const auto w = word();
    if (w.empty()) fail("expected array name or operator");
    if (w[0] == '$') {
      if (w.size() == 1) fail("bare '$'");
      e.op = ArrayOp::ref;
      e.name = w;
      e.placeholder = true;
      --depth_;
      return e;
    }
    if (!text::is_ident_start(w[0])) {
      pos_ = e.position;
      fail("expected array name or operator");
    }
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != '(') {
      e.op = ArrayOp::ref;
      e.name = w;
      --depth_;
      return e;
    }
    ++pos_;
    if (w == "scan" || w == "count" || w == "distinct" || w == "dwt_haar") {
      e.op = w == "scan"       ? ArrayOp::scan
             : w == "count"    ? ArrayOp::count
             : w == "distinct" ? ArrayOp::distinct
                               : ArrayOp::dwt_haar;
      e.args.push_back(expr());
    } else if (w == "multiply") {
      e.op = ArrayOp::multiply;
      e.args.push_back(expr());
      expect(',');
      e.args.push_back(expr());
    } else if (w == "filter") {
      e.op = ArrayOp::filter;
      e.args.push_back(expr());
      expect(',');
      e.predicates.push_back(predicate());
      while (true) {
        skip_ws();
        const auto save = pos_;
        if (word() == "and") {
          e.predicates.push_back(predicate());
        } else {
          pos_ = save;
          break;
        }
      }
    } else if (w == "bin_hist") {
      e.op = ArrayOp::bin_hist;
      e.args.push_back(expr());
      expect(',');
      e.args.push_back(expr());
      expect(',');
      e.ints.push_back(integer());
    } else if (w == "subarray") {
      e.op = ArrayOp::subarray;
      e.args.push_back(expr());
      while (accept(',')) {
        e.ints.push_back(integer());
        expect(',');
        e.ints.push_back(integer());
      }
    } else {
      throw ParseError("unknown array operator '" + w + "'", e.position);
    }
    expect(')');
    --depth_;
    return e;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

std::string cmp_text(Cmp op) {
  switch (op) {
    case Cmp::eq: return "=";
    case Cmp::ne: return "<>";
    case Cmp::lt: return "<";
    case Cmp::le: return "<=";
    case Cmp::gt: return ">";
    case Cmp::ge: return ">=";
  }
  return "=";
}

void collect(const ArrayExpr& e, std::set<std::string>& out) {
  if (e.op == ArrayOp::ref && !e.placeholder) out.insert(e.name);
  for (const auto& a : e.args) collect(a, out);
}

[[noreturn]] void shape_error(const ArrayExpr& e, const std::string& msg) {
  throw Error(Errc::shape_mismatch, std::string(op_name(e.op)) + ": " + msg + " at position " +
                                        std::to_string(e.position));
}

ExprType array_arg(const ArrayExpr& e, const ArrayExpr& arg, const ShapeLookup& lookup) {
  auto t = check(arg, lookup);
  if (t.scalar) shape_error(e, "operand is a scalar");
  return t;
}

}  // namespace

ArrayExpr parse_array_expr(std::string_view text) { return Parser(text).parse(); }

std::string render(const ArrayExpr& e) {
  if (e.op == ArrayOp::ref) return e.name;
  std::string out(op_name(e.op));
  out += '(';
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (i) out += ',';
    out += render(e.args[i]);
  }
  if (e.op == ArrayOp::filter) {
    for (std::size_t i = 0; i < e.predicates.size(); ++i) {
      out += i == 0 ? "," : " and ";
      out += "val" + cmp_text(e.predicates[i].op) + format_double(e.predicates[i].operand);
    }
  }
  for (auto v : e.ints) out += "," + std::to_string(v);
  out += ')';
  return out;
}

std::vector<std::string> referenced_arrays(const ArrayExpr& expr) {
  std::set<std::string> names;
  collect(expr, names);
  return {names.begin(), names.end()};
}

ExprType check(const ArrayExpr& e, const ShapeLookup& lookup) {
  switch (e.op) {
    case ArrayOp::ref: {
      auto shape = lookup(e.name);
      return ExprType{false, shape.dims, shape.filtered, true};
    }
    case ArrayOp::scan:
      return array_arg(e, e.args[0], lookup);
    case ArrayOp::count:
      array_arg(e, e.args[0], lookup);
      return ExprType{true, {}, false, true};
    case ArrayOp::distinct:
      array_arg(e, e.args[0], lookup);
      return ExprType{false, {{"value", 0}}, false, false};
    case ArrayOp::filter: {
      auto t = array_arg(e, e.args[0], lookup);
      t.filtered = true;
      return t;
    }
    case ArrayOp::multiply: {
      auto a = array_arg(e, e.args[0], lookup);
      auto b = array_arg(e, e.args[1], lookup);
      if (a.dims.size() != 2 || b.dims.size() != 2) shape_error(e, "operands must be rank 2");
      if (a.filtered || b.filtered) shape_error(e, "operands must not be filtered");
      if (a.length_known && b.length_known && a.dims[1].length != b.dims[0].length) {
        shape_error(e, "inner dimensions differ (" + std::to_string(a.dims[1].length) + " vs " +
                           std::to_string(b.dims[0].length) + ")");
      }
      Dim second = b.dims[1];
      if (second.name == a.dims[0].name) second.name += "_2";
      return ExprType{false, {a.dims[0], second}, false, a.length_known && b.length_known};
    }
    case ArrayOp::dwt_haar: {
      auto t = array_arg(e, e.args[0], lookup);
      if (t.dims.size() > 2) shape_error(e, "operand must be rank 1 or 2");
      if (t.filtered) shape_error(e, "operand must not be filtered");
      if (t.length_known) {
        auto& last = t.dims.back();
        last.length = kernels::floor_power_of_two(last.length);
        if (last.length == 0) shape_error(e, "empty signal");
      }
      return t;
    }
    case ArrayOp::bin_hist: {
      auto t = array_arg(e, e.args[0], lookup);
      auto edges = array_arg(e, e.args[1], lookup);
      if (t.dims.size() > 2) shape_error(e, "operand must be rank 1 or 2");
      if (t.filtered) shape_error(e, "operand must not be filtered");
      if (e.ints.at(0) < 1) shape_error(e, "bin count must be positive");
      const auto bins = static_cast<std::size_t>(e.ints[0]);
      const auto length = t.dims.back().length;
      if (t.length_known && !kernels::is_power_of_two(length)) {
        shape_error(e, "signal length " + std::to_string(length) + " is not a power of two");
      }
      const auto groups = kernels::haar_group_count(length);
      if (edges.dims.size() != 2 || edges.dims[1].length != 2 ||
          (t.length_known && edges.length_known && edges.dims[0].length != groups)) {
        shape_error(e, "edges must be a " + std::to_string(groups) + " x 2 array");
      }
      ExprType out;
      if (t.dims.size() == 2) out.dims.push_back(t.dims[0]);
      out.dims.push_back({t.dims.back().name == "bin" ? "bin_2" : "bin", groups * bins});
      out.length_known = t.length_known;
      return out;
    }
    case ArrayOp::subarray: {
      auto t = array_arg(e, e.args[0], lookup);
      if (e.ints.size() != 2 * t.dims.size()) {
        shape_error(e, "needs one lo,hi pair per dimension");
      }
      for (std::size_t d = 0; d < t.dims.size(); ++d) {
        const auto lo = e.ints[2 * d];
        const auto hi = e.ints[2 * d + 1];
        if (lo < 0 || hi < lo || (t.length_known && static_cast<std::size_t>(hi) >= t.dims[d].length)) {
          shape_error(e, "bounds [" + std::to_string(lo) + "," + std::to_string(hi) +
                             "] outside dimension '" + t.dims[d].name + "'");
        }
        t.dims[d].length = static_cast<std::size_t>(hi - lo + 1);
      }
      t.length_known = true;
      return t;
    }
  }
  shape_error(e, "unknown operator");
}

}  // namespace polystore::array
