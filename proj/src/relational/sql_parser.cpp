#include "polystore/relational/sql_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"

namespace polystore::rel {

namespace {

enum class Tok { ident, placeholder, integer, number, string, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t pos = 0;
};

// Outer-join and ORDER/HAVING/UNION words are reserved so they can never be
// taken for an alias and silently change a query's meaning.
constexpr std::array<std::string_view, 28> kReserved = {
    "select", "distinct", "from",  "join",  "inner",  "on",    "where", "and",  "group", "by",
    "limit",  "as",       "create", "table", "insert", "into", "drop",  "exists", "left", "right",
    "full",   "outer",    "cross", "order", "having", "union", "or",    "not"};

bool is_reserved(std::string_view word) {
  const auto lower = text::to_lower_ascii(word);
  return std::find(kReserved.begin(), kReserved.end(), lower) != kReserved.end();
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (text::is_ident_start(c)) {
      while (i < src.size() && text::is_ident_char(src[i])) ++i;
      out.push_back({Tok::ident, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (c == '$') {
      ++i;
      while (i < src.size() && text::is_ident_char(src[i])) ++i;
      if (i == start + 1) throw ParseError("bare '$'", start);
      out.push_back({Tok::placeholder, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      bool is_float = false;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && src[i] == '.') {
        is_float = true;
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          is_float = true;
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      if (i < src.size() && text::is_ident_start(src[i])) {
        throw ParseError("malformed number", start);
      }
      out.push_back({is_float ? Tok::number : Tok::integer,
                     std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < src.size()) {
        if (src[i] == '\'') {
          if (i + 1 < src.size() && src[i + 1] == '\'') {
            value += '\'';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value += src[i++];
      }
      if (!closed) throw ParseError("unterminated string", start);
      out.push_back({Tok::string, std::move(value), start});
      continue;
    }
    static constexpr std::array<std::string_view, 4> two = {"<>", "!=", "<=", ">="};
    bool matched = false;
    for (auto op : two) {
      if (src.substr(i, 2) == op) {
        out.push_back({Tok::symbol, std::string(op), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),.*+-/%=<>;").find(c) != std::string_view::npos) {
      out.push_back({Tok::symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }
  out.push_back({Tok::end, "", src.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Statement statement() {
    if (keyword("select")) return select_body();
    if (keyword("create")) {
      expect_keyword("table");
      CreateAsStmt stmt;
      stmt.table = identifier("table name");
      expect_keyword("as");
      expect_keyword("select");
      stmt.select = select_body();
      return stmt;
    }
    if (keyword("insert")) {
      expect_keyword("into");
      InsertSelectStmt stmt;
      stmt.table = identifier("table name");
      expect_keyword("select");
      stmt.select = select_body();
      return stmt;
    }
    if (keyword("drop")) {
      expect_keyword("table");
      DropStmt stmt;
      if (peek_keyword("if")) {
        advance();
        expect_keyword("exists");
        stmt.if_exists = true;
      }
      stmt.table = identifier("table name");
      return stmt;
    }
    fail("expected SELECT, CREATE, INSERT or DROP");
  }

  bool at_end() const { return cur().kind == Tok::end; }
  bool symbol(std::string_view s) {
    if (cur().kind == Tok::symbol && cur().text == s) {
      advance();
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const auto& t = cur();
    throw ParseError(msg + (t.kind == Tok::end ? " (found end of input)"
                                               : " (found '" + t.text + "')"),
                     t.pos);
  }

 private:
  const Token& cur() const { return toks_[idx_]; }
  void advance() {
    if (idx_ + 1 < toks_.size()) ++idx_;
  }

  bool peek_keyword(std::string_view kw) const {
    return cur().kind == Tok::ident && text::iequals(cur().text, kw);
  }
  bool keyword(std::string_view kw) {
    if (peek_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_keyword(std::string_view kw) {
    if (!keyword(kw)) fail("expected " + text::to_upper_ascii(kw));
  }
  void expect_symbol(std::string_view s) {
    if (!symbol(s)) fail("expected '" + std::string(s) + "'");
  }
  std::string identifier(const char* what) {
    if (cur().kind != Tok::ident || is_reserved(cur().text)) fail(std::string("expected ") + what);
    std::string name = cur().text;
    advance();
    return name;
  }

  SelectStmt select_body() {
    SelectStmt s;
    s.distinct = keyword("distinct");
    if (symbol("*")) {
      s.star = true;
    } else {
      do {
        SelectItem item;
        item.expr = expr();
        if (keyword("as")) {
          item.alias = identifier("alias");
        } else if (cur().kind == Tok::ident && !is_reserved(cur().text)) {
          item.alias = identifier("alias");
        }
        s.items.push_back(std::move(item));
      } while (symbol(","));
    }
    expect_keyword("from");
    s.from.push_back(table_ref());
    if (symbol(",")) {
      s.from.push_back(table_ref());
    } else if (peek_keyword("join") || peek_keyword("inner")) {
      if (keyword("inner")) {
        if (!peek_keyword("join")) fail("expected JOIN");
      }
      expect_keyword("join");
      s.from.push_back(table_ref());
      expect_keyword("on");
      s.join_on = comparison();
    }
    if (keyword("where")) {
      do {
        s.where.push_back(comparison());
      } while (keyword("and"));
    }
    if (keyword("group")) {
      expect_keyword("by");
      do {
        s.group_by.push_back(expr());
      } while (symbol(","));
    }
    if (keyword("limit")) {
      if (cur().kind != Tok::integer) fail("expected integer after LIMIT");
      std::int64_t n = 0;
      const auto& t = cur().text;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
      if (ec != std::errc()) fail("LIMIT out of range");
      s.limit = n;
      advance();
    }
    return s;
  }

  TableRef table_ref() {
    TableRef ref;
    ref.position = cur().pos;
    if (cur().kind == Tok::placeholder) {
      ref.name = cur().text;
      ref.placeholder = true;
      advance();
    } else {
      ref.name = identifier("table name");
    }
    if (keyword("as")) {
      ref.alias = identifier("alias");
    } else if (cur().kind == Tok::ident && !is_reserved(cur().text)) {
      ref.alias = identifier("alias");
    }
    return ref;
  }

  Comparison comparison() {
    Comparison c;
    c.position = cur().pos;
    c.lhs = expr();
    const auto& t = cur();
    if (t.kind != Tok::symbol) fail("expected comparison operator");
    if (t.text == "=") c.op = CmpOp::eq;
    else if (t.text == "<>" || t.text == "!=") c.op = CmpOp::ne;
    else if (t.text == "<") c.op = CmpOp::lt;
    else if (t.text == "<=") c.op = CmpOp::le;
    else if (t.text == ">") c.op = CmpOp::gt;
    else if (t.text == ">=") c.op = CmpOp::ge;
    else fail("expected comparison operator");
    advance();
    c.rhs = expr();
    return c;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) p_.fail("expression nested too deeply");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };
  static constexpr int kMaxDepth = 200;

  static ExprPtr make(std::size_t pos, auto node) {
    auto e = std::make_shared<Expr>();
    e->node = std::move(node);
    e->position = pos;
    return e;
  }

  ExprPtr expr() {
    DepthGuard guard(*this);
    auto lhs = term();
    while (cur().kind == Tok::symbol && (cur().text == "+" || cur().text == "-")) {
      const auto pos = cur().pos;
      const BinOp op = cur().text == "+" ? BinOp::add : BinOp::sub;
      advance();
      lhs = make(pos, Binary{op, lhs, term()});
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = unary();
    while (cur().kind == Tok::symbol &&
           (cur().text == "*" || cur().text == "/" || cur().text == "%")) {
      const auto pos = cur().pos;
      const BinOp op = cur().text == "*" ? BinOp::mul : (cur().text == "/" ? BinOp::div : BinOp::mod);
      advance();
      lhs = make(pos, Binary{op, lhs, unary()});
    }
    return lhs;
  }

  ExprPtr unary() {
    DepthGuard guard(*this);
    if (cur().kind == Tok::symbol && cur().text == "-") {
      const auto pos = cur().pos;
      advance();
      if (cur().kind == Tok::integer || cur().kind == Tok::number) {
        auto lit = number_literal("-");
        return make(pos, std::move(lit));
      }
      return make(pos, Negate{unary()});
    }
    return primary();
  }

  Literal number_literal(const std::string& sign) {
    const auto text = sign + cur().text;
    try {
      Literal lit{cur().kind == Tok::integer ? parse_literal(text, ColumnType::int64)
                                             : parse_literal(text, ColumnType::float64)};
      advance();
      return lit;
    } catch (const Error&) {
      fail("numeric literal out of range");
    }
  }

  ExprPtr primary() {
    const auto pos = cur().pos;
    switch (cur().kind) {
      case Tok::integer:
      case Tok::number:
        return make(pos, number_literal(""));
      case Tok::string: {
        Literal lit{Value{cur().text}};
        advance();
        return make(pos, std::move(lit));
      }
      case Tok::symbol:
        if (symbol("(")) {
          auto e = expr();
          expect_symbol(")");
          return e;
        }
        fail("expected expression");
      case Tok::ident: {
        const std::string word = cur().text;
        if (is_reserved(word)) fail("expected expression");
        const bool is_call = toks_[idx_ + 1].kind == Tok::symbol && toks_[idx_ + 1].text == "(";
        if (is_call) return call(word, pos);
        advance();
        if (symbol(".")) {
          if (cur().kind != Tok::ident || is_reserved(cur().text)) fail("expected column name");
          ColumnRef ref{word, cur().text};
          advance();
          return make(pos, std::move(ref));
        }
        return make(pos, ColumnRef{"", word});
      }
      case Tok::placeholder:
        fail("placeholder not allowed in expression");
      case Tok::end:
        fail("expected expression");
    }
    fail("expected expression");
  }

  ExprPtr call(const std::string& name, std::size_t pos) {
    const auto fn = text::to_lower_ascii(name);
    advance();  // name
    advance();  // (
    auto aggregate = [&](AggFn f) -> ExprPtr {
      if (f == AggFn::count && symbol("*")) {
        expect_symbol(")");
        return make(pos, Aggregate{f, nullptr});
      }
      auto arg = expr();
      expect_symbol(")");
      return make(pos, Aggregate{f, arg});
    };
    if (fn == "count") return aggregate(AggFn::count);
    if (fn == "sum") return aggregate(AggFn::sum);
    if (fn == "min") return aggregate(AggFn::min);
    if (fn == "max") return aggregate(AggFn::max);

    ScalarFn f;
    std::size_t arity = 1;
    if (fn == "floor") f = ScalarFn::floor;
    else if (fn == "ln") f = ScalarFn::ln;
    else if (fn == "sqrt") f = ScalarFn::sqrt;
    else if (fn == "abs") f = ScalarFn::abs;
    else if (fn == "least") { f = ScalarFn::least; arity = 2; }
    else if (fn == "greatest") { f = ScalarFn::greatest; arity = 2; }
    else throw ParseError("unknown function '" + name + "'", pos);
    Call c{f, {}};
    c.args.push_back(expr());
    while (symbol(",")) c.args.push_back(expr());
    expect_symbol(")");
    if (c.args.size() != arity) {
      throw ParseError(name + " takes " + std::to_string(arity) + " argument(s)", pos);
    }
    return make(pos, std::move(c));
  }

  std::vector<Token> toks_;
  std::size_t idx_ = 0;
  int depth_ = 0;
};

}  // namespace

Statement parse_sql(std::string_view text) {
  Parser p(lex(text));
  auto stmt = p.statement();
  p.symbol(";");
  if (!p.at_end()) p.fail("unexpected trailing input");
  return stmt;
}

std::vector<Statement> parse_sql_script(std::string_view text) {
  Parser p(lex(text));
  std::vector<Statement> out;
  while (!p.at_end()) {
    if (p.symbol(";")) continue;
    out.push_back(p.statement());
    if (!p.at_end() && !p.symbol(";")) p.fail("expected ';' between statements");
  }
  return out;
}

std::vector<std::string> referenced_tables(const Statement& stmt) {
  std::set<std::string> names;
  auto from_select = [&names](const SelectStmt& s) {
    for (const auto& t : s.from) {
      if (!t.placeholder) names.insert(t.name);
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SelectStmt>) {
          from_select(s);
        } else if constexpr (std::is_same_v<T, DropStmt>) {
          names.insert(s.table);
        } else {
          names.insert(s.table);
          from_select(s.select);
        }
      },
      stmt);
  return {names.begin(), names.end()};
}

}  // namespace polystore::rel
