#include "polystore/relational/relational_engine.hpp"

#include <algorithm>
#include <bit>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"
#include "polystore/relational/csv.hpp"
#include "polystore/relational/sql_parser.hpp"

namespace polystore::rel {

namespace {

struct Source {
  const Relation* rel = nullptr;
  std::string name;
  std::string alias;
};

struct Bound {
  enum class Kind { column, literal, binary, negate, call, aggregate };
  Kind kind = Kind::literal;
  ColumnType type = ColumnType::int64;
  int source = 0;
  std::size_t column = 0;
  Value literal;
  BinOp bop{};
  ScalarFn fn{};
  AggFn afn{};
  std::size_t slot = 0;
  unsigned mask = 0;  // bit i set when source i is referenced
  std::vector<Bound> kids;
};

struct BoundCmp {
  CmpOp op;
  Bound lhs;
  Bound rhs;
  unsigned mask = 0;
};

struct Ctx {
  const std::array<const Relation*, 2>* rels;
  const std::array<std::size_t, 2>* rows;
  const std::vector<Value>* aggs;
};

std::string pos_suffix(std::size_t pos) { return " at position " + std::to_string(pos); }

class Binder {
 public:
  explicit Binder(const std::vector<Source>& sources) : sources_(sources) {}

  /// Aggregates encountered are appended to `aggs` (null forbids them).
  Bound bind(const Expr& e, std::vector<Bound>* aggs, bool inside_agg = false) {
    return std::visit([&](const auto& n) { return bind_node(n, e.position, aggs, inside_agg); },
                      e.node);
  }

  BoundCmp bind_cmp(const Comparison& c) {
    BoundCmp out{c.op, bind(*c.lhs, nullptr), bind(*c.rhs, nullptr), 0};
    const bool lt = out.lhs.type == ColumnType::text;
    const bool rt = out.rhs.type == ColumnType::text;
    if (lt != rt) {
      throw Error(Errc::type_incoercible, "comparison between text and number" + pos_suffix(c.position));
    }
    out.mask = out.lhs.mask | out.rhs.mask;
    return out;
  }

 private:
  Bound bind_node(const ColumnRef& ref, std::size_t pos, std::vector<Bound>*, bool) {
    std::optional<std::pair<int, std::size_t>> hit;
    for (std::size_t s = 0; s < sources_.size(); ++s) {
      const auto& src = sources_[s];
      if (!ref.qualifier.empty() && ref.qualifier != src.alias && ref.qualifier != src.name) {
        continue;
      }
      if (auto idx = src.rel->column_index(ref.name)) {
        if (hit) {
          throw Error(Errc::unknown_column, "ambiguous column '" + ref.name + "'" + pos_suffix(pos));
        }
        hit = std::make_pair(static_cast<int>(s), *idx);
      }
    }
    if (!hit) {
      const auto full = ref.qualifier.empty() ? ref.name : ref.qualifier + "." + ref.name;
      throw Error(Errc::unknown_column, "unknown column '" + full + "'" + pos_suffix(pos));
    }
    Bound b;
    b.kind = Bound::Kind::column;
    b.source = hit->first;
    b.column = hit->second;
    b.type = sources_[hit->first].rel->schema()[hit->second].type;
    b.mask = 1u << hit->first;
    return b;
  }

  Bound bind_node(const Literal& lit, std::size_t, std::vector<Bound>*, bool) {
    Bound b;
    b.kind = Bound::Kind::literal;
    b.literal = lit.value;
    b.type = type_of(lit.value);
    return b;
  }

  static void require_numeric(const Bound& b, std::size_t pos) {
    if (b.type == ColumnType::text) {
      throw Error(Errc::type_incoercible, "arithmetic on text" + pos_suffix(pos));
    }
  }

  Bound bind_node(const Binary& bin, std::size_t pos, std::vector<Bound>* aggs, bool inside) {
    Bound b;
    b.kind = Bound::Kind::binary;
    b.bop = bin.op;
    b.kids.push_back(bind(*bin.lhs, aggs, inside));
    b.kids.push_back(bind(*bin.rhs, aggs, inside));
    require_numeric(b.kids[0], pos);
    require_numeric(b.kids[1], pos);
    b.type = (b.kids[0].type == ColumnType::int64 && b.kids[1].type == ColumnType::int64)
                 ? ColumnType::int64
                 : ColumnType::float64;
    b.mask = b.kids[0].mask | b.kids[1].mask;
    return b;
  }

  Bound bind_node(const Negate& neg, std::size_t pos, std::vector<Bound>* aggs, bool inside) {
    Bound b;
    b.kind = Bound::Kind::negate;
    b.kids.push_back(bind(*neg.operand, aggs, inside));
    require_numeric(b.kids[0], pos);
    b.type = b.kids[0].type;
    b.mask = b.kids[0].mask;
    return b;
  }

  Bound bind_node(const Call& call, std::size_t pos, std::vector<Bound>* aggs, bool inside) {
    Bound b;
    b.kind = Bound::Kind::call;
    b.fn = call.fn;
    for (const auto& a : call.args) {
      b.kids.push_back(bind(*a, aggs, inside));
      require_numeric(b.kids.back(), pos);
      b.mask |= b.kids.back().mask;
    }
    switch (call.fn) {
      case ScalarFn::floor: b.type = ColumnType::int64; break;
      case ScalarFn::ln:
      case ScalarFn::sqrt: b.type = ColumnType::float64; break;
      case ScalarFn::abs: b.type = b.kids[0].type; break;
      case ScalarFn::least:
      case ScalarFn::greatest:
        b.type = (b.kids[0].type == ColumnType::int64 && b.kids[1].type == ColumnType::int64)
                     ? ColumnType::int64
                     : ColumnType::float64;
        break;
    }
    return b;
  }

  Bound bind_node(const Aggregate& agg, std::size_t pos, std::vector<Bound>* aggs, bool inside) {
    if (aggs == nullptr) {
      throw Error(Errc::invalid_argument, "aggregate not allowed here" + pos_suffix(pos));
    }
    if (inside) throw Error(Errc::invalid_argument, "nested aggregate" + pos_suffix(pos));
    Bound a;
    a.kind = Bound::Kind::aggregate;
    a.afn = agg.fn;
    if (agg.arg) {
      a.kids.push_back(bind(*agg.arg, aggs, true));
      a.mask = a.kids[0].mask;
    }
    switch (agg.fn) {
      case AggFn::count: a.type = ColumnType::int64; break;
      case AggFn::sum:
        require_numeric(a.kids.at(0), pos);
        a.type = a.kids[0].type;
        break;
      case AggFn::min:
      case AggFn::max: a.type = a.kids.at(0).type; break;
    }
    a.slot = aggs->size();
    aggs->push_back(a);
    // The reference left in the item expression reads the finished value.
    Bound ref;
    ref.kind = Bound::Kind::aggregate;
    ref.afn = agg.fn;
    ref.type = a.type;
    ref.slot = a.slot;
    return ref;
  }

  const std::vector<Source>& sources_;
};

Value eval(const Bound& b, const Ctx& ctx);

std::int64_t int_of(const Value& v) { return std::get<std::int64_t>(v); }

Value eval_binary(const Bound& b, const Ctx& ctx) {
  const Value l = eval(b.kids[0], ctx);
  const Value r = eval(b.kids[1], ctx);
  if (b.type == ColumnType::int64) {
    const auto x = int_of(l);
    const auto y = int_of(r);
    switch (b.bop) {
      case BinOp::add: return x + y;
      case BinOp::sub: return x - y;
      case BinOp::mul: return x * y;
      case BinOp::div:
        if (y == 0) throw Error(Errc::execution, "integer division by zero");
        return x / y;
      case BinOp::mod:
        if (y == 0) throw Error(Errc::execution, "integer modulo by zero");
        return x % y;
    }
  }
  const double x = as_double(l);
  const double y = as_double(r);
  switch (b.bop) {
    case BinOp::add: return x + y;
    case BinOp::sub: return x - y;
    case BinOp::mul: return x * y;
    case BinOp::div: return x / y;
    case BinOp::mod: return std::fmod(x, y);
  }
  return 0.0;
}

Value eval_call(const Bound& b, const Ctx& ctx) {
  const Value a = eval(b.kids[0], ctx);
  switch (b.fn) {
    case ScalarFn::floor: {
      if (type_of(a) == ColumnType::int64) return a;
      const double f = std::floor(std::get<double>(a));
      if (!(f >= -9.2e18 && f <= 9.2e18)) throw Error(Errc::execution, "FLOOR out of int64 range");
      return static_cast<std::int64_t>(f);
    }
    case ScalarFn::ln: return std::log(as_double(a));
    case ScalarFn::sqrt: return std::sqrt(as_double(a));
    case ScalarFn::abs:
      if (type_of(a) == ColumnType::int64) return std::abs(int_of(a));
      return std::fabs(std::get<double>(a));
    case ScalarFn::least:
    case ScalarFn::greatest: {
      const Value c = eval(b.kids[1], ctx);
      const int cmp = compare(a, c);
      const Value& pick = (b.fn == ScalarFn::least) == (cmp <= 0) ? a : c;
      if (b.type == ColumnType::float64) return as_double(pick);
      return pick;
    }
  }
  return a;
}

Value eval(const Bound& b, const Ctx& ctx) {
  switch (b.kind) {
    case Bound::Kind::column:
      return (*ctx.rels)[b.source]->at((*ctx.rows)[b.source], b.column);
    case Bound::Kind::literal:
      return b.literal;
    case Bound::Kind::binary:
      return eval_binary(b, ctx);
    case Bound::Kind::negate: {
      const Value v = eval(b.kids[0], ctx);
      if (type_of(v) == ColumnType::int64) return -int_of(v);
      return -std::get<double>(v);
    }
    case Bound::Kind::call:
      return eval_call(b, ctx);
    case Bound::Kind::aggregate:
      if (ctx.aggs == nullptr) throw Error(Errc::invalid_argument, "aggregate outside grouping");
      return (*ctx.aggs)[b.slot];
  }
  return Value{};
}

bool test(const BoundCmp& c, const Ctx& ctx) {
  const int r = compare(eval(c.lhs, ctx), eval(c.rhs, ctx));
  switch (c.op) {
    case CmpOp::eq: return r == 0;
    case CmpOp::ne: return r != 0;
    case CmpOp::lt: return r < 0;
    case CmpOp::le: return r <= 0;
    case CmpOp::gt: return r > 0;
    case CmpOp::ge: return r >= 0;
  }
  return false;
}

struct Accumulator {
  std::int64_t count = 0;
  std::int64_t isum = 0;
  double dsum = 0.0;
  std::optional<Value> best;

  void update(const Bound& agg, const Ctx& ctx) {
    ++count;
    switch (agg.afn) {
      case AggFn::count:
        return;
      case AggFn::sum: {
        const Value v = eval(agg.kids[0], ctx);
        if (agg.type == ColumnType::int64) {
          isum += int_of(v);
        } else {
          dsum += as_double(v);
        }
        return;
      }
      case AggFn::min:
      case AggFn::max: {
        Value v = eval(agg.kids[0], ctx);
        const bool better = !best || (agg.afn == AggFn::min ? compare(v, *best) < 0
                                                            : compare(v, *best) > 0);
        if (better) best = std::move(v);
        return;
      }
    }
  }

  Value finish(const Bound& agg) const {
    switch (agg.afn) {
      case AggFn::count: return count;
      case AggFn::sum:
        if (agg.type == ColumnType::int64) return isum;
        return dsum;
      case AggFn::min:
      case AggFn::max:
        if (!best) {
          throw Error(Errc::execution,
                      std::string(agg.afn == AggFn::min ? "MIN" : "MAX") + " over empty input");
        }
        return *best;
    }
    return count;
  }
};

struct RowsHash {
  std::size_t operator()(const std::vector<Value>& row) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (const auto& v : row) h = (h ^ ValueHash{}(v)) * 0x100000001b3ull;
    return h;
  }
};
struct RowsEq {
  bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const noexcept {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (compare(a[i], b[i]) != 0) return false;
    }
    return true;
  }
};

bool rows_less(const std::vector<Value>& a, const std::vector<Value>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    const int c = compare(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

std::string default_name(const Expr& e, std::size_t index) {
  if (const auto* c = std::get_if<ColumnRef>(&e.node)) return c->name;
  if (const auto* a = std::get_if<Aggregate>(&e.node)) {
    switch (a->fn) {
      case AggFn::sum: return "sum";
      case AggFn::count: return "count";
      case AggFn::min: return "min";
      case AggFn::max: return "max";
    }
  }
  return "expr" + std::to_string(index + 1);
}

std::string unique_name(const std::string& base, std::set<std::string>& used) {
  std::string name = base;
  for (int n = 2; !used.insert(name).second; ++n) name = base + "_" + std::to_string(n);
  return name;
}

bool is_bare_count_star(const SelectStmt& s) {
  if (s.star || s.distinct || s.items.size() != 1 || !s.group_by.empty()) return false;
  const auto* agg = std::get_if<Aggregate>(&s.items[0].expr->node);
  return agg != nullptr && agg->fn == AggFn::count && agg->arg == nullptr;
}

}  // namespace

const Value& scalar_of(const QueryOutput& out) {
  if (const auto* v = std::get_if<Value>(&out)) return *v;
  throw Error(Errc::invalid_argument, "statement produced a relation, not a scalar");
}

const Relation& relation_of(const QueryOutput& out) {
  if (const auto* r = std::get_if<Relation>(&out)) return *r;
  throw Error(Errc::invalid_argument, "statement produced a scalar, not a relation");
}

std::shared_ptr<RelationalEngine::Table> RelationalEngine::find(const std::string& name) const {
  std::shared_lock lock(catalog_mutex_);
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(Errc::unknown_object, "unknown table '" + name + "'");
  return it->second;
}

void RelationalEngine::create_table(const std::string& name, Schema schema) {
  if (!text::is_identifier(name)) {
    throw Error(Errc::invalid_argument, "bad table name '" + name + "'");
  }
  auto table = std::make_shared<Table>();
  table->relation = Relation(name, std::move(schema));
  std::unique_lock lock(catalog_mutex_);
  if (tables_.count(name)) throw Error(Errc::duplicate_name, "table '" + name + "' already exists");
  tables_.emplace(name, std::move(table));
}

std::size_t RelationalEngine::load_csv(const std::string& name, std::istream& in) {
  Relation staged = read_csv(name, in);
  std::shared_ptr<Table> table;
  {
    std::unique_lock lock(catalog_mutex_);
    auto it = tables_.find(name);
    if (it == tables_.end()) {
      if (!text::is_identifier(name)) {
        throw Error(Errc::invalid_argument, "bad table name '" + name + "'");
      }
      const auto rows = staged.size();
      auto fresh = std::make_shared<Table>();
      fresh->relation = std::move(staged);
      tables_.emplace(name, std::move(fresh));
      return rows;
    }
    table = it->second;
  }
  std::unique_lock lock(table->mutex);
  if (table->relation.schema() != staged.schema()) {
    throw LineError(Errc::schema_invariant, 1, "header does not match schema of '" + name + "'");
  }
  table->relation.reserve(table->relation.size() + staged.size());
  for (std::size_t r = 0; r < staged.size(); ++r) table->relation.append_from(staged, r);
  return staged.size();
}

void RelationalEngine::store(Relation rel, bool replace) {
  const std::string name = rel.name();
  if (!text::is_identifier(name)) {
    throw Error(Errc::invalid_argument, "bad table name '" + name + "'");
  }
  auto table = std::make_shared<Table>();
  table->relation = std::move(rel);
  std::unique_lock lock(catalog_mutex_);
  if (!replace && tables_.count(name)) {
    throw Error(Errc::duplicate_name, "table '" + name + "' already exists");
  }
  tables_[name] = std::move(table);
}

Relation RelationalEngine::snapshot(const std::string& name) const {
  auto table = find(name);
  std::shared_lock lock(table->mutex);
  return table->relation;
}

Schema RelationalEngine::schema_of(const std::string& name) const {
  auto table = find(name);
  std::shared_lock lock(table->mutex);
  return table->relation.schema();
}

bool RelationalEngine::has_table(const std::string& name) const {
  std::shared_lock lock(catalog_mutex_);
  return tables_.count(name) > 0;
}

bool RelationalEngine::drop(const std::string& name) {
  std::unique_lock lock(catalog_mutex_);
  return tables_.erase(name) > 0;
}

std::vector<std::string> RelationalEngine::table_names() const {
  std::shared_lock lock(catalog_mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : tables_) out.push_back(name);
  return out;
}

std::size_t RelationalEngine::resident_bytes() const {
  std::vector<std::shared_ptr<Table>> all;
  {
    std::shared_lock lock(catalog_mutex_);
    for (const auto& [_, t] : tables_) all.push_back(t);
  }
  std::size_t total = 0;
  for (const auto& t : all) {
    std::shared_lock lock(t->mutex);
    total += t->relation.bytes();
  }
  return total;
}

QueryOutput RelationalEngine::execute(std::string_view sql) { return execute(parse_sql(sql)); }

QueryOutput RelationalEngine::execute_script(std::string_view sql) {
  const auto statements = parse_sql_script(sql);
  QueryOutput last = Value{std::int64_t{0}};
  QueryOutput last_select = Value{std::int64_t{0}};
  bool saw_select = false;
  for (const auto& stmt : statements) {
    last = execute(stmt);
    if (std::holds_alternative<SelectStmt>(stmt)) {
      last_select = last;
      saw_select = true;
    }
  }
  return saw_select ? last_select : last;
}

QueryOutput RelationalEngine::execute(const Statement& stmt) {
  if (const auto* sel = std::get_if<SelectStmt>(&stmt)) {
    bool scalar = false;
    Relation out = run_select(*sel, &scalar);
    if (scalar) return out.at(0, 0);
    return out;
  }
  if (const auto* create = std::get_if<CreateAsStmt>(&stmt)) {
    Relation out = run_select(create->select, nullptr);
    out.rename(create->table);
    const auto rows = static_cast<std::int64_t>(out.size());
    store(std::move(out));
    return Value{rows};
  }
  if (const auto* insert = std::get_if<InsertSelectStmt>(&stmt)) {
    Relation out = run_select(insert->select, nullptr);
    auto table = find(insert->table);
    std::unique_lock lock(table->mutex);
    auto& target = table->relation;
    if (out.arity() != target.arity()) {
      throw Error(Errc::arity_mismatch, "INSERT supplies " + std::to_string(out.arity()) +
                                            " columns, '" + insert->table + "' has " +
                                            std::to_string(target.arity()));
    }
    // Type-check every row before touching the target.
    for (std::size_t c = 0; c < out.arity(); ++c) {
      const auto want = target.schema()[c].type;
      const auto got = out.schema()[c].type;
      if (got != want && !(want == ColumnType::float64 && got == ColumnType::int64)) {
        throw Error(Errc::type_incoercible, "INSERT column " + std::to_string(c + 1) + " is " +
                                                std::string(type_name(got)) + ", target is " +
                                                std::string(type_name(want)));
      }
    }
    target.reserve(target.size() + out.size());
    for (std::size_t r = 0; r < out.size(); ++r) target.append_from(out, r);
    return Value{static_cast<std::int64_t>(out.size())};
  }
  const auto& drop_stmt = std::get<DropStmt>(stmt);
  if (!drop(drop_stmt.table) && !drop_stmt.if_exists) {
    throw Error(Errc::unknown_object, "unknown table '" + drop_stmt.table + "'");
  }
  return Value{std::int64_t{0}};
}

Relation RelationalEngine::run_select(const SelectStmt& stmt, bool* scalar_count) const {
  if (stmt.from.empty() || stmt.from.size() > 2) {
    throw Error(Errc::invalid_argument, "FROM takes one table or one join");
  }
  // Resolve and lock sources; a self-join locks its table once.
  std::vector<std::shared_ptr<Table>> tables;
  std::vector<std::shared_lock<std::shared_mutex>> locks;
  std::vector<Source> sources;
  for (const auto& ref : stmt.from) {
    if (ref.placeholder) {
      throw Error(Errc::unknown_object,
                  "unbound placeholder '" + ref.name + "'" + pos_suffix(ref.position));
    }
    auto table = find(ref.name);
    const bool seen = std::any_of(tables.begin(), tables.end(),
                                  [&](const auto& t) { return t.get() == table.get(); });
    if (!seen) locks.emplace_back(table->mutex);
    tables.push_back(table);
    sources.push_back({&table->relation, ref.name, ref.alias});
  }
  if (sources.size() == 2 && !sources[0].alias.empty() && sources[0].alias == sources[1].alias) {
    throw Error(Errc::invalid_argument, "duplicate table alias '" + sources[0].alias + "'");
  }
  if (sources.size() == 2 && sources[0].alias.empty() && sources[1].alias.empty() &&
      sources[0].name == sources[1].name) {
    throw Error(Errc::invalid_argument, "self-join needs table aliases");
  }

  Binder binder(sources);
  std::vector<Bound> aggs;
  std::vector<Bound> items;
  Schema out_schema;
  std::set<std::string> used_names;
  if (stmt.star) {
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const auto& schema = sources[s].rel->schema();
      for (std::size_t c = 0; c < schema.size(); ++c) {
        Bound b;
        b.kind = Bound::Kind::column;
        b.source = static_cast<int>(s);
        b.column = c;
        b.type = schema[c].type;
        b.mask = 1u << s;
        items.push_back(b);
        out_schema.push_back({unique_name(schema[c].name, used_names), schema[c].type});
      }
    }
  } else {
    for (std::size_t i = 0; i < stmt.items.size(); ++i) {
      const auto& item = stmt.items[i];
      items.push_back(binder.bind(*item.expr, &aggs));
      const auto base = item.alias.empty() ? default_name(*item.expr, i) : item.alias;
      out_schema.push_back({unique_name(base, used_names), items.back().type});
    }
  }
  std::vector<Bound> group_keys;
  for (const auto& g : stmt.group_by) group_keys.push_back(binder.bind(*g, nullptr));
  const bool aggregate_mode = !aggs.empty() || !group_keys.empty();
  if (aggregate_mode && stmt.star) {
    throw Error(Errc::invalid_argument, "SELECT * cannot be combined with aggregation");
  }

  std::vector<BoundCmp> preds;
  for (const auto& c : stmt.where) preds.push_back(binder.bind_cmp(c));

  // Split predicates: per-source filters, constants, join key, residual.
  std::vector<BoundCmp> filter[2];
  std::vector<BoundCmp> constant;
  std::vector<BoundCmp> residual;
  std::optional<std::pair<Bound, Bound>> join_key;
  auto try_join_key = [&](const BoundCmp& c) {
    if (c.op != CmpOp::eq) return false;
    if (c.lhs.mask == 1u && c.rhs.mask == 2u) {
      join_key = std::make_pair(c.lhs, c.rhs);
      return true;
    }
    if (c.lhs.mask == 2u && c.rhs.mask == 1u) {
      join_key = std::make_pair(c.rhs, c.lhs);
      return true;
    }
    return false;
  };
  if (stmt.join_on) {
    const auto on = binder.bind_cmp(*stmt.join_on);
    if (!try_join_key(on)) {
      throw Error(Errc::invalid_argument,
                  "JOIN ... ON needs an equality between the two tables" +
                      pos_suffix(stmt.join_on->position));
    }
  }
  for (auto& p : preds) {
    if (sources.size() == 2 && !join_key && try_join_key(p)) continue;
    if (p.mask == 0) constant.push_back(std::move(p));
    else if (p.mask == 1u) filter[0].push_back(std::move(p));
    else if (p.mask == 2u) filter[1].push_back(std::move(p));
    else residual.push_back(std::move(p));
  }
  if (sources.size() == 2 && !join_key) {
    throw Error(Errc::invalid_argument, "a two-table query needs an equality join predicate");
  }

  std::array<const Relation*, 2> rels{sources[0].rel, sources.size() > 1 ? sources[1].rel : nullptr};
  std::array<std::size_t, 2> rows{0, 0};
  Ctx ctx{&rels, &rows, nullptr};
  auto passes = [&ctx](const std::vector<BoundCmp>& ps) {
    for (const auto& p : ps) {
      if (!test(p, ctx)) return false;
    }
    return true;
  };
  if (!passes(constant)) {
    // Predicate is false for every row; fall through with no input rows.
    filter[0].push_back(constant.front());
  }

  Relation out("result", out_schema);
  const bool bare_count = scalar_count != nullptr && is_bare_count_star(stmt);
  const std::optional<std::size_t> limit =
      stmt.limit ? std::optional<std::size_t>(static_cast<std::size_t>(std::max<std::int64_t>(0, *stmt.limit)))
                 : std::nullopt;

  // Consumers. Each returns false to stop the scan early.
  std::int64_t counted = 0;
  std::vector<Value> rowbuf;

  std::unordered_set<std::vector<Value>, RowsHash, RowsEq> seen_rows;
  std::unordered_set<std::int64_t> seen_ints;
  // Keyed by bit pattern: std::hash<double> is a byte hash and dominates
  // the DISTINCT loop. -0.0 folds into 0.0 so equal values share a key.
  std::unordered_set<std::uint64_t> seen_doubles;
  auto double_key = [](double d) { return std::bit_cast<std::uint64_t>(d == 0.0 ? 0.0 : d); };
  bool seen_nan = false;
  const bool fast_distinct = stmt.distinct && !aggregate_mode && items.size() == 1 &&
                             items[0].type != ColumnType::text;
  const std::vector<double>* distinct_doubles = nullptr;
  if (fast_distinct && items[0].kind == Bound::Kind::column && items[0].type == ColumnType::float64) {
    distinct_doubles = std::get_if<std::vector<double>>(&rels[items[0].source]->column(items[0].column));
  }

  struct Group {
    std::array<std::size_t, 2> first;
    std::vector<Accumulator> accs;
  };
  std::unordered_map<std::vector<Value>, std::size_t, RowsHash, RowsEq> group_index;
  std::vector<std::vector<Value>> group_key_list;
  std::vector<Group> groups;
  std::vector<Value> keybuf;

  auto consume = [&]() -> bool {
    if (bare_count) {
      ++counted;
      return true;
    }
    if (aggregate_mode) {
      keybuf.clear();
      for (const auto& k : group_keys) keybuf.push_back(eval(k, ctx));
      auto it = group_index.find(keybuf);
      std::size_t gi;
      if (it == group_index.end()) {
        gi = groups.size();
        group_index.emplace(keybuf, gi);
        group_key_list.push_back(keybuf);
        groups.push_back({rows, std::vector<Accumulator>(aggs.size())});
      } else {
        gi = it->second;
      }
      auto& g = groups[gi];
      for (std::size_t a = 0; a < aggs.size(); ++a) g.accs[a].update(aggs[a], ctx);
      return true;
    }
    if (fast_distinct) {
      if (distinct_doubles) {
        // Plain float column: read the storage directly, no Value boxing.
        const double d = (*distinct_doubles)[rows[items[0].source]];
        bool fresh;
        if (std::isnan(d)) {
          fresh = !seen_nan;
          seen_nan = true;
        } else {
          fresh = seen_doubles.insert(double_key(d)).second;
        }
        if (fresh) out.append({d});
        return !limit || out.size() < *limit;
      }
      const Value v = eval(items[0], ctx);
      bool fresh;
      if (items[0].type == ColumnType::int64) {
        fresh = seen_ints.insert(std::get<std::int64_t>(v)).second;
      } else {
        const double d = std::get<double>(v);
        if (std::isnan(d)) {
          fresh = !seen_nan;
          seen_nan = true;
        } else {
          fresh = seen_doubles.insert(double_key(d)).second;
        }
      }
      if (fresh) out.append({v});
      return !limit || out.size() < *limit;
    }
    rowbuf.clear();
    for (const auto& item : items) rowbuf.push_back(eval(item, ctx));
    if (stmt.distinct && !seen_rows.insert(rowbuf).second) return true;
    out.append(rowbuf);
    return !limit || out.size() < *limit;
  };

  if (!limit || *limit > 0 || aggregate_mode || bare_count) {
    if (sources.size() == 1) {
      const std::size_t n = rels[0]->size();
      for (std::size_t r = 0; r < n; ++r) {
        rows[0] = r;
        if (!passes(filter[0])) continue;
        if (!consume()) break;
      }
    } else {
      // Hash join: build on the right input, probe with left rows in order,
      // so matches for one left row come out in right-insertion order.
      std::unordered_map<Value, std::vector<std::uint32_t>, ValueHash, ValueEq> build;
      const std::size_t nr = rels[1]->size();
      for (std::size_t r = 0; r < nr; ++r) {
        rows[1] = r;
        if (!passes(filter[1])) continue;
        build[eval(join_key->second, ctx)].push_back(static_cast<std::uint32_t>(r));
      }
      const std::size_t nl = rels[0]->size();
      bool stop = false;
      for (std::size_t l = 0; l < nl && !stop; ++l) {
        rows[0] = l;
        if (!passes(filter[0])) continue;
        auto it = build.find(eval(join_key->first, ctx));
        if (it == build.end()) continue;
        for (const auto r : it->second) {
          rows[1] = r;
          if (!passes(residual)) continue;
          if (!consume()) {
            stop = true;
            break;
          }
        }
      }
    }
  }

  if (bare_count) {
    *scalar_count = true;
    Relation scalar("result", {{out_schema[0].name, ColumnType::int64}});
    scalar.append({Value{counted}});
    return scalar;
  }

  if (aggregate_mode) {
    if (groups.empty() && group_keys.empty()) {
      groups.push_back({{std::numeric_limits<std::size_t>::max(), 0},
                        std::vector<Accumulator>(aggs.size())});
      group_key_list.emplace_back();
    }
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rows_less(group_key_list[a], group_key_list[b]);
    });
    std::vector<Value> finished(aggs.size());
    std::unordered_set<std::vector<Value>, RowsHash, RowsEq> distinct_out;
    for (const auto gi : order) {
      const auto& g = groups[gi];
      for (std::size_t a = 0; a < aggs.size(); ++a) finished[a] = g.accs[a].finish(aggs[a]);
      rows = g.first;
      Ctx gctx{&rels, &rows, &finished};
      rowbuf.clear();
      for (const auto& item : items) {
        if (rows[0] == std::numeric_limits<std::size_t>::max() && item.mask != 0) {
          throw Error(Errc::execution, "column outside an aggregate over empty input");
        }
        rowbuf.push_back(eval(item, gctx));
      }
      if (stmt.distinct && !distinct_out.insert(rowbuf).second) continue;
      out.append(rowbuf);
      if (limit && out.size() >= *limit) break;
    }
  }
  return out;
}

}  // namespace polystore::rel
