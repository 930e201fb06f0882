#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "polystore/common/error.hpp"
#include "polystore/relational/csv.hpp"
#include "polystore/relational/relational_engine.hpp"
#include "polystore/relational/sql_parser.hpp"

using namespace polystore;
using namespace polystore::rel;

namespace {

std::int64_t count_of(RelationalEngine& e, const std::string& sql) {
  return std::get<std::int64_t>(scalar_of(e.execute(sql)));
}

std::size_t load(RelationalEngine& e, const std::string& name, const std::string& csv) {
  std::istringstream in(csv);
  return e.load_csv(name, in);
}

// T(a int, b int, g text) with rows in the given order.
Relation random_table(std::mt19937_64& rng, std::size_t n) {
  Relation r("T", {{"a", ColumnType::int64}, {"b", ColumnType::int64}, {"g", ColumnType::text}});
  std::uniform_int_distribution<std::int64_t> small(-5, 15);
  for (std::size_t i = 0; i < n; ++i) {
    r.append({small(rng), small(rng), std::string(1, static_cast<char>('p' + rng() % 4))});
  }
  return r;
}

Relation shuffled(const Relation& r, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(r.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  Relation out(r.name(), r.schema());
  for (auto i : idx) out.append_from(r, i);
  return out;
}

}  // namespace

TEST_CASE("create_table catalog rules") {
  RelationalEngine e;
  e.create_table("T", {{"a", ColumnType::int64}, {"b", ColumnType::text}});
  CHECK(e.has_table("T"));
  CHECK(e.schema_of("T").size() == 2);
  CHECK_THROWS_AS(e.create_table("T", {{"a", ColumnType::int64}}), Error);
  try {
    e.create_table("U", {{"a", ColumnType::int64}, {"a", ColumnType::text}});
    FAIL("repeated column accepted");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::schema_invariant);
  }
}

TEST_CASE("load_csv counts rows and names bad lines") {
  RelationalEngine e;
  CHECK(load(e, "T", "a:int64,b:int64,c:text\n1,2,x\n3,4,'y, z'\n5,6,'it''s'\n") == 3);
  CHECK(load(e, "E", "a:int64\n") == 0);
  try {
    load(e, "T", "a:int64,b:int64,c:text\n7,8,ok\n9,10\n");
    FAIL("short row accepted");
  } catch (const LineError& err) {
    CHECK(err.line() == 3);
    CHECK(err.code() == Errc::arity_mismatch);
  }
  CHECK(count_of(e, "SELECT COUNT(*) FROM T") == 3);  // the failed load left nothing behind
  CHECK_THROWS_AS(load(e, "B", "a:int64\nfour\n"), LineError);
  try {
    load(e, "H", "a:int64,b\n1,2\n");
    FAIL("bad header accepted");
  } catch (const LineError& err) {
    CHECK(err.line() == 1);
  }
  const auto r = e.snapshot("T");
  CHECK(std::get<std::string>(r.at(2, 2)) == "it's");
  CHECK(std::get<std::string>(r.at(1, 2)) == "y, z");
}

TEST_CASE("CSV write/read round trip") {
  std::mt19937_64 rng(2);
  Relation r("R", {{"i", ColumnType::int64}, {"x", ColumnType::float64}, {"s", ColumnType::text}});
  std::uniform_real_distribution<double> u(-1e9, 1e9);
  for (int i = 0; i < 50; ++i) r.append({std::int64_t{i}, u(rng), "v'" + std::to_string(i) + ", x"});
  std::stringstream buf;
  write_csv(r, buf);
  const auto back = read_csv("R", buf);
  CHECK(canonical_rows(back) == canonical_rows(r));
}

TEST_CASE("documented statement examples") {
  RelationalEngine e;
  load(e, "T", "a:int64,b:int64\n3,1\n7,2\n9,4\n");
  CHECK(count_of(e, "SELECT COUNT(*) FROM T") == 3);
  load(e, "X", "x:int64\n1\n1\n2\n");
  const auto d = relation_of(e.execute("SELECT DISTINCT x FROM X"));
  CHECK(canonical_rows(d) == std::vector<std::vector<Value>>{{std::int64_t{1}}, {std::int64_t{2}}});
  const auto w = relation_of(e.execute("SELECT a,b FROM T WHERE a > 5"));
  CHECK(canonical_rows(w) ==
        std::vector<std::vector<Value>>{{std::int64_t{7}, std::int64_t{2}}, {std::int64_t{9}, std::int64_t{4}}});
}

TEST_CASE("WHERE matches a row-by-row predicate oracle") {
  std::mt19937_64 rng(3);
  const char* ops[] = {"=", "<>", "<", "<=", ">", ">="};
  for (int t = 0; t < 40; ++t) {
    RelationalEngine e;
    const auto r = random_table(rng, 60);
    e.store(r);
    const int op = static_cast<int>(rng() % 6);
    const std::int64_t k = static_cast<std::int64_t>(rng() % 20) - 5;
    const auto sql = "SELECT a, b FROM T WHERE a " + std::string(ops[op]) + " " + std::to_string(k) + " AND b >= 0";
    std::vector<std::vector<Value>> want;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto a = std::get<std::int64_t>(r.at(i, 0));
      const auto b = std::get<std::int64_t>(r.at(i, 1));
      const bool hit = op == 0 ? a == k : op == 1 ? a != k : op == 2 ? a < k : op == 3 ? a <= k : op == 4 ? a > k : a >= k;
      if (hit && b >= 0) want.push_back({a, b});
    }
    std::sort(want.begin(), want.end(), [](const auto& x, const auto& y) {
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                          [](const Value& p, const Value& q) { return compare(p, q) < 0; });
    });
    CAPTURE(sql);
    CHECK(canonical_rows(relation_of(e.execute(sql))) == want);
    // COUNT(*) agrees with the SELECT * length for the same WHERE.
    const auto where = sql.substr(sql.find(" WHERE"));
    CHECK(count_of(e, "SELECT COUNT(*) FROM T" + where) ==
          static_cast<std::int64_t>(relation_of(e.execute("SELECT * FROM T" + where)).size()));
  }
}

TEST_CASE("DISTINCT, COUNT and GROUP BY ignore physical row order") {
  std::mt19937_64 rng(4);
  const char* queries[] = {"SELECT DISTINCT g FROM T", "SELECT DISTINCT a, g FROM T", "SELECT COUNT(*) FROM T WHERE a > 3",
                           "SELECT g, COUNT(*) AS n, SUM(a) AS s, MIN(b) AS lo, MAX(b) AS hi FROM T GROUP BY g"};
  for (int t = 0; t < 20; ++t) {
    const auto r = random_table(rng, 80);
    RelationalEngine e1, e2;
    e1.store(r);
    e2.store(shuffled(r, rng));
    for (const char* q : queries) {
      CAPTURE(q);
      const auto o1 = e1.execute(q), o2 = e2.execute(q);
      if (std::holds_alternative<Value>(o1)) {
        CHECK(values_equal(scalar_of(o1), scalar_of(o2)));
      } else {
        CHECK(canonical_rows(relation_of(o1)) == canonical_rows(relation_of(o2)));
      }
    }
  }
}

TEST_CASE("GROUP BY matches a map oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto r = random_table(rng, 100);
    RelationalEngine e;
    e.store(r);
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> oracle;  // count, sum
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto& slot = oracle[std::get<std::string>(r.at(i, 2))];
      ++slot.first;
      slot.second += std::get<std::int64_t>(r.at(i, 0));
    }
    const auto out = relation_of(e.execute("SELECT g, COUNT(*) AS n, SUM(a) AS s FROM T GROUP BY g"));
    REQUIRE(out.size() == oracle.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& want = oracle.at(std::get<std::string>(out.at(i, 0)));
      CHECK(as_double(out.at(i, 1)) == static_cast<double>(want.first));
      CHECK(as_double(out.at(i, 2)) == static_cast<double>(want.second));
    }
  }
}

TEST_CASE("equi-join matches a nested-loop oracle") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const auto l = random_table(rng, 40);
    auto r = random_table(rng, 30);
    r.rename("U");
    RelationalEngine e;
    e.store(l);
    e.store(r);
    std::size_t want = 0;
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (values_equal(l.at(i, 0), r.at(j, 1))) {
          ++want;
          sum += std::get<std::int64_t>(l.at(i, 1)) * std::get<std::int64_t>(r.at(j, 0));
        }
      }
    }
    const auto joined = relation_of(e.execute("SELECT t.b, u.a FROM T t JOIN U u ON t.a = u.b"));
    CHECK(joined.size() == want);
    std::int64_t got = 0;
    for (std::size_t i = 0; i < joined.size(); ++i) {
      got += std::get<std::int64_t>(joined.at(i, 0)) * std::get<std::int64_t>(joined.at(i, 1));
    }
    CHECK(got == sum);
    // The comma form with the condition in WHERE is the same join.
    CHECK(count_of(e, "SELECT COUNT(*) FROM T t, U u WHERE t.a = u.b") == static_cast<std::int64_t>(want));
  }
}

TEST_CASE("expressions, scalar functions and LIMIT") {
  RelationalEngine e;
  load(e, "T", "a:int64,x:float64\n1,2.5\n2,-3.5\n3,4\n");
  const auto r = relation_of(
      e.execute("SELECT a * 2 + 1 AS y, FLOOR(x) AS f, ABS(x) AS m, LEAST(a, x) AS lo, a % 2 AS p FROM T WHERE a <= 2"));
  REQUIRE(r.size() == 2);
  const auto rows = canonical_rows(r);
  CHECK(as_double(rows[0][0]) == 3.0);
  CHECK(as_double(rows[0][1]) == 2.0);
  CHECK(as_double(rows[1][2]) == 3.5);
  CHECK(as_double(rows[1][3]) == -3.5);
  CHECK(as_double(rows[1][4]) == 0.0);
  CHECK(relation_of(e.execute("SELECT * FROM T LIMIT 2")).size() == 2);
  CHECK(as_double(relation_of(e.execute("SELECT SQRT(x) AS s, LN(a) AS l FROM T WHERE a = 3")).at(0, 0)) == 2.0);
}

TEST_CASE("CREATE AS, INSERT SELECT and DROP") {
  RelationalEngine e;
  load(e, "T", "a:int64\n1\n2\n3\n");
  e.execute_script("CREATE TABLE U AS SELECT a FROM T WHERE a > 1; INSERT INTO U SELECT a FROM T WHERE a = 1");
  CHECK(count_of(e, "SELECT COUNT(*) FROM U") == 3);
  e.execute("DROP TABLE U");
  CHECK_FALSE(e.has_table("U"));
  CHECK_NOTHROW(e.execute("DROP TABLE IF EXISTS U"));
  CHECK_THROWS_AS(e.execute("DROP TABLE U"), Error);
  CHECK_THROWS_AS(e.execute("SELECT nope FROM T"), Error);
  CHECK_THROWS_AS(e.execute("SELECT * FROM missing"), Error);
}

TEST_CASE("referenced_tables excludes placeholders") {
  CHECK(referenced_tables(parse_sql("SELECT * FROM b x JOIN a y ON x.i = y.i")) == std::vector<std::string>{"a", "b"});
  CHECK(referenced_tables(parse_sql("SELECT * FROM $c0")).empty());
}

TEST_CASE("parser rejects outside the dialect with a position") {
  for (const char* bad : {"SELECT * FROM T ORDER BY a", "SELECT * FROM (SELECT * FROM T)", "SELECT FROM T",
                          "SELECT * FROM T LEFT JOIN U ON T.a = U.a", "UPDATE T SET a = 1", "SELECT 'open FROM T"}) {
    const std::string text = bad;
    CAPTURE(text);
    try {
      parse_sql(text);
      FAIL("accepted");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("at position") != std::string::npos);
    }
  }
}

TEST_CASE("parser fuzz: token mutations never crash") {
  const std::vector<std::string> seeds = {
      "SELECT a, COUNT(*) AS n FROM T WHERE a > 5 AND b <> 'x' GROUP BY a LIMIT 3",
      "SELECT DISTINCT t.a FROM T t JOIN U u ON t.a = u.b",
      "CREATE TABLE Z AS SELECT SUM(val * 2) AS s FROM Q GROUP BY d1"};
  const std::vector<std::string> tokens = {"SELECT", "FROM", "WHERE", ",", "(", ")", "*", "'", "GROUP", "BY", "=", "1.5e",
                                           "JOIN", "ON", "AS", ";", "$c0", "-", "x", ""};
  std::mt19937_64 rng(7);
  std::size_t errors = 0;
  for (int t = 0; t < 3000; ++t) {
    std::istringstream in(seeds[t % seeds.size()]);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    for (int m = 0; m < 1 + t % 3; ++m) {
      auto& w = words[rng() % words.size()];
      w = tokens[rng() % tokens.size()];
    }
    std::string text;
    for (const auto& w : words) text += w + " ";
    try {
      parse_sql(text);
    } catch (const ParseError& e) {
      ++errors;
      CHECK(e.position() <= text.size());
    } catch (const Error&) {
      ++errors;
    }
  }
  CHECK(errors > 1000);
}
