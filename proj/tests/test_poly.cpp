#include <doctest.h>

#include <cctype>
#include <functional>
#include <string>

#include "gen.hpp"
#include "polystore/common/error.hpp"
#include "polystore/island/polystore.hpp"
#include "polystore/island/registry.hpp"
#include "polystore/poly/poly_ast.hpp"

using namespace polystore;
using poly::ScopeNode;

namespace {

poly::PolyAst parse(const std::string& q) { return poly::parse(q, island::is_island); }

// Brute force: a node starts a container when its whole subtree has one
// island and its parent's subtree does not.
bool uniform_below(const ScopeNode& n, const std::string& island) {
  if (n.island != island) return false;
  for (const auto& c : n.children) {
    if (!uniform_below(c, island)) return false;
  }
  return true;
}

std::size_t brute_containers(const ScopeNode& n, bool parent_uniform) {
  const bool uniform = uniform_below(n, n.island);
  if (uniform && !parent_uniform) return 1;
  std::size_t total = 0;
  for (const auto& c : n.children) total += brute_containers(c, uniform);
  return total;
}

// Quote-aware oracle: occurrences of ISLAND( that start a fresh word.
std::size_t nested_scope_count(const std::string& q) {
  std::size_t count = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == '\'') quoted = !quoted;
    if (quoted || q[i] != '(') continue;
    std::size_t b = i;
    while (b > 0 && (std::isupper(static_cast<unsigned char>(q[b - 1])) || q[b - 1] == '_')) --b;
    const bool word_start = b == 0 || !(std::isalnum(static_cast<unsigned char>(q[b - 1])) || q[b - 1] == '_');
    if (b < i && word_start && island::is_island(q.substr(b, i - b))) ++count;
  }
  return count;
}

std::size_t scope_count(const ScopeNode& n) {
  std::size_t total = 1;
  for (const auto& c : n.children) total += scope_count(c);
  return total;
}

}  // namespace

TEST_CASE("example scopes") {
  const auto a = parse("ARRAY(multiply(RELATIONAL(select * from A),B))");
  CHECK(a.root.island == "ARRAY");
  REQUIRE(a.root.children.size() == 1);
  CHECK(a.root.children[0].island == "RELATIONAL");
  CHECK(a.root.texts == std::vector<std::string>{"multiply(", ",B)"});
  CHECK(parse("RELATIONAL(select * from A)").root.children.empty());
  const auto q = parse("RELATIONAL(select * from A where note = '(ARRAY(')");
  CHECK(q.root.children.empty());
  CHECK(q.root.texts[0] == "select * from A where note = '(ARRAY('");
}

TEST_CASE("decomposition examples") {
  const auto d = poly::decompose(parse("ARRAY(multiply(RELATIONAL(select * from A),B))"));
  REQUIRE(d.containers.size() == 1);
  CHECK(d.containers[0].island == "RELATIONAL");
  CHECK(d.containers[0].text == "select * from A");
  CHECK(d.remainder.text() == "multiply($c0,B)");

  const auto single = poly::decompose(parse("RELATIONAL(select count(*) from T)"));
  CHECK(single.containers.size() == 1);
  CHECK(single.remainder.trivial());
  CHECK(single.remainder.text() == "$c0");

  const auto two = poly::decompose(parse("ARRAY(multiply(RELATIONAL(select * from A),RELATIONAL(select * from B)))"));
  CHECK(two.containers.size() == 2);
  CHECK(two.remainder.text() == "multiply($c0,$c1)");
  CHECK(two.containers[1].text == "select * from B");
}

TEST_CASE("same-island nesting stays one container") {
  const auto d = poly::decompose(parse("ARRAY(count(ARRAY(filter(A, val > 1))))"));
  CHECK(d.containers.size() == 1);
  CHECK(d.remainder.trivial());
  CHECK(d.containers[0].text == "count(filter(A, val > 1))");
}

TEST_CASE("training tag") {
  const auto a = parse("  TRAINING: RELATIONAL(select * from A) ");
  CHECK(a.training);
  CHECK(poly::reserialize(a) == "  TRAINING: RELATIONAL(select * from A) ");
  CHECK_FALSE(parse("RELATIONAL(x)").training);
}

TEST_CASE("rejections carry positions") {
  for (const char* bad : {"FOO(x)", "RELATIONAL(select (", "RELATIONAL(select 'x)", "ARRAY(multiply($c0,B))",
                          "RELATIONAL(x) y", "", "RELATIONAL(x))"}) {
    const std::string text = bad;
    CAPTURE(text);
    CHECK_THROWS_AS(parse(text), ParseError);
  }
}

TEST_CASE("referenced objects") {
  island::Polystore ps;
  CHECK(ps.referenced_objects("select * from A", "RELATIONAL") == std::vector<std::string>{"A"});
  CHECK(ps.referenced_objects("multiply($c0,B)", "ARRAY") == std::vector<std::string>{"B"});
  CHECK(ps.referenced_objects("select a from T where b = 'X'", "RELATIONAL") == std::vector<std::string>{"T"});
}

TEST_CASE("placeholders ignore quotes") {
  const auto refs = poly::find_placeholders("f($c0, '$c9', $r1)");
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].slot.container);
  CHECK(refs[0].position == 2);
  CHECK_FALSE(refs[1].slot.container);
  CHECK(refs[1].slot.index == 1);
}

TEST_CASE("generated texts: round trip, substitution and container count") {
  testsupport::Rng rng(41);
  for (int t = 0; t < 500; ++t) {
    const auto q = testsupport::random_poly_text(rng);
    CAPTURE(q);
    const auto ast = parse(q);
    CHECK(poly::reserialize(ast) == q);
    CHECK(scope_count(ast.root) == nested_scope_count(q));
    const auto d = poly::decompose(ast);
    CHECK(poly::substitute(d) == ast.root);
    CHECK(d.containers.size() == brute_containers(ast.root, false));
    // A non-trivial remainder names every container exactly once.
    if (!d.remainder.trivial()) {
      std::size_t slots = 0;
      for (const auto& n : d.remainder.nodes) {
        for (const auto& s : n.slots) slots += s.container ? 1 : 0;
      }
      CHECK(slots == d.containers.size());
    }
  }
}

TEST_CASE("fuzz: mutated texts either parse and round-trip or raise ParseError") {
  testsupport::Rng rng(42);
  std::size_t rejected = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto q = testsupport::mutate(testsupport::random_poly_text(rng), rng);
    try {
      const auto ast = parse(q);
      CHECK(poly::reserialize(ast) == q);
    } catch (const ParseError& e) {
      ++rejected;
      CHECK(e.position() <= q.size());
    }
  }
  CHECK(rejected > 200);
}
