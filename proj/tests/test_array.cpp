#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "polystore/array/array_engine.hpp"
#include "polystore/array/array_file.hpp"
#include "polystore/common/error.hpp"

using namespace polystore;
using namespace polystore::array;

namespace {

DenseArray matrix(const std::string& name, std::size_t r, std::size_t c, std::vector<double> v) {
  return DenseArray(name, {{"i", r}, {"j", c}}, std::move(v));
}

std::vector<double> randoms(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

const DenseArray& array_of(const ArrayOutput& out) { return std::get<DenseArray>(out); }

}  // namespace

TEST_CASE("store validates shape") {
  ArrayEngine e;
  e.store(matrix("A", 2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(std::get<std::int64_t>(e.execute("count(A)")) == 6);
  try {
    DenseArray("B", {{"i", 2}, {"j", 2}}, {1, 2, 3, 4, 5, 6});
    FAIL("length accepted");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::length_mismatch);
  }
  CHECK_THROWS_AS(e.store(DenseArray("Z", {{"i", 0}}, {})), Error);
  CHECK_THROWS_AS(DenseArray("D", {{"i", 1}, {"i", 1}}, {1}), Error);
  CHECK_THROWS_AS(e.store(matrix("A", 1, 1, {0})), Error);
  CHECK_NOTHROW(e.store(matrix("A", 1, 1, {0}), true));
  CHECK_THROWS_AS(e.execute("count(nope)"), Error);
}

TEST_CASE("multiply by identity and a hand-computed product") {
  ArrayEngine e;
  e.store(matrix("A", 2, 2, {1, 2, 3, 4}));
  e.store(matrix("I", 2, 2, {1, 0, 0, 1}));
  CHECK(array_of(e.execute("multiply(A, I)")).values() == std::vector<double>{1, 2, 3, 4});
  CHECK(array_of(e.execute("multiply(A,A)")).values() == std::vector<double>{7, 10, 15, 22});
  e.store(matrix("R", 3, 2, {1, 2, 3, 4, 5, 6}));
  CHECK_THROWS_AS(e.execute("multiply(A, R)"), Error);
}

TEST_CASE("multiply is bilinear") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng() % 6, k = 1 + rng() % 6, m = 1 + rng() % 6;
    const auto a = matrix("A", n, k, randoms(rng, n * k));
    const auto b = matrix("B", k, m, randoms(rng, k * m));
    const auto c = matrix("C", k, m, randoms(rng, k * m));
    std::vector<double> sum(k * m);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = b.values()[i] + c.values()[i];
    const auto lhs = ops::multiply(a, matrix("S", k, m, sum)).values();
    const auto ab = ops::multiply(a, b).values(), ac = ops::multiply(a, c).values();
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - (ab[i] + ac[i])) <= 1e-9);
  }
}

TEST_CASE("dwt_haar examples and truncation") {
  ArrayEngine e;
  e.store("S", {{"t", 4}}, {1, 1, 1, 1});
  const auto c = array_of(e.execute("dwt_haar(S)")).values();
  CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-15));
  for (int i = 1; i < 4; ++i) CHECK(std::abs(c[i]) < 1e-15);
  e.store("L", {{"t", 6}}, {1, 1, 1, 1, 50, 50});
  const auto t = array_of(e.execute("dwt_haar(L)"));
  CHECK(t.dims()[0].length == 4);
  CHECK(t.values()[0] == doctest::Approx(2.0).epsilon(1e-15));
  // Rank 2: each row transformed independently.
  e.store(matrix("M", 2, 2, {1, 1, 3, -3}));
  const auto m = array_of(e.execute("dwt_haar(M)")).values();
  CHECK(m[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::abs(m[1]) < 1e-15);
  CHECK(std::abs(m[2]) < 1e-15);
  CHECK(m[3] == doctest::Approx(6 / std::sqrt(2.0)));
}

TEST_CASE("distinct is the sorted value set") {
  ArrayEngine e;
  e.store("V", {{"i", 3}}, {1, 1, 2});
  CHECK(array_of(e.execute("distinct(V)")).values() == std::vector<double>{1, 2});
  std::mt19937_64 rng(22);
  std::vector<double> v(500);
  for (auto& x : v) x = static_cast<double>(rng() % 40);
  e.store("W", {{"i", 500}}, v);
  const std::set<double> oracle(v.begin(), v.end());
  CHECK(array_of(e.execute("distinct(W)")).values() == std::vector<double>(oracle.begin(), oracle.end()));
}

TEST_CASE("filter keeps a count and count reads it") {
  std::mt19937_64 rng(23);
  ArrayEngine e;
  const auto v = randoms(rng, 200);
  e.store("V", {{"i", 200}}, v);
  CHECK(std::get<std::int64_t>(e.execute("count(filter(V, val >= -1e300))")) ==
        std::get<std::int64_t>(e.execute("count(V)")));
  for (double cut : {-2.0, 0.0, 1.5}) {
    const auto kept = std::count_if(v.begin(), v.end(), [&](double x) { return x > cut && x <= 2.5; });
    const auto expr = "count(filter(V, val > " + std::to_string(cut) + " and val <= 2.5))";
    CHECK(std::get<std::int64_t>(e.execute(expr)) == kept);
    const auto f = array_of(e.execute("filter(V, val > " + std::to_string(cut) + " and val <= 2.5)"));
    CHECK(f.cell_count() == 200);
    CHECK(std::count_if(f.values().begin(), f.values().end(), [](double x) { return !std::isnan(x); }) == kept);
  }
}

TEST_CASE("subarray bounds are inclusive") {
  ArrayEngine e;
  e.store(matrix("A", 3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8}));
  const auto s = array_of(e.execute("subarray(A, 1, 2, 0, 1)"));
  CHECK(s.dims()[0].length == 2);
  CHECK(s.values() == std::vector<double>{3, 4, 6, 7});
  CHECK_THROWS_AS(e.execute("subarray(A, 1, 3, 0, 1)"), Error);
  CHECK_THROWS_AS(e.execute("subarray(A, 0, 1)"), Error);
}

TEST_CASE("bin_hist counts per group") {
  ArrayEngine e;
  e.store("C", {{"t", 4}}, {4, -1, 0.5, 2});
  e.store(matrix("E", 3, 2, {0, 8, -2, 2, -2, 2}));
  const auto h = array_of(e.execute("bin_hist(C, E, 2)")).values();
  // groups: {4} {-1} {0.5, 2}
  CHECK(h == std::vector<double>{0, 1, 1, 0, 0, 2});
  CHECK_THROWS_AS(e.execute("bin_hist(C, C, 2)"), Error);
}

TEST_CASE("export cells and re-store") {
  ArrayEngine e;
  e.store(matrix("A", 1, 2, {1.5, 2.5}));
  const auto cells = e.export_cells("A");
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].first == std::vector<std::size_t>{0, 0});
  CHECK(cells[1].first == std::vector<std::size_t>{0, 1});
  CHECK(cells[1].second == 2.5);
  e.store(matrix("O", 1, 1, {9}));
  CHECK(e.export_cells("O").size() == 1);

  std::mt19937_64 rng(24);
  e.store(matrix("B", 2, 2, randoms(rng, 4)));
  std::vector<double> back(4);
  for (const auto& [idx, v] : e.export_cells("B")) back[idx[0] * 2 + idx[1]] = v;
  CHECK(back == e.get("B")->values());
}

TEST_CASE("array file round trip and line errors") {
  std::mt19937_64 rng(25);
  const auto a = matrix("A", 3, 4, randoms(rng, 12));
  std::stringstream buf;
  write_array(buf, a);
  const auto b = read_array(buf);
  CHECK(b.name() == "A");
  CHECK(b.dims() == a.dims());
  CHECK(b.values() == a.values());

  std::istringstream bad_header("{\"name\":\"A\",\"dims\":[{\"name\":\"i\",\"length\":0}]}\n\n");
  CHECK_THROWS_AS(read_array(bad_header), LineError);
  std::istringstream bad_value("{\"name\":\"A\",\"dims\":[{\"name\":\"i\",\"length\":2}]}\n1,x\n");
  try {
    read_array(bad_value);
    FAIL("accepted");
  } catch (const LineError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream short_row("{\"name\":\"A\",\"dims\":[{\"name\":\"i\",\"length\":3}]}\n1,2\n");
  CHECK_THROWS_AS(read_array(short_row), LineError);
}

TEST_CASE("expression render round trip and parse errors") {
  for (const char* text : {"count(filter(A,val>1 and val<=2.5))", "multiply(subarray(A,0,1,0,1),$c0)",
                           "bin_hist(dwt_haar(S),E,16)", "distinct(scan(V))"}) {
    const auto e = parse_array_expr(text);
    CHECK(render(parse_array_expr(render(e))) == render(e));
  }
  CHECK(referenced_arrays(parse_array_expr("multiply(B,filter(A,val>0))")) == std::vector<std::string>{"A", "B"});
  for (const char* bad : {"multiply(A)", "filter(A, x > 1)", "count(A", "frobnicate(A)", "count(A) B"}) {
    CHECK_THROWS_AS(parse_array_expr(bad), ParseError);
  }
}
