#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "polystore/common/error.hpp"
#include "polystore/keyvalue/kv_store.hpp"

using namespace polystore;
using namespace polystore::kv;

TEST_CASE("put, get and upsert") {
  KvStore s;
  s.put("k1", {{"text", "hello"}});
  CHECK(s.get("k1")->fields.at("text") == "hello");
  s.put("k1", {{"text", "again"}});
  CHECK(s.get("k1")->fields.at("text") == "again");
  CHECK(s.size() == 1);
  CHECK_FALSE(s.get("k2").has_value());
}

TEST_CASE("scans are key ordered and prefix filtered") {
  KvStore s;
  s.put("note/2", {{"text", "b"}});
  s.put("note/1", {{"text", "a"}});
  s.put("lab/1", {{"text", "c"}});
  const auto all = s.scan("");
  REQUIRE(all.size() == 3);
  CHECK(all[0].key == "lab/1");
  CHECK(all[1].key == "note/1");
  CHECK(s.scan("note/").size() == 2);
  CHECK(s.scan("zzz").empty());
  CHECK(s.erase_prefix("note/") == 2);
  CHECK(s.size() == 1);
}

TEST_CASE("prefix scan equals filtering the full scan") {
  std::mt19937_64 rng(31);
  KvStore s;
  const char* stems[] = {"a/", "ab/", "b/", "a", ""};
  for (int i = 0; i < 300; ++i) s.put(std::string(stems[rng() % 5]) + std::to_string(rng() % 50), {{"f", "x"}});
  for (const char* p : {"a", "a/", "ab", "b/1", "c", ""}) {
    std::vector<Document> want;
    for (const auto& d : s.scan("")) {
      if (d.key.rfind(p, 0) == 0) want.push_back(d);
    }
    CHECK(s.scan(p) == want);
  }
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("  Hello, World!  hello\tx--y ...") == std::vector<std::string>{"hello", "world", "hello", "x--y"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a b").size() == 2);  // no-break space splits
}

TEST_CASE("termcount example and edge cases") {
  KvStore s;
  s.put("d/1", {{"text", "a b a"}});
  s.put("d/2", {{"text", "b c"}});
  s.put("d/3", {{"other", "a a a"}});
  CHECK(s.termcount("d/", "text") == std::vector<TermCount>{{"a", 2}, {"b", 2}, {"c", 1}});
  CHECK(s.termcount("none/", "text").empty());
}

TEST_CASE("termcount total equals token total") {
  std::mt19937_64 rng(32);
  const char* words[] = {"Alpha", "beta,", "gamma.", "delta", "ALPHA", "(beta)", "!!!"};
  for (int t = 0; t < 20; ++t) {
    KvStore s;
    std::map<std::string, std::int64_t> oracle;
    std::int64_t total = 0;
    for (int d = 0; d < 10; ++d) {
      std::string text;
      for (int w = 0; w < static_cast<int>(rng() % 12); ++w) text += std::string(words[rng() % 7]) + " ";
      s.put("p/" + std::to_string(d), {{"text", text}});
      for (const auto& tok : tokenize(text)) {
        ++oracle[tok];
        ++total;
      }
    }
    std::int64_t sum = 0;
    for (const auto& [term, n] : s.termcount("p/", "text")) {
      CHECK(oracle.at(term) == n);
      sum += n;
    }
    CHECK(sum == total);
  }
}

TEST_CASE("jsonl loader") {
  KvStore s;
  std::istringstream in("{\"key\":\"n/1\",\"fields\":{\"text\":\"x y\"}}\n\n{\"key\":\"n/2\",\"fields\":{}}\n");
  CHECK(s.load_jsonl(in) == 2);
  CHECK(s.get("n/1")->fields.at("text") == "x y");
  KvStore t;
  std::istringstream bad("{\"key\":\"a\",\"fields\":{}}\n{\"key\":1}\n");
  try {
    t.load_jsonl(bad);
    FAIL("accepted");
  } catch (const LineError& e) {
    CHECK(e.line() == 2);
  }
  CHECK(t.size() == 0);
}

TEST_CASE("TEXT language") {
  KvStore s;
  s.put("note/0", {{"text", "a b a"}});
  s.put("note/1", {{"text", "b"}});
  const auto tc = std::get<std::vector<TermCount>>(execute(s, "termcount('note/', 'text')"));
  CHECK(tc == std::vector<TermCount>{{"a", 2}, {"b", 2}});
  CHECK(std::get<std::vector<Document>>(execute(s, "scan(note)")).size() == 2);
  CHECK(std::get<std::vector<Document>>(execute(s, "get('note/1')")).size() == 1);
  CHECK(std::get<std::vector<Document>>(execute(s, "get('nope')")).empty());
  const auto q = parse_text_query("scan('it''s')");
  CHECK(q.args[0] == "it's");
  CHECK(parse_text_query(render(q)).args == q.args);
  for (const char* bad : {"scan(", "termcount('a')", "delete('a')", "scan('x') y"}) {
    CHECK_THROWS_AS(parse_text_query(bad), Error);
  }
}
