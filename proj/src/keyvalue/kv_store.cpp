#include "polystore/keyvalue/kv_store.hpp"

#include <cctype>
#include <istream>
#include <mutex>

#include <json.hpp>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"

namespace polystore::kv {

namespace {

// Byte length of a whitespace code point starting at s[i], or 0.
std::size_t whitespace_at(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return 1;
  auto at = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  if (c == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
  if (c == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;  // U+1680
  if (c == 0xE2 && at(1) == 0x80) {
    const auto b = at(2);
    if ((b >= 0x80 && b <= 0x8A) || b == 0xA8 || b == 0xA9 || b == 0xAF) return 3;
  }
  if (c == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

void push_token(std::string_view raw, std::vector<std::string>& out) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && is_punct(raw[b])) ++b;
  while (e > b && is_punct(raw[e - 1])) --e;
  if (b < e) out.push_back(text::to_lower_ascii(raw.substr(b, e - b)));
}

bool has_prefix(std::string_view key, std::string_view prefix) {
  return key.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (const auto w = whitespace_at(s, i)) {
      push_token(s.substr(start, i - start), out);
      i += w;
      start = i;
    } else {
      ++i;
    }
  }
  push_token(s.substr(start), out);
  return out;
}

void KvStore::put(std::string key, Fields fields) {
  std::unique_lock lock(mutex_);
  docs_.insert_or_assign(std::move(key), std::move(fields));
}

std::optional<Document> KvStore::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = docs_.find(key);
  if (it == docs_.end()) return std::nullopt;
  return Document{it->first, it->second};
}

std::vector<Document> KvStore::scan(std::string_view prefix) const {
  std::shared_lock lock(mutex_);
  std::vector<Document> out;
  for (auto it = docs_.lower_bound(prefix); it != docs_.end() && has_prefix(it->first, prefix); ++it) {
    out.push_back({it->first, it->second});
  }
  return out;
}

std::vector<TermCount> KvStore::termcount(std::string_view prefix, const std::string& field) const {
  std::map<std::string, std::int64_t> counts;
  {
    std::shared_lock lock(mutex_);
    for (auto it = docs_.lower_bound(prefix); it != docs_.end() && has_prefix(it->first, prefix);
         ++it) {
      auto f = it->second.find(field);
      if (f == it->second.end()) continue;
      for (auto& t : tokenize(f->second)) ++counts[std::move(t)];
    }
  }
  return {counts.begin(), counts.end()};
}

std::size_t KvStore::erase_prefix(std::string_view prefix) {
  std::unique_lock lock(mutex_);
  std::size_t n = 0;
  auto it = docs_.lower_bound(prefix);
  while (it != docs_.end() && has_prefix(it->first, prefix)) {
    it = docs_.erase(it);
    ++n;
  }
  return n;
}

std::size_t KvStore::load_jsonl(std::istream& in) {
  std::vector<Document> staged;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Document d;
      d.key = j.at("key").get<std::string>();
      for (const auto& [k, v] : j.at("fields").items()) d.fields[k] = v.get<std::string>();
      staged.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw LineError(Errc::parse, lineno, e.what());
    }
  }
  std::unique_lock lock(mutex_);
  for (auto& d : staged) docs_.insert_or_assign(std::move(d.key), std::move(d.fields));
  return staged.size();
}

std::size_t KvStore::size() const {
  std::shared_lock lock(mutex_);
  return docs_.size();
}

std::size_t KvStore::resident_bytes() const {
  std::shared_lock lock(mutex_);
  std::size_t total = 0;
  for (const auto& [k, fields] : docs_) {
    total += k.size();
    for (const auto& [f, v] : fields) total += f.size() + v.size();
  }
  return total;
}

// TEXT language

TextQuery parse_text_query(std::string_view s) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  auto expect = [&](char c) {
    skip();
    if (i >= s.size() || s[i] != c) throw ParseError(std::string("expected '") + c + "'", i);
    ++i;
  };
  skip();
  const auto start = i;
  while (i < s.size() && text::is_ident_char(s[i])) ++i;
  const auto word = text::to_lower_ascii(s.substr(start, i - start));
  TextQuery q;
  std::size_t arity = 0;
  if (word == "scan") {
    q.kind = TextQuery::Kind::scan;
    arity = 1;
  } else if (word == "get") {
    q.kind = TextQuery::Kind::get;
    arity = 1;
  } else if (word == "termcount") {
    q.kind = TextQuery::Kind::termcount;
    arity = 2;
  } else {
    throw ParseError("expected scan, get or termcount", start);
  }
  expect('(');
  for (std::size_t a = 0; a < arity; ++a) {
    if (a > 0) expect(',');
    skip();
    if (i < s.size() && (s[i] == '$' || text::is_ident_start(s[i]))) {
      // A bare object name stands for the prefix `name/`.
      const auto b = i++;
      while (i < s.size() && text::is_ident_char(s[i])) ++i;
      q.args.push_back(std::string(s.substr(b, i - b)) + "/");
      continue;
    }
    if (i >= s.size() || s[i] != '\'') throw ParseError("expected a quoted string or a name", i);
    const auto open = i++;
    std::string v;
    for (;;) {
      if (i >= s.size()) throw ParseError("unterminated string", open);
      if (s[i] == '\'') {
        if (i + 1 < s.size() && s[i + 1] == '\'') {
          v += '\'';
          i += 2;
          continue;
        }
        ++i;
        break;
      }
      v += s[i++];
    }
    q.args.push_back(std::move(v));
  }
  expect(')');
  skip();
  if (i < s.size()) throw ParseError("trailing input", i);
  return q;
}

std::string render(const TextQuery& q) {
  std::string out;
  switch (q.kind) {
    case TextQuery::Kind::scan: out = "scan("; break;
    case TextQuery::Kind::get: out = "get("; break;
    case TextQuery::Kind::termcount: out = "termcount("; break;
  }
  for (std::size_t a = 0; a < q.args.size(); ++a) {
    if (a > 0) out += ", ";
    out += text::quote(q.args[a]);
  }
  return out + ")";
}

TextOutput execute(const KvStore& store, const TextQuery& q) {
  switch (q.kind) {
    case TextQuery::Kind::scan:
      return store.scan(q.args.at(0));
    case TextQuery::Kind::get: {
      std::vector<Document> out;
      if (auto d = store.get(q.args.at(0))) out.push_back(std::move(*d));
      return out;
    }
    case TextQuery::Kind::termcount:
      return store.termcount(q.args.at(0), q.args.at(1));
  }
  throw Error(Errc::invalid_argument, "unknown text query");
}

TextOutput execute(const KvStore& store, std::string_view text) {
  return execute(store, parse_text_query(text));
}

}  // namespace polystore::kv
