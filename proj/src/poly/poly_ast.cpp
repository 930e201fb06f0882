#include "polystore/poly/poly_ast.hpp"

#include <cctype>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"

namespace polystore::poly {

namespace {

bool upper_ident_start(char c) { return c >= 'A' && c <= 'Z'; }
bool upper_ident_char(char c) { return upper_ident_start(c) || (c >= '0' && c <= '9') || c == '_'; }

class Parser {
 public:
  Parser(std::string_view s, const IslandPredicate& is_island) : s_(s), is_island_(is_island) {}

  // Island name at i followed by `(`: returns the name length, else 0.
  std::size_t scope_at(std::size_t i) const {
    if (!upper_ident_start(s_[i])) return 0;
    if (i > 0 && text::is_ident_char(s_[i - 1])) return 0;
    std::size_t j = i;
    while (j < s_.size() && upper_ident_char(s_[j])) ++j;
    if (j >= s_.size() || s_[j] != '(') return 0;
    return is_island_(s_.substr(i, j - i)) ? j - i : 0;
  }

  // Parses `NAME(body)` starting at the name; leaves pos_ after `)`.
  ScopeNode scope(std::size_t name_len) {
    ScopeNode node;
    node.position = pos_;
    node.island = std::string(s_.substr(pos_, name_len));
    pos_ += name_len + 1;
    const auto open = pos_ - 1;
    std::string current;
    int depth = 0;
    for (;;) {
      if (pos_ >= s_.size()) throw ParseError("unbalanced '(': scope never closed", open);
      const char c = s_[pos_];
      if (c == '\'') {
        const auto start = pos_++;
        for (;;) {
          if (pos_ >= s_.size()) throw ParseError("unterminated string", start);
          if (s_[pos_] == '\'') {
            if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
              pos_ += 2;
              continue;
            }
            ++pos_;
            break;
          }
          ++pos_;
        }
        current.append(s_.substr(start, pos_ - start));
        continue;
      }
      if (c == '$') throw ParseError("'$' is reserved for placeholders", pos_);
      if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (depth == 0) {
          ++pos_;
          break;
        }
        --depth;
      } else if (const auto len = scope_at(pos_)) {
        node.texts.push_back(std::move(current));
        current.clear();
        node.children.push_back(scope(len));
        continue;
      }
      current.push_back(c);
      ++pos_;
    }
    node.texts.push_back(std::move(current));
    return node;
  }

  PolyAst parse() {
    PolyAst ast;
    skip_space();
    static constexpr std::string_view kTag = "TRAINING:";
    if (s_.substr(pos_, kTag.size()) == kTag) {
      ast.training = true;
      pos_ += kTag.size();
      skip_space();
    }
    ast.prefix = std::string(s_.substr(0, pos_));
    if (pos_ >= s_.size()) throw ParseError("empty query", pos_);
    const auto len = scope_at(pos_);
    if (len == 0) {
      std::size_t j = pos_;
      while (j < s_.size() && text::is_ident_char(s_[j])) ++j;
      if (j == pos_) throw ParseError("expected an island scope", pos_);
      throw ParseError("unknown island '" + std::string(s_.substr(pos_, j - pos_)) + "'", pos_);
    }
    ast.root = scope(len);
    const auto tail = pos_;
    skip_space();
    if (pos_ < s_.size()) {
      if (s_[pos_] == ')') throw ParseError("unbalanced ')'", pos_);
      throw ParseError("text after the outermost scope", pos_);
    }
    ast.trailing = std::string(s_.substr(tail));
    return ast;
  }

 private:
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string_view s_;
  const IslandPredicate& is_island_;
  std::size_t pos_ = 0;
};

void flatten_into(const ScopeNode& node, std::string& out) {
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    out += node.texts[i];
    flatten_into(node.children[i], out);
  }
  out += node.texts.back();
}

struct Decomposer {
  Decomposition d;

  Slot visit(const ScopeNode& node) {
    if (single_island(node)) {
      Container c;
      c.id = d.containers.size();
      c.island = node.island;
      c.text = flatten_body(node);
      c.subtree = node;
      d.containers.push_back(std::move(c));
      return {true, d.containers.size() - 1};
    }
    const auto id = d.remainder.nodes.size();
    d.remainder.nodes.push_back({id, node.island, node.texts, {}});
    std::vector<Slot> slots;
    for (const auto& child : node.children) slots.push_back(visit(child));
    d.remainder.nodes[id].slots = std::move(slots);
    return {false, id};
  }
};

ScopeNode rebuild(const Decomposition& d, const Slot& slot) {
  if (slot.container) return d.containers.at(slot.index).subtree;
  const auto& r = d.remainder.nodes.at(slot.index);
  ScopeNode node;
  node.island = r.island;
  node.texts = r.texts;
  for (const auto& s : r.slots) node.children.push_back(rebuild(d, s));
  return node;
}

}  // namespace

PolyAst parse(std::string_view text, const IslandPredicate& is_island) {
  return Parser(text, is_island).parse();
}

std::string render(const ScopeNode& node) {
  std::string out = node.island + "(";
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    out += node.texts[i];
    out += render(node.children[i]);
  }
  out += node.texts.back();
  return out + ")";
}

std::string reserialize(const PolyAst& ast) { return ast.prefix + render(ast.root) + ast.trailing; }

std::string flatten_body(const ScopeNode& node) {
  std::string out;
  flatten_into(node, out);
  return out;
}

bool single_island(const ScopeNode& node) {
  for (const auto& c : node.children) {
    if (c.island != node.island || !single_island(c)) return false;
  }
  return true;
}

std::string Slot::placeholder() const {
  return (container ? "$c" : "$r") + std::to_string(index);
}

std::string RemainderNode::text() const {
  std::string out;
  for (std::size_t i = 0; i < slots.size(); ++i) out += texts[i] + slots[i].placeholder();
  return out + texts.back();
}

std::string Remainder::text() const { return trivial() ? "$c0" : nodes.front().text(); }

Decomposition decompose(const ScopeNode& root) {
  Decomposer dc;
  dc.visit(root);
  return std::move(dc.d);
}

Decomposition decompose(const PolyAst& ast) { return decompose(ast.root); }

ScopeNode substitute(const Decomposition& d) {
  return rebuild(d, d.remainder.trivial() ? Slot{true, 0} : Slot{false, 0});
}

std::vector<PlaceholderRef> find_placeholders(std::string_view s) {
  std::vector<PlaceholderRef> out;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\'') {
      quoted = !quoted;  // a doubled quote toggles twice
      continue;
    }
    if (quoted || s[i] != '$' || i + 2 >= s.size() || (s[i + 1] != 'c' && s[i + 1] != 'r')) continue;
    std::size_t j = i + 2;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j == i + 2) continue;
    out.push_back({{s[i + 1] == 'c', std::stoul(std::string(s.substr(i + 2, j - i - 2)))}, i, j - i});
    i = j - 1;
  }
  return out;
}

}  // namespace polystore::poly
