#include "polystore/middleware/signature.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <set>

#include "polystore/common/text.hpp"
#include "polystore/island/polystore.hpp"

namespace polystore::mw {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

void render_tree(const poly::ScopeNode& node, const std::vector<std::string>& objects, std::string& out,
                 std::vector<Constant>& constants) {
  out += node.island + "(";
  for (std::size_t i = 0; i < node.texts.size(); ++i) {
    auto n = normalize(node.texts[i], objects);
    out += n.text;
    constants.insert(constants.end(), n.constants.begin(), n.constants.end());
    if (i < node.children.size()) render_tree(node.children[i], objects, out, constants);
  }
  out += ")";
}

}  // namespace

Normalized normalize(std::string_view s, const std::vector<std::string>& objects) {
  Normalized out;
  auto emit = [&](std::string_view token) {
    if (!out.text.empty() && out.text.back() != ' ') out.text += ' ';
    out.text += token;
  };
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '\'') {
      std::string value;
      ++i;
      while (i < s.size()) {
        if (s[i] == '\'') {
          if (i + 1 < s.size() && s[i + 1] == '\'') {
            value += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value += s[i++];
      }
      out.constants.push_back({false, std::move(value)});
      emit("?str");
      continue;
    }
    if (c == '$') {
      std::size_t j = i + 1;
      while (j < s.size() && text::is_ident_char(s[j]) && !is_digit(s[j])) ++j;
      while (j < s.size() && text::is_ident_char(s[j])) ++j;
      // `$c12` -> `$c`: the slot kind matters, its number does not.
      std::string token(s.substr(i, j - i));
      while (token.size() > 2 && is_digit(token.back())) token.pop_back();
      emit(token);
      i = j;
      continue;
    }
    if (text::is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && text::is_ident_char(s[j])) ++j;
      const auto word = s.substr(i, j - i);
      if (std::find(objects.begin(), objects.end(), word) != objects.end()) {
        emit("?obj");
      } else {
        emit(text::to_lower_ascii(word));
      }
      i = j;
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      std::size_t j = i;
      while (j < s.size() && (is_digit(s[j]) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && is_digit(s[k])) {
          j = k;
          while (j < s.size() && is_digit(s[j])) ++j;
        }
      }
      out.constants.push_back({true, std::string(s.substr(i, j - i))});
      emit("?num");
      i = j;
      continue;
    }
    emit(std::string_view(&s[i], 1));
    ++i;
  }
  return out;
}

Signature signature_of(const poly::Decomposition& d, const island::Polystore& ps) {
  std::set<std::string> objects;
  for (const auto& c : d.containers) {
    for (auto& o : ps.referenced_objects(c.text, c.island)) objects.insert(std::move(o));
  }
  for (const auto& r : d.remainder.nodes) {
    for (auto& o : ps.referenced_objects(r.text(), r.island)) objects.insert(std::move(o));
  }
  Signature sig;
  sig.objects.assign(objects.begin(), objects.end());
  // Hash the reassembled tree so container numbering cannot matter.
  std::string normalized;
  render_tree(poly::substitute(d), sig.objects, normalized, sig.constants);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(normalized)));
  sig.structure = hex;
  return sig;
}

double constant_distance(const std::vector<Constant>& a, const std::vector<Constant>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].numeric != b[i].numeric) return std::numeric_limits<double>::infinity();
    if (!a[i].numeric) {
      d += a[i].text == b[i].text ? 0.0 : 1.0;
      continue;
    }
    const double x = std::stod(a[i].text);
    const double y = std::stod(b[i].text);
    const double scale = std::max(std::fabs(x), std::fabs(y));
    if (scale > 0) d += std::fabs(x - y) / scale;
  }
  return d;
}

nlohmann::json to_json(const Signature& s) {
  auto consts = nlohmann::json::array();
  for (const auto& c : s.constants) consts.push_back({{"type", c.numeric ? "num" : "str"}, {"text", c.text}});
  return {{"structure", s.structure}, {"objects", s.objects}, {"constants", consts}};
}

Signature signature_from_json(const nlohmann::json& j) {
  Signature s;
  s.structure = j.at("structure").get<std::string>();
  s.objects = j.at("objects").get<std::vector<std::string>>();
  for (const auto& c : j.at("constants")) {
    s.constants.push_back({c.at("type").get<std::string>() == "num", c.at("text").get<std::string>()});
  }
  return s;
}

}  // namespace polystore::mw
