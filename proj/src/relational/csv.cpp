#include "polystore/relational/csv.hpp"

#include <istream>
#include <ostream>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"

namespace polystore::rel {

std::vector<std::string> split_csv_record(std::string_view line, bool* quoted) {
  std::vector<std::string> fields;
  std::string cur;
  bool cur_quoted = false;
  std::size_t i = 0;
  if (quoted) *quoted = false;
  while (true) {
    // Leading blanks before an opening quote are ignored.
    std::size_t j = i;
    while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
    if (j < line.size() && line[j] == '\'') {
      cur_quoted = true;
      if (quoted) *quoted = true;
      i = j + 1;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\'') {
          if (i + 1 < line.size() && line[i + 1] == '\'') {
            cur += '\'';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        cur += line[i++];
      }
      if (!closed) throw Error(Errc::parse, "unterminated quoted field");
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i < line.size() && line[i] != ',') {
        throw Error(Errc::parse, "text after closing quote");
      }
    } else {
      while (i < line.size() && line[i] != ',') cur += line[i++];
    }
    fields.push_back(cur_quoted ? cur : std::string(text::trim(cur)));
    cur.clear();
    cur_quoted = false;
    if (i >= line.size()) break;
    ++i;  // comma
  }
  return fields;
}

Schema parse_csv_header(std::string_view line) {
  Schema schema;
  std::vector<std::string> parts;
  try {
    parts = split_csv_record(line);
  } catch (const Error& e) {
    throw LineError(Errc::parse, 1, e.what());
  }
  for (const auto& part : parts) {
    const auto colon = part.rfind(':');
    if (colon == std::string::npos) {
      throw LineError(Errc::parse, 1, "header field '" + part + "' is not name:type");
    }
    const auto name = std::string(text::trim(std::string_view(part).substr(0, colon)));
    const auto type = text::trim(std::string_view(part).substr(colon + 1));
    if (!text::is_identifier(name)) {
      throw LineError(Errc::parse, 1, "bad column name '" + name + "'");
    }
    try {
      schema.push_back({name, parse_type_name(type)});
    } catch (const Error& e) {
      throw LineError(Errc::parse, 1, e.what());
    }
  }
  return schema;
}

Relation read_csv(const std::string& name, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  Relation rel;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
      }
      try {
        rel = Relation(name, parse_csv_header(line));
      } catch (const LineError&) {
        throw;
      } catch (const Error& e) {
        throw LineError(e.code(), 1, e.what());
      }
      have_header = true;
      continue;
    }
    if (text::trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_csv_record(line);
    } catch (const Error& e) {
      throw LineError(Errc::parse, line_no, e.what());
    }
    if (fields.size() != rel.arity()) {
      throw LineError(Errc::arity_mismatch, line_no,
                      std::to_string(fields.size()) + " values for arity-" +
                          std::to_string(rel.arity()) + " table '" + name + "'");
    }
    std::vector<Value> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      try {
        row.push_back(parse_literal(fields[c], rel.schema()[c].type));
      } catch (const Error& e) {
        throw LineError(Errc::bad_literal, line_no, e.what());
      }
    }
    rel.append(row);
  }
  if (!have_header) throw LineError(Errc::parse, 1, "missing header line");
  return rel;
}

void write_csv(const Relation& rel, std::ostream& out) {
  for (std::size_t c = 0; c < rel.arity(); ++c) {
    if (c) out << ',';
    out << rel.schema()[c].name << ':' << type_name(rel.schema()[c].type);
  }
  out << '\n';
  for (std::size_t r = 0; r < rel.size(); ++r) {
    for (std::size_t c = 0; c < rel.arity(); ++c) {
      if (c) out << ',';
      const auto v = rel.at(r, c);
      if (type_of(v) == ColumnType::text) {
        out << text::quote(std::get<std::string>(v));
      } else {
        out << to_text(v);
      }
    }
    out << '\n';
  }
}

}  // namespace polystore::rel
