#include "polystore/island/result.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "polystore/common/text.hpp"
#include "polystore/relational/csv.hpp"

namespace polystore::island {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool fail(std::string* why, std::string msg) {
  if (why) *why = std::move(msg);
  return false;
}

bool value_close(const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) return close(as_double(a), as_double(b));
  return values_equal(a, b);
}

nlohmann::json value_json(const Value& v) {
  return std::visit(overloaded{
                        [](std::int64_t i) -> nlohmann::json { return i; },
                        [](double d) -> nlohmann::json {
                          if (std::isfinite(d)) return d;
                          return format_double(d);
                        },
                        [](const std::string& s) -> nlohmann::json { return s; },
                    },
                    v);
}

std::string cell_text(const Value& v) { return to_text(v); }

}  // namespace

DataModel model_of(const Result& r) {
  switch (r.index()) {
    case 1: return DataModel::relational;
    case 2: return DataModel::array;
    case 3: return DataModel::document;
    default: return DataModel::relational;
  }
}

std::string_view kind_name(const Result& r) {
  static constexpr std::string_view names[] = {"scalar", "relation", "array", "documents"};
  return names[r.index()];
}

bool close(double a, double b, double tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (a == b) return true;
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

bool canonical_equal(const Result& a, const Result& b, std::string* why) {
  if (a.index() != b.index()) {
    return fail(why, std::string(kind_name(a)) + " vs " + std::string(kind_name(b)));
  }
  if (const auto* va = std::get_if<Value>(&a)) {
    const auto& vb = std::get<Value>(b);
    if (!value_close(*va, vb)) return fail(why, "scalar " + to_text(*va) + " vs " + to_text(vb));
    return true;
  }
  if (const auto* ra = std::get_if<rel::Relation>(&a)) {
    const auto& rb = std::get<rel::Relation>(b);
    if (ra->schema() != rb.schema()) return fail(why, "schemas differ");
    if (ra->size() != rb.size()) {
      return fail(why, std::to_string(ra->size()) + " rows vs " + std::to_string(rb.size()));
    }
    const auto x = rel::canonical_rows(*ra);
    const auto y = rel::canonical_rows(rb);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t c = 0; c < x[i].size(); ++c) {
        if (!value_close(x[i][c], y[i][c])) {
          return fail(why, "row " + std::to_string(i) + " column " + ra->schema()[c].name + ": " +
                               to_text(x[i][c]) + " vs " + to_text(y[i][c]));
        }
      }
    }
    return true;
  }
  if (const auto* da = std::get_if<array::DenseArray>(&a)) {
    const auto& db = std::get<array::DenseArray>(b);
    if (da->dims() != db.dims()) return fail(why, "dimensions differ");
    if (da->kept_count() != db.kept_count()) return fail(why, "kept counts differ");
    for (std::size_t i = 0; i < da->cell_count(); ++i) {
      if (!close(da->values()[i], db.values()[i])) {
        return fail(why, "cell " + std::to_string(i) + ": " + format_double(da->values()[i]) +
                             " vs " + format_double(db.values()[i]));
      }
    }
    return true;
  }
  const auto& xa = std::get<Documents>(a);
  const auto& xb = std::get<Documents>(b);
  if (xa != xb) return fail(why, "documents differ");
  return true;
}

nlohmann::json to_json(const Result& r) {
  nlohmann::json j;
  j["kind"] = kind_name(r);
  std::visit(overloaded{
                 [&](const Value& v) { j["value"] = value_json(v); },
                 [&](const rel::Relation& rel) {
                   auto cols = nlohmann::json::array();
                   for (const auto& c : rel.schema()) cols.push_back({{"name", c.name}, {"type", type_name(c.type)}});
                   j["columns"] = cols;
                   auto rows = nlohmann::json::array();
                   for (std::size_t i = 0; i < rel.size(); ++i) {
                     auto row = nlohmann::json::array();
                     for (std::size_t c = 0; c < rel.arity(); ++c) row.push_back(value_json(rel.at(i, c)));
                     rows.push_back(std::move(row));
                   }
                   j["rows"] = rows;
                 },
                 [&](const array::DenseArray& a) {
                   auto dims = nlohmann::json::array();
                   for (const auto& d : a.dims()) dims.push_back({{"name", d.name}, {"length", d.length}});
                   j["dims"] = dims;
                   auto values = nlohmann::json::array();
                   for (double v : a.values()) values.push_back(value_json(v));
                   j["values"] = values;
                   if (a.kept_count()) j["kept_count"] = *a.kept_count();
                 },
                 [&](const Documents& docs) {
                   auto arr = nlohmann::json::array();
                   for (const auto& d : docs) arr.push_back({{"key", d.key}, {"fields", d.fields}});
                   j["documents"] = arr;
                 },
             },
             r);
  return j;
}

std::string render_table(const Result& r, std::size_t max_rows) {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string footer;
  std::visit(overloaded{
                 [&](const Value& v) {
                   header = {"value"};
                   rows.push_back({cell_text(v)});
                 },
                 [&](const rel::Relation& rel) {
                   for (const auto& c : rel.schema()) header.push_back(c.name);
                   for (std::size_t i = 0; i < rel.size(); ++i) {
                     std::vector<std::string> row;
                     for (std::size_t c = 0; c < rel.arity(); ++c) row.push_back(cell_text(rel.at(i, c)));
                     rows.push_back(std::move(row));
                   }
                   footer = std::to_string(rel.size()) + " rows";
                 },
                 [&](const array::DenseArray& a) {
                   for (const auto& d : a.dims()) header.push_back(d.name);
                   header.push_back("val");
                   for (std::size_t i = 0; i < a.cell_count(); ++i) {
                     std::vector<std::string> row;
                     for (auto x : a.index_of(i)) row.push_back(std::to_string(x));
                     row.push_back(format_double(a.values()[i]));
                     rows.push_back(std::move(row));
                   }
                   std::string shape;
                   for (const auto& d : a.dims()) shape += (shape.empty() ? "" : "x") + std::to_string(d.length);
                   footer = shape + " array";
                   if (a.kept_count()) footer += ", " + std::to_string(*a.kept_count()) + " kept";
                 },
                 [&](const Documents& docs) {
                   header = {"key", "fields"};
                   for (const auto& d : docs) {
                     std::string fields;
                     for (const auto& [k, v] : d.fields) fields += (fields.empty() ? "" : " ") + k + "=" + text::quote(v);
                     rows.push_back({d.key, fields});
                   }
                   footer = std::to_string(docs.size()) + " documents";
                 },
             },
             r);
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  const auto shown = std::min(rows.size(), max_rows);
  for (std::size_t i = 0; i < shown; ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) width[c] = std::max(width[c], rows[i][c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << " | ";
      out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
    }
    out << '\n';
  };
  line(header);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "-+-" : "") << std::string(width[c], '-');
  out << '\n';
  for (std::size_t i = 0; i < shown; ++i) line(rows[i]);
  if (shown < rows.size()) out << "... " << rows.size() - shown << " more\n";
  if (!footer.empty()) out << "(" << footer << ")\n";
  return out.str();
}

std::string render_csv(const Result& r) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const Value& v) { out << "value\n" << to_text(v) << '\n'; },
                 [&](const rel::Relation& rel) { rel::write_csv(rel, out); },
                 [&](const array::DenseArray& a) {
                   for (const auto& d : a.dims()) out << d.name << ',';
                   out << "val\n";
                   for (std::size_t i = 0; i < a.cell_count(); ++i) {
                     for (auto x : a.index_of(i)) out << x << ',';
                     out << format_double(a.values()[i]) << '\n';
                   }
                 },
                 [&](const Documents& docs) {
                   out << "key,field,value\n";
                   for (const auto& d : docs) {
                     for (const auto& [k, v] : d.fields) out << text::quote(d.key) << ',' << k << ',' << text::quote(v) << '\n';
                   }
                 },
             },
             r);
  return out.str();
}

}  // namespace polystore::island
