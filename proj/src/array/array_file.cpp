#include "polystore/array/array_file.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"
#include "polystore/common/value.hpp"

namespace polystore::array {

namespace {

double parse_cell(std::string_view field, std::size_t line) {
  const auto t = text::trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw LineError(Errc::bad_literal, line, "bad number '" + std::string(t) + "'");
  }
  return v;
}

}  // namespace

DenseArray read_array(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw LineError(Errc::parse, 1, "missing header");
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  std::string name;
  std::vector<Dim> dims;
  try {
    const auto j = nlohmann::json::parse(header);
    name = j.at("name").get<std::string>();
    for (const auto& d : j.at("dims")) {
      const auto len = d.at("length").get<long long>();
      if (len <= 0) throw LineError(Errc::invalid_argument, 1, "dimension length must be positive");
      dims.push_back({d.at("name").get<std::string>(), static_cast<std::size_t>(len)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw LineError(Errc::parse, 1, std::string("bad header: ") + e.what());
  }
  std::string body;
  std::getline(in, body);
  std::vector<double> values;
  values.reserve(product(dims));
  if (!text::trim(body).empty()) {
    for (const auto& f : text::split(body, ',')) values.push_back(parse_cell(f, 2));
  }
  try {
    return DenseArray(name, std::move(dims), std::move(values));
  } catch (const Error& e) {
    throw LineError(e.code(), 2, e.what());
  }
}

void write_array(std::ostream& out, const DenseArray& array) {
  nlohmann::json header;
  header["name"] = array.name();
  header["dims"] = nlohmann::json::array();
  for (const auto& d : array.dims()) header["dims"].push_back({{"name", d.name}, {"length", d.length}});
  out << header.dump() << '\n';
  bool first = true;
  for (double v : array.values()) {
    if (!first) out << ',';
    first = false;
    out << format_double(v);
  }
  out << '\n';
}

}  // namespace polystore::array
