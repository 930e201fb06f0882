#include "polystore/array/array_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include <spdlog/spdlog.h>

#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"
#include "polystore/kernels/kernels.hpp"

namespace polystore::array {

namespace ops {

std::int64_t count(const DenseArray& in) {
  return static_cast<std::int64_t>(in.kept_count().value_or(in.cell_count()));
}

DenseArray filter(const DenseArray& in, const std::vector<ValuePredicate>& preds) {
  std::vector<double> out(in.values());
  std::size_t kept = 0;
  for (auto& v : out) {
    bool pass = true;
    for (const auto& p : preds) {
      if (!p.test(v)) {
        pass = false;
        break;
      }
    }
    if (pass) {
      ++kept;
    } else {
      v = std::numeric_limits<double>::quiet_NaN();
    }
  }
  DenseArray result("filter", in.dims(), std::move(out));
  result.set_kept_count(kept);
  return result;
}

DenseArray multiply(const DenseArray& a, const DenseArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dims()[1].length != b.dims()[0].length) {
    throw Error(Errc::shape_mismatch, "multiply needs rank-2 operands with equal inner dimensions");
  }
  const auto n = a.dims()[0].length;
  const auto k = a.dims()[1].length;
  const auto m = b.dims()[1].length;
  std::vector<double> c(n * m);
  kernels::matmul(a.values(), b.values(), c, n, k, m);
  Dim second = b.dims()[1];
  if (second.name == a.dims()[0].name) second.name += "_2";
  return DenseArray("multiply", {a.dims()[0], second}, std::move(c));
}

DenseArray distinct(const DenseArray& in) {
  // Sort-based on purpose: a dense array has no value index to hash into.
  std::vector<double> values;
  values.reserve(in.cell_count());
  for (double v : in.values()) {
    if (!std::isnan(v)) values.push_back(v);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const auto n = values.size();
  return DenseArray("distinct", {{"value", n}}, std::move(values));
}

DenseArray dwt_haar(const DenseArray& in) {
  if (in.rank() > 2) throw Error(Errc::shape_mismatch, "dwt_haar needs rank 1 or 2");
  const auto full = in.dims().back().length;
  const auto length = kernels::floor_power_of_two(full);
  if (length == 0) throw Error(Errc::shape_mismatch, "dwt_haar of an empty signal");
  const auto rows = in.rank() == 2 ? in.dims()[0].length : 1;
  std::vector<double> signal;
  const std::vector<double>* src = &in.values();
  if (length != full) {
    spdlog::warn("dwt_haar: truncating signal length {} to {}", full, length);
    signal.resize(rows * length);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(in.values().begin() + static_cast<std::ptrdiff_t>(r * full), length,
                  signal.begin() + static_cast<std::ptrdiff_t>(r * length));
    }
    src = &signal;
  }
  std::vector<double> coeffs(rows * length);
  kernels::haar_rows(*src, coeffs, rows, length);
  auto dims = in.dims();
  dims.back().length = length;
  return DenseArray("dwt_haar", std::move(dims), std::move(coeffs));
}

DenseArray bin_hist(const DenseArray& coeffs, const DenseArray& edges, std::size_t bins) {
  if (coeffs.rank() > 2) throw Error(Errc::shape_mismatch, "bin_hist needs rank 1 or 2");
  const auto length = coeffs.dims().back().length;
  if (!kernels::is_power_of_two(length)) {
    throw Error(Errc::shape_mismatch, "bin_hist signal length is not a power of two");
  }
  const auto groups = kernels::haar_group_count(length);
  if (edges.rank() != 2 || edges.dims()[0].length != groups || edges.dims()[1].length != 2) {
    throw Error(Errc::shape_mismatch,
                "bin_hist edges must be " + std::to_string(groups) + " x 2");
  }
  if (bins == 0) throw Error(Errc::invalid_argument, "bin_hist needs at least one bin");
  const auto rows = coeffs.rank() == 2 ? coeffs.dims()[0].length : 1;
  std::vector<double> counts(rows * groups * bins);
  kernels::bin_rows(coeffs.values(), rows, length, edges.values(), bins, counts);
  std::vector<Dim> dims;
  if (coeffs.rank() == 2) dims.push_back(coeffs.dims()[0]);
  dims.push_back({coeffs.dims().back().name == "bin" ? "bin_2" : "bin", groups * bins});
  return DenseArray("bin_hist", std::move(dims), std::move(counts));
}

DenseArray subarray(const DenseArray& in, const std::vector<std::int64_t>& bounds) {
  if (bounds.size() != 2 * in.rank()) {
    throw Error(Errc::shape_mismatch, "subarray needs one lo,hi pair per dimension");
  }
  std::vector<Dim> dims = in.dims();
  std::vector<std::size_t> lo(in.rank());
  for (std::size_t d = 0; d < in.rank(); ++d) {
    const auto l = bounds[2 * d];
    const auto h = bounds[2 * d + 1];
    if (l < 0 || h < l || static_cast<std::size_t>(h) >= in.dims()[d].length) {
      throw Error(Errc::shape_mismatch, "subarray bounds outside dimension '" + in.dims()[d].name + "'");
    }
    lo[d] = static_cast<std::size_t>(l);
    dims[d].length = static_cast<std::size_t>(h - l + 1);
  }
  const auto total = product(dims);
  std::vector<double> out;
  out.reserve(total);
  std::vector<std::size_t> idx(in.rank(), 0);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < total; ++i) {
    // idx walks the output box in row-major order.
    std::vector<std::size_t> src(in.rank());
    for (std::size_t d = 0; d < in.rank(); ++d) src[d] = idx[d] + lo[d];
    const double v = in.at(src);
    if (!std::isnan(v)) ++kept;
    out.push_back(v);
    for (std::size_t d = in.rank(); d-- > 0;) {
      if (++idx[d] < dims[d].length) break;
      idx[d] = 0;
    }
  }
  DenseArray result("subarray", std::move(dims), std::move(out));
  if (in.filtered()) result.set_kept_count(kept);
  return result;
}

DenseArray tfidf(const DenseArray& counts, std::size_t n_docs) {
  if (counts.rank() != 2) throw Error(Errc::shape_mismatch, "tfidf needs a rank-2 array");
  const auto rows = counts.dims()[0].length;
  const auto terms = counts.dims()[1].length;
  if (n_docs > rows) throw Error(Errc::invalid_argument, "tfidf: more documents than rows");
  std::vector<double> w(rows * terms);
  kernels::tfidf(counts.values(), rows, terms, n_docs, w);
  return DenseArray("tfidf", counts.dims(), std::move(w));
}

std::vector<double> cosine_to_row(const DenseArray& vectors, std::size_t rows, std::size_t query_row) {
  if (vectors.rank() != 2) throw Error(Errc::shape_mismatch, "cosine needs a rank-2 array");
  const auto dim = vectors.dims()[1].length;
  if (rows > vectors.dims()[0].length || query_row >= vectors.dims()[0].length) {
    throw Error(Errc::invalid_argument, "cosine: row out of range");
  }
  std::vector<double> out(rows);
  const std::span<const double> all(vectors.values());
  kernels::cosine_distances(all.first(rows * dim), rows, dim, all.subspan(query_row * dim, dim), out);
  return out;
}

}  // namespace ops

void ArrayEngine::store(DenseArray array, bool replace) {
  if (!text::is_identifier(array.name())) {
    throw Error(Errc::invalid_argument, "bad array name '" + array.name() + "'");
  }
  for (const auto& d : array.dims()) {
    if (d.length == 0) {
      throw Error(Errc::invalid_argument,
                  "dimension '" + d.name + "' of '" + array.name() + "' must have positive length");
    }
  }
  const auto name = array.name();
  auto ptr = std::make_shared<const DenseArray>(std::move(array));
  std::unique_lock lock(mutex_);
  if (!replace && arrays_.count(name)) {
    throw Error(Errc::duplicate_name, "array '" + name + "' already exists");
  }
  arrays_[name] = std::move(ptr);
}

void ArrayEngine::store(const std::string& name, std::vector<Dim> dims, std::vector<double> values) {
  store(DenseArray(name, std::move(dims), std::move(values)));
}

std::shared_ptr<const DenseArray> ArrayEngine::get(const std::string& name) const {
  std::shared_lock lock(mutex_);
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw Error(Errc::unknown_object, "unknown array '" + name + "'");
  return it->second;
}

ArrayShape ArrayEngine::shape_of(const std::string& name) const {
  auto a = get(name);
  return {a->dims(), a->filtered()};
}

bool ArrayEngine::has(const std::string& name) const {
  std::shared_lock lock(mutex_);
  return arrays_.count(name) > 0;
}

bool ArrayEngine::drop(const std::string& name) {
  std::unique_lock lock(mutex_);
  return arrays_.erase(name) > 0;
}

std::vector<std::string> ArrayEngine::names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : arrays_) out.push_back(name);
  return out;
}

std::size_t ArrayEngine::resident_bytes() const {
  std::shared_lock lock(mutex_);
  std::size_t total = 0;
  for (const auto& [_, a] : arrays_) total += a->bytes();
  return total;
}

std::vector<Cell> ArrayEngine::export_cells(const std::string& name) const {
  auto a = get(name);
  std::vector<Cell> cells;
  cells.reserve(a->cell_count());
  for (std::size_t i = 0; i < a->cell_count(); ++i) cells.emplace_back(a->index_of(i), a->values()[i]);
  return cells;
}

ArrayOutput ArrayEngine::execute(std::string_view text) {
  const auto expr = parse_array_expr(text);
  check(expr, [this](const std::string& n) { return shape_of(n); });
  return evaluate(expr);
}

ArrayOutput ArrayEngine::evaluate(const ArrayExpr& e) const {
  auto array_of = [this](const ArrayExpr& arg) -> std::shared_ptr<const DenseArray> {
    if (arg.op == ArrayOp::ref) {
      if (arg.placeholder) {
        throw Error(Errc::unknown_object, "unbound placeholder '" + arg.name + "'");
      }
      return get(arg.name);
    }
    auto out = evaluate(arg);
    if (auto* a = std::get_if<DenseArray>(&out)) return std::make_shared<const DenseArray>(std::move(*a));
    throw Error(Errc::shape_mismatch, "scalar used where an array is required");
  };
  switch (e.op) {
    case ArrayOp::ref:
    case ArrayOp::scan: {
      auto a = array_of(e.op == ArrayOp::ref ? e : e.args[0]);
      return DenseArray(*a);
    }
    case ArrayOp::count:
      // Metadata only for stored arrays: no value is touched.
      return ops::count(*array_of(e.args[0]));
    case ArrayOp::distinct:
      return ops::distinct(*array_of(e.args[0]));
    case ArrayOp::filter:
      return ops::filter(*array_of(e.args[0]), e.predicates);
    case ArrayOp::multiply:
      return ops::multiply(*array_of(e.args[0]), *array_of(e.args[1]));
    case ArrayOp::dwt_haar:
      return ops::dwt_haar(*array_of(e.args[0]));
    case ArrayOp::bin_hist:
      return ops::bin_hist(*array_of(e.args[0]), *array_of(e.args[1]),
                           static_cast<std::size_t>(e.ints.at(0)));
    case ArrayOp::subarray:
      return ops::subarray(*array_of(e.args[0]), e.ints);
  }
  throw Error(Errc::invalid_argument, "unknown array operator");
}

}  // namespace polystore::array
