#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "polystore/array/array_expr.hpp"
#include "polystore/array/dense_array.hpp"

namespace polystore::array {

/// An expression yields an array or, for `count`, a scalar.
using ArrayOutput = std::variant<DenseArray, std::int64_t>;

using Cell = std::pair<std::vector<std::size_t>, double>;

/// Embedded dense array engine. `count` reads metadata, `multiply` is a
/// dense triple loop, `distinct` materializes and sorts every value (there
/// is no value index in a dense model).
///
/// Stored arrays are immutable; overwriting swaps the pointer, so readers
/// holding an older snapshot are unaffected.
class ArrayEngine {
 public:
  ArrayEngine() = default;
  ArrayEngine(const ArrayEngine&) = delete;
  ArrayEngine& operator=(const ArrayEngine&) = delete;

  /// Registers an array. Every dimension length must be positive.
  void store(DenseArray array, bool replace = false);
  void store(const std::string& name, std::vector<Dim> dims, std::vector<double> values);

  ArrayOutput execute(std::string_view expr);
  ArrayOutput evaluate(const ArrayExpr& expr) const;

  /// Row-major (index tuple, value) enumeration.
  std::vector<Cell> export_cells(const std::string& name) const;

  std::shared_ptr<const DenseArray> get(const std::string& name) const;
  ArrayShape shape_of(const std::string& name) const;
  bool has(const std::string& name) const;
  bool drop(const std::string& name);
  std::vector<std::string> names() const;
  std::size_t resident_bytes() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const DenseArray>> arrays_;
};

namespace ops {

DenseArray filter(const DenseArray& in, const std::vector<ValuePredicate>& preds);
DenseArray multiply(const DenseArray& a, const DenseArray& b);
DenseArray distinct(const DenseArray& in);
DenseArray dwt_haar(const DenseArray& in);
DenseArray bin_hist(const DenseArray& coeffs, const DenseArray& edges, std::size_t bins);
DenseArray subarray(const DenseArray& in, const std::vector<std::int64_t>& bounds);
std::int64_t count(const DenseArray& in);

// Native kernels with no surface in the array language.

/// Row-wise TF-IDF of a rank-2 count array; document frequencies come from
/// the first `n_docs` rows.
DenseArray tfidf(const DenseArray& counts, std::size_t n_docs);
/// Cosine distance from row `query_row` to each of rows [0, rows).
std::vector<double> cosine_to_row(const DenseArray& vectors, std::size_t rows, std::size_t query_row);

}  // namespace ops

}  // namespace polystore::array
