#include "polystore/array/dense_array.hpp"

#include <set>

#include "polystore/common/error.hpp"

namespace polystore::array {

std::size_t product(const std::vector<Dim>& dims) {
  std::size_t n = 1;
  for (const auto& d : dims) n *= d.length;
  return n;
}

DenseArray::DenseArray(std::string name, std::vector<Dim> dims, std::vector<double> values)
    : name_(std::move(name)), dims_(std::move(dims)), values_(std::move(values)) {
  if (dims_.empty()) throw Error(Errc::schema_invariant, "array '" + name_ + "' has rank 0");
  std::set<std::string> seen;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw Error(Errc::schema_invariant, "empty dimension name");
    if (!seen.insert(d.name).second) {
      throw Error(Errc::schema_invariant, "dimension '" + d.name + "' repeated in '" + name_ + "'");
    }
  }
  const auto expected = product(dims_);
  if (values_.size() != expected) {
    throw Error(Errc::length_mismatch, "array '" + name_ + "' declares " +
                                           std::to_string(expected) + " cells but has " +
                                           std::to_string(values_.size()) + " values");
  }
}

std::size_t DenseArray::offset(const std::vector<std::size_t>& index) const {
  if (index.size() != rank()) throw Error(Errc::shape_mismatch, "index rank mismatch");
  std::size_t off = 0;
  for (std::size_t d = 0; d < rank(); ++d) {
    if (index[d] >= dims_[d].length) throw Error(Errc::shape_mismatch, "index out of bounds");
    off = off * dims_[d].length + index[d];
  }
  return off;
}

std::vector<std::size_t> DenseArray::index_of(std::size_t off) const {
  std::vector<std::size_t> index(rank());
  for (std::size_t d = rank(); d-- > 0;) {
    index[d] = off % dims_[d].length;
    off /= dims_[d].length;
  }
  return index;
}

}  // namespace polystore::array
