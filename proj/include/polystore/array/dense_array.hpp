#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace polystore::array {

struct Dim {
  std::string name;
  std::size_t length = 0;

  bool operator==(const Dim&) const = default;
};

/// Named dense array, row-major float64 cells, every dimension starting at 0.
///
/// A filtered array carries `kept_count`: the number of cells that passed
/// the filter. Cells that did not are NaN, since the dense model cannot
/// delete them.
class DenseArray {
 public:
  DenseArray() = default;
  /// Throws Errc::length_mismatch when values.size() != product of lengths,
  /// Errc::schema_invariant on duplicate or empty dim names or rank 0.
  DenseArray(std::string name, std::vector<Dim> dims, std::vector<double> values);

  const std::string& name() const noexcept { return name_; }
  void rename(std::string name) { name_ = std::move(name); }
  const std::vector<Dim>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t cell_count() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

  std::optional<std::size_t> kept_count() const noexcept { return kept_; }
  void set_kept_count(std::optional<std::size_t> kept) { kept_ = kept; }
  bool filtered() const noexcept { return kept_.has_value(); }

  /// Row-major offset of an index tuple.
  std::size_t offset(const std::vector<std::size_t>& index) const;
  /// Index tuple of a row-major offset.
  std::vector<std::size_t> index_of(std::size_t offset) const;

  double at(const std::vector<std::size_t>& index) const { return values_[offset(index)]; }

  std::size_t bytes() const { return values_.capacity() * sizeof(double); }

 private:
  std::string name_;
  std::vector<Dim> dims_;
  std::vector<double> values_;
  std::optional<std::size_t> kept_;
};

std::size_t product(const std::vector<Dim>& dims);

}  // namespace polystore::array
