#pragma once

#include <iosfwd>

#include "polystore/array/dense_array.hpp"

namespace polystore::array {

/// Reads the two-line array format: a JSON header
/// `{"name":..., "dims":[{"name":..., "length":...}, ...]}` and one line of
/// comma-separated row-major values. Errors are LineErrors.
DenseArray read_array(std::istream& in);

void write_array(std::ostream& out, const DenseArray& array);

}  // namespace polystore::array
