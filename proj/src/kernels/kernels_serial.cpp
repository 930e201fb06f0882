#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "polystore/common/error.hpp"
#include "polystore/kernels/kernels.hpp"
#include "row_ops.hpp"

namespace polystore::kernels {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t floor_power_of_two(std::size_t n) {
  if (n == 0) return 0;
  std::size_t p = 1;
  while (p <= n / 2) p *= 2;
  return p;
}

std::size_t haar_group_count(std::size_t length) {
  std::size_t groups = 1;
  for (std::size_t n = length; n > 1; n /= 2) ++groups;
  return groups;
}

Range haar_group_range(std::size_t group) {
  if (group == 0) return {0, 1};
  const std::size_t begin = std::size_t{1} << (group - 1);
  return {begin, 2 * begin};
}

double bin_width(double lo, double hi, std::size_t bins) {
  return (hi - lo) / static_cast<double>(bins);
}

std::size_t bin_index(double v, double lo, double width, std::size_t bins) {
  if (!(width > 0.0)) return 0;
  const double f = std::floor((v - lo) / width);
  if (!(f > 0.0)) return 0;  // also catches NaN
  if (f >= static_cast<double>(bins - 1)) return bins - 1;
  return static_cast<std::size_t>(f);
}

double cosine_distance(double dot, double norm2_a, double norm2_b) {
  if (norm2_a == 0.0 || norm2_b == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(norm2_a) * std::sqrt(norm2_b));
}

double idf(std::size_t n_docs, std::size_t df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) detail::matmul_row(a.data(), b.data(), c.data(), i, k, m);
}

void haar_forward(std::span<const double> signal, std::span<double> coeffs) {
  if (!is_power_of_two(signal.size()) || coeffs.size() != signal.size()) {
    throw Error(Errc::invalid_argument, "Haar transform needs a power-of-two length");
  }
  std::vector<double> scratch;
  detail::haar_one(signal.data(), coeffs.data(), signal.size(), scratch);
}

void haar_inverse(std::span<const double> coeffs, std::span<double> signal) {
  const std::size_t n = coeffs.size();
  if (!is_power_of_two(n) || signal.size() != n) {
    throw Error(Errc::invalid_argument, "Haar inverse needs a power-of-two length");
  }
  std::vector<double> work(coeffs.begin(), coeffs.end());
  std::vector<double> scratch(n);
  for (std::size_t len = 2; len <= n; len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double a = work[i];
      const double d = work[half + i];
      scratch[2 * i] = (a + d) * kInvSqrt2;
      scratch[2 * i + 1] = (a - d) * kInvSqrt2;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(len), work.begin());
  }
  std::copy(work.begin(), work.end(), signal.begin());
}

void haar_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t length) {
  std::vector<double> scratch;
  for (std::size_t r = 0; r < rows; ++r) {
    detail::haar_one(in.data() + r * length, out.data() + r * length, length, scratch);
  }
}

void group_ranges(std::span<const double> coeffs, std::size_t rows, std::size_t length,
                  std::span<double> ranges) {
  const std::size_t groups = haar_group_count(length);
  for (std::size_t g = 0; g < groups; ++g) {
    ranges[2 * g] = std::numeric_limits<double>::infinity();
    ranges[2 * g + 1] = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = coeffs.data() + r * length;
    for (std::size_t g = 0; g < groups; ++g) {
      const auto rg = haar_group_range(g);
      for (std::size_t i = rg.begin; i < rg.end; ++i) {
        ranges[2 * g] = std::min(ranges[2 * g], row[i]);
        ranges[2 * g + 1] = std::max(ranges[2 * g + 1], row[i]);
      }
    }
  }
}

void bin_rows(std::span<const double> coeffs, std::size_t rows, std::size_t length,
              std::span<const double> edges, std::size_t bins, std::span<double> counts) {
  const std::size_t width = haar_group_count(length) * bins;
  for (std::size_t r = 0; r < rows; ++r) {
    detail::bin_one(coeffs.data() + r * length, length, edges.data(), bins,
                    counts.data() + r * width);
  }
}

void tfidf(std::span<const double> counts, std::size_t rows, std::size_t terms,
           std::size_t n_docs, std::span<double> weights) {
  std::vector<double> idfs;
  detail::document_frequencies(counts.data(), terms, n_docs, idfs);
  for (std::size_t r = 0; r < rows; ++r) {
    detail::weight_row(counts.data() + r * terms, idfs, terms, weights.data() + r * terms);
  }
}

void cosine_distances(std::span<const double> vectors, std::size_t rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out) {
  const double qn = detail::squared_norm(query.data(), dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = vectors.data() + r * dim;
    out[r] = cosine_distance(detail::dot(v, query.data(), dim), detail::squared_norm(v, dim), qn);
  }
}

}  // namespace serial
}  // namespace polystore::kernels
