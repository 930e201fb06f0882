#pragma once

// Per-row building blocks shared by the serial and OpenMP kernels, so both
// perform the same floating-point operations in the same order.

#include <cstddef>
#include <span>
#include <vector>

#include "polystore/kernels/kernels.hpp"

namespace polystore::kernels::detail {

inline void matmul_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                       std::size_t m) {
  double* crow = c + i * m;
  for (std::size_t j = 0; j < m; ++j) crow[j] = 0.0;
  const double* arow = a + i * k;
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double aik = arow[kk];
    const double* brow = b + kk * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
  }
}

inline void haar_one(const double* in, double* out, std::size_t n, std::vector<double>& scratch) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i];
  scratch.resize(n);
  for (std::size_t len = n; len >= 2; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double x0 = out[2 * i];
      const double x1 = out[2 * i + 1];
      scratch[i] = (x0 + x1) * kInvSqrt2;
      scratch[half + i] = (x0 - x1) * kInvSqrt2;
    }
    for (std::size_t i = 0; i < len; ++i) out[i] = scratch[i];
  }
}

inline void bin_one(const double* coeffs, std::size_t length, const double* edges,
                    std::size_t bins, double* counts) {
  const std::size_t groups = haar_group_count(length);
  for (std::size_t i = 0; i < groups * bins; ++i) counts[i] = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto r = haar_group_range(g);
    const double lo = edges[2 * g];
    const double width = bin_width(lo, edges[2 * g + 1], bins);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      counts[g * bins + bin_index(coeffs[i], lo, width, bins)] += 1.0;
    }
  }
}

inline void document_frequencies(const double* counts, std::size_t terms, std::size_t n_docs,
                                 std::vector<double>& idfs) {
  std::vector<std::size_t> df(terms, 0);
  for (std::size_t r = 0; r < n_docs; ++r) {
    for (std::size_t t = 0; t < terms; ++t) {
      if (counts[r * terms + t] > 0.0) ++df[t];
    }
  }
  idfs.resize(terms);
  for (std::size_t t = 0; t < terms; ++t) idfs[t] = idf(n_docs, df[t]);
}

inline void weight_row(const double* counts, const std::vector<double>& idfs, std::size_t terms,
                       double* out) {
  for (std::size_t t = 0; t < terms; ++t) out[t] = counts[t] * idfs[t];
}

inline double squared_norm(const double* v, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += v[i] * v[i];
  return s;
}

inline double dot(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace polystore::kernels::detail
