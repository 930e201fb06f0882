#include <cstdint>
#include <vector>

#include "polystore/kernels/kernels.hpp"
#include "row_ops.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polystore::kernels {

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    detail::matmul_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, m);
  }
}

void haar_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t length) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
      const auto off = static_cast<std::size_t>(r) * length;
      detail::haar_one(in.data() + off, out.data() + off, length, scratch);
    }
  }
}

void bin_rows(std::span<const double> coeffs, std::size_t rows, std::size_t length,
              std::span<const double> edges, std::size_t bins, std::span<double> counts) {
  const std::size_t width = haar_group_count(length) * bins;
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto row = static_cast<std::size_t>(r);
    detail::bin_one(coeffs.data() + row * length, length, edges.data(), bins,
                    counts.data() + row * width);
  }
}

void tfidf(std::span<const double> counts, std::size_t rows, std::size_t terms,
           std::size_t n_docs, std::span<double> weights) {
  std::vector<double> idfs;
  detail::document_frequencies(counts.data(), terms, n_docs, idfs);
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto row = static_cast<std::size_t>(r);
    detail::weight_row(counts.data() + row * terms, idfs, terms, weights.data() + row * terms);
  }
}

void cosine_distances(std::span<const double> vectors, std::size_t rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out) {
  const double qn = detail::squared_norm(query.data(), dim);
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    const double* v = vectors.data() + static_cast<std::size_t>(r) * dim;
    out[static_cast<std::size_t>(r)] =
        cosine_distance(detail::dot(v, query.data(), dim), detail::squared_norm(v, dim), qn);
  }
}

}  // namespace parallel

bool parallel_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

#ifdef _OPENMP
namespace impl = parallel;
#else
namespace impl = serial;
#endif

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  impl::matmul(a, b, c, n, k, m);
}

void haar_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t length) {
  impl::haar_rows(in, out, rows, length);
}

void bin_rows(std::span<const double> coeffs, std::size_t rows, std::size_t length,
              std::span<const double> edges, std::size_t bins, std::span<double> counts) {
  impl::bin_rows(coeffs, rows, length, edges, bins, counts);
}

void tfidf(std::span<const double> counts, std::size_t rows, std::size_t terms,
           std::size_t n_docs, std::span<double> weights) {
  impl::tfidf(counts, rows, terms, n_docs, weights);
}

void cosine_distances(std::span<const double> vectors, std::size_t rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out) {
  impl::cosine_distances(vectors, rows, dim, query, out);
}

}  // namespace polystore::kernels
