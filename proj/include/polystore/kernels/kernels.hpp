#pragma once

// Numeric kernels behind the array engine and the analytics workload.
//
// Every kernel exists twice: `serial::` is the reference implementation kept
// for testing, `parallel::` splits the outer loop across OpenMP threads. The
// per-element floating-point operation order is identical in both, so the
// two agree bit for bit. The unqualified entry points dispatch to the
// parallel variant when the build has OpenMP.

#include <cstddef>
#include <span>

namespace polystore::kernels {

/// 1/sqrt(2) rounded to double; the only scaling constant the Haar kernels
/// use, so SQL renderings of the same step can reproduce it exactly.
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Number of coefficient groups for a power-of-two length: DC plus one per
/// detail scale.
std::size_t haar_group_count(std::size_t length);

/// Half-open coefficient range of group `g` (0 = DC, then coarse to fine).
struct Range {
  std::size_t begin;
  std::size_t end;
};
Range haar_group_range(std::size_t group);

bool is_power_of_two(std::size_t n);
std::size_t floor_power_of_two(std::size_t n);

/// Width of one histogram bin over [lo, hi] split into `bins`.
double bin_width(double lo, double hi, std::size_t bins);
/// Bin of `v`: floor((v - lo) / width) clamped to [0, bins).
std::size_t bin_index(double v, double lo, double width, std::size_t bins);

/// 1 - cos between two vectors given their dot product and squared norms;
/// an all-zero vector sits at distance 1 from everything.
double cosine_distance(double dot, double norm2_a, double norm2_b);

/// idf(t) = ln((1 + N) / (1 + df)) + 1.
double idf(std::size_t n_docs, std::size_t df);

namespace serial {

/// c[n x m] = a[n x k] * b[k x m], row-major, c overwritten.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);

/// Orthonormal Haar transform of one power-of-two signal. Output layout:
/// [DC, coarsest detail, ..., finest detail].
void haar_forward(std::span<const double> signal, std::span<double> coeffs);
void haar_inverse(std::span<const double> coeffs, std::span<double> signal);
void haar_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t length);

/// Per-group min/max over rows [0, rows) of a coefficient matrix;
/// `ranges` is groups x 2 (lo, hi).
void group_ranges(std::span<const double> coeffs, std::size_t rows, std::size_t length,
                  std::span<double> ranges);

/// Histogram every coefficient group of every row. `edges` is groups x 2;
/// `counts` is rows x (groups * bins), overwritten.
void bin_rows(std::span<const double> coeffs, std::size_t rows, std::size_t length,
              std::span<const double> edges, std::size_t bins, std::span<double> counts);

/// weights = counts * idf, with document frequencies taken over the first
/// `n_docs` rows only.
void tfidf(std::span<const double> counts, std::size_t rows, std::size_t terms,
           std::size_t n_docs, std::span<double> weights);

/// Cosine distance from `query` to each of `rows` vectors.
void cosine_distances(std::span<const double> vectors, std::size_t rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out);

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
void haar_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t length);
void bin_rows(std::span<const double> coeffs, std::size_t rows, std::size_t length,
              std::span<const double> edges, std::size_t bins, std::span<double> counts);
void tfidf(std::span<const double> counts, std::size_t rows, std::size_t terms,
           std::size_t n_docs, std::span<double> weights);
void cosine_distances(std::span<const double> vectors, std::size_t rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out);

}  // namespace parallel

bool parallel_enabled();

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
void haar_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t length);
void bin_rows(std::span<const double> coeffs, std::size_t rows, std::size_t length,
              std::span<const double> edges, std::size_t bins, std::span<double> counts);
void tfidf(std::span<const double> counts, std::size_t rows, std::size_t terms,
           std::size_t n_docs, std::span<double> weights);
void cosine_distances(std::span<const double> vectors, std::size_t rows, std::size_t dim,
                      std::span<const double> query, std::span<double> out);

}  // namespace polystore::kernels
