// Serial against OpenMP kernels: timing and bit-equality on the same inputs.

#include <cstring>
#include <iostream>
#include <random>
#include <vector>

#include <CLI11.hpp>

#include "polystore/common/stopwatch.hpp"
#include "polystore/kernels/kernels.hpp"

namespace k = polystore::kernels;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    polystore::Stopwatch sw;
    f();
    best = std::min(best, sw.elapsed_ms());
  }
  return best;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* kernel, std::size_t size, double serial, double parallel, bool equal) {
  std::cout << kernel << ',' << size << ',' << serial << ',' << parallel << ',' << serial / parallel << ','
            << (equal ? "yes" : "NO") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("serial vs parallel kernels", "bench_kernels");
  std::size_t n = 400;
  std::size_t rows = 256;
  std::size_t length = 4096;
  int reps = 3;
  app.add_option("--n", n, "matmul size");
  app.add_option("--rows", rows, "signal rows");
  app.add_option("--length", length, "signal length (power of two)");
  app.add_option("--reps", reps, "repetitions, best reported");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  auto fill = [&](std::size_t m) {
    std::vector<double> v(m);
    for (auto& x : v) x = g(rng);
    return v;
  };

  std::cout << "kernel,size,serial_ms,parallel_ms,speedup,bit_equal\n";
  {
    auto a = fill(n * n), b = fill(n * n);
    std::vector<double> c1(n * n), c2(n * n);
    const double s = best_of(reps, [&] { k::serial::matmul(a, b, c1, n, n, n); });
    const double p = best_of(reps, [&] { k::parallel::matmul(a, b, c2, n, n, n); });
    report("matmul", n, s, p, same_bits(c1, c2));
  }
  auto sig = fill(rows * length);
  std::vector<double> h1(rows * length), h2(rows * length);
  {
    const double s = best_of(reps, [&] { k::serial::haar_rows(sig, h1, rows, length); });
    const double p = best_of(reps, [&] { k::parallel::haar_rows(sig, h2, rows, length); });
    report("haar_rows", rows * length, s, p, same_bits(h1, h2));
  }
  const std::size_t bins = 16;
  const auto groups = k::haar_group_count(length);
  std::vector<double> edges(2 * groups);
  k::serial::group_ranges(h1, rows, length, edges);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    if (edges[2 * gi + 1] == edges[2 * gi]) edges[2 * gi + 1] += 1.0;
  }
  std::vector<double> c1(rows * groups * bins), c2(rows * groups * bins);
  {
    const double s = best_of(reps, [&] { k::serial::bin_rows(h1, rows, length, edges, bins, c1); });
    const double p = best_of(reps, [&] { k::parallel::bin_rows(h1, rows, length, edges, bins, c2); });
    report("bin_rows", rows * length, s, p, same_bits(c1, c2));
  }
  const std::size_t terms = groups * bins;
  std::vector<double> w1(c1.size()), w2(c1.size());
  {
    const double s = best_of(reps, [&] { k::serial::tfidf(c1, rows, terms, rows - 1, w1); });
    const double p = best_of(reps, [&] { k::parallel::tfidf(c1, rows, terms, rows - 1, w2); });
    report("tfidf", rows * terms, s, p, same_bits(w1, w2));
  }
  {
    std::vector<double> q(w1.end() - static_cast<std::ptrdiff_t>(terms), w1.end());
    std::vector<double> d1(rows), d2(rows);
    const double s = best_of(reps, [&] { k::serial::cosine_distances(w1, rows, terms, q, d1); });
    const double p = best_of(reps, [&] { k::parallel::cosine_distances(w1, rows, terms, q, d2); });
    report("cosine", rows * terms, s, p, same_bits(d1, d2));
  }
  return 0;
}
