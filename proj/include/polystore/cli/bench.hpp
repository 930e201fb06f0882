#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polystore/analytics/workload.hpp"

namespace polystore::cli {

/// One line of the bench CSV: suite,case,engine_or_mode,size,elapsed_ms.
struct BenchRow {
  std::string suite;
  std::string case_name;
  std::string engine_or_mode;
  std::size_t size = 0;
  double elapsed_ms = 0;
};

struct BenchOptions {
  std::size_t reps = 3;  // the median is reported
  std::uint64_t seed = 1;
};

/// count and distinct over 1-D arrays of `sizes` cells, on both ARRAY
/// island engines.
std::vector<BenchRow> bench_micro(const std::vector<std::size_t>& sizes, const BenchOptions& opt);

/// Square multiply on both engines. `max_rel_diff` receives the largest
/// relative cell difference seen between the two engines.
std::vector<BenchRow> bench_matmul(const std::vector<std::size_t>& sizes, const BenchOptions& opt,
                                   double* max_rel_diff = nullptr);

struct Overhead {
  std::string case_name;
  std::string query;  // as sent through the middleware
  double direct_ms = 0;
  double middleware_ms = 0;
  double overhead_ms() const { return middleware_ms - direct_ms; }
  double overhead_pct() const { return direct_ms > 0 ? 100.0 * overhead_ms() / direct_ms : 0.0; }
};

/// Degenerate-island queries through the middleware against the same text
/// sent straight to the engine, from sub-millisecond to a few hundred ms.
std::vector<Overhead> bench_overhead(const BenchOptions& opt);
std::vector<BenchRow> overhead_rows(const std::vector<Overhead>& o);
std::string overhead_table_csv(const std::vector<Overhead>& o);

std::vector<BenchRow> medical_rows(const analytics::WorkloadConfig& config,
                                   const std::vector<analytics::WorkloadResult>& results);

std::string bench_csv(const std::vector<BenchRow>& rows);
nlohmann::json bench_json(const std::vector<BenchRow>& rows);

double median(std::vector<double> v);

}  // namespace polystore::cli
