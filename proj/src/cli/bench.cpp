#include "polystore/cli/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "polystore/common/error.hpp"
#include "polystore/common/stopwatch.hpp"
#include "polystore/island/polystore.hpp"
#include "polystore/middleware/middleware.hpp"

namespace polystore::cli {

namespace {

using island::Engine;

template <class F>
double time_median(std::size_t reps, F&& f) {
  f();  // warm-up
  std::vector<double> ms;
  for (std::size_t i = 0; i < std::max<std::size_t>(reps, 1); ++i) {
    Stopwatch sw;
    f();
    ms.push_back(sw.elapsed_ms());
  }
  return median(std::move(ms));
}

array::DenseArray random_array(const std::string& name, std::vector<array::Dim> dims, std::mt19937_64& rng,
                               bool integral) {
  std::vector<double> v(array::product(dims));
  std::uniform_real_distribution<double> real(0.0, 1.0);
  std::uniform_int_distribution<int> few(0, 999);
  for (auto& x : v) x = integral ? static_cast<double>(few(rng)) : real(rng);
  return array::DenseArray(name, std::move(dims), std::move(v));
}

void store_both(island::Polystore& ps, const array::DenseArray& a) {
  ps.store_array(a, Engine::array, true);
  ps.store_array(a, Engine::relational, true);
}

rel::Relation random_table(const std::string& name, std::size_t rows, std::int64_t groups, std::mt19937_64& rng) {
  rel::Relation r(name, {{"id", ColumnType::int64}, {"g", ColumnType::int64}, {"x", ColumnType::float64}});
  std::uniform_int_distribution<std::int64_t> g(0, groups - 1);
  std::uniform_real_distribution<double> x(0.0, 100.0);
  for (std::size_t i = 0; i < rows; ++i) r.append({static_cast<std::int64_t>(i), g(rng), x(rng)});
  return r;
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<BenchRow> bench_micro(const std::vector<std::size_t>& sizes, const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(opt.seed);
  for (auto n : sizes) {
    island::Polystore ps;
    store_both(ps, random_array("v", {{"i", n}}, rng, true));
    for (const char* op : {"count", "distinct"}) {
      const std::string q = std::string(op) + "(v)";
      for (auto e : {Engine::array, Engine::relational}) {
        const double ms = time_median(opt.reps, [&] { ps.execute("ARRAY", e, q); });
        rows.push_back({"micro", op, std::string(island::engine_name(e)), n, ms});
      }
    }
  }
  return rows;
}

std::vector<BenchRow> bench_matmul(const std::vector<std::size_t>& sizes, const BenchOptions& opt,
                                   double* max_rel_diff) {
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (auto n : sizes) {
    island::Polystore ps;
    store_both(ps, random_array("A", {{"i", n}, {"j", n}}, rng, false));
    store_both(ps, random_array("B", {{"i", n}, {"j", n}}, rng, false));
    island::Result on_array, on_rel;
    const double arr_ms = time_median(opt.reps, [&] { on_array = ps.execute("ARRAY", Engine::array, "multiply(A, B)"); });
    // The shim path is slow enough that one timed run is representative.
    const double rel_ms = time_median(1, [&] { on_rel = ps.execute("ARRAY", Engine::relational, "multiply(A, B)"); });
    const auto& x = std::get<array::DenseArray>(on_array).values();
    const auto& y = std::get<array::DenseArray>(on_rel).values();
    if (x.size() != y.size()) throw Error(Errc::execution, "matmul: engines disagree on the output shape");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double scale = std::max({std::abs(x[i]), std::abs(y[i]), 1e-300});
      worst = std::max(worst, std::abs(x[i] - y[i]) / scale);
    }
    rows.push_back({"matmul", "multiply", "array", n, arr_ms});
    rows.push_back({"matmul", "multiply", "relational", n, rel_ms});
  }
  if (max_rel_diff) *max_rel_diff = worst;
  return rows;
}

std::vector<Overhead> bench_overhead(const BenchOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  island::Polystore ps;
  ps.relational().store(random_table("small", 1000, 10, rng));
  ps.relational().store(random_table("mid", 50000, 100, rng));
  ps.relational().store(random_table("big", 20000, 100, rng));
  ps.store_array(random_array("v", {{"i", 100000}}, rng, true), Engine::array);
  ps.store_array(random_array("M", {{"i", 400}, {"j", 400}}, rng, false), Engine::array);

  struct Case {
    const char* name;
    const char* island;
    std::string text;
  };
  const std::vector<Case> cases = {
      {"rel-count", "D_REL", "select count(*) from small"},
      {"rel-group", "D_REL", "select g, SUM(x) AS s from mid group by g"},
      {"rel-join", "D_REL", "select a.g AS g, COUNT(*) AS c from big a join big b on a.g = b.g group by a.g"},
      {"arr-count", "D_ARR", "count(v)"},
      {"arr-distinct", "D_ARR", "distinct(v)"},
      {"arr-multiply", "D_ARR", "multiply(M, M)"},
  };

  mw::MonitorStore monitor;
  mw::Config cfg;
  cfg.seed = opt.seed;
  mw::Middleware middleware(ps, monitor, cfg);

  std::vector<Overhead> out;
  for (const auto& c : cases) {
    Overhead o;
    o.case_name = c.name;
    o.query = std::string(c.island) + "(" + c.text + ")";
    const bool rel = std::string_view(c.island) == "D_REL";
    // Interleave the two paths so drift in machine load hits both alike.
    std::vector<double> direct, through;
    const auto reps = std::max<std::size_t>(opt.reps, 3);
    auto run_direct = [&] {
      if (rel) {
        ps.relational().execute_script(c.text);
      } else {
        ps.arrays().execute(c.text);
      }
    };
    run_direct();
    middleware.run(o.query);
    for (std::size_t i = 0; i < reps; ++i) {
      Stopwatch a;
      run_direct();
      direct.push_back(a.elapsed_ms());
      Stopwatch b;
      middleware.run(o.query);
      through.push_back(b.elapsed_ms());
    }
    o.direct_ms = median(direct);
    o.middleware_ms = median(through);
    out.push_back(o);
  }
  return out;
}

std::vector<BenchRow> overhead_rows(const std::vector<Overhead>& o) {
  std::vector<BenchRow> rows;
  for (const auto& x : o) {
    rows.push_back({"overhead", x.case_name, "direct", 0, x.direct_ms});
    rows.push_back({"overhead", x.case_name, "middleware", 0, x.middleware_ms});
  }
  return rows;
}

std::string overhead_table_csv(const std::vector<Overhead>& o) {
  std::ostringstream out;
  out << "case,direct_ms,middleware_ms,overhead_ms,overhead_pct\n";
  for (const auto& x : o) {
    out << x.case_name << ',' << x.direct_ms << ',' << x.middleware_ms << ',' << x.overhead_ms() << ','
        << x.overhead_pct() << '\n';
  }
  return out.str();
}

std::vector<BenchRow> medical_rows(const analytics::WorkloadConfig& config,
                                   const std::vector<analytics::WorkloadResult>& results) {
  std::vector<BenchRow> rows;
  for (const auto& r : results) {
    const std::string mode(analytics::mode_name(r.mode));
    for (auto s : analytics::kStages) {
      rows.push_back({"medical", std::string(s), mode, config.n_patients, r.stage_ms.at(std::string(s))});
    }
    rows.push_back({"medical", "total", mode, config.n_patients, r.total_ms});
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "suite,case,engine_or_mode,size,elapsed_ms\n";
  for (const auto& r : rows) {
    out << r.suite << ',' << r.case_name << ',' << r.engine_or_mode << ',' << r.size << ',' << r.elapsed_ms << '\n';
  }
  return out.str();
}

nlohmann::json bench_json(const std::vector<BenchRow>& rows) {
  auto j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"suite", r.suite}, {"case", r.case_name}, {"engine_or_mode", r.engine_or_mode},
                 {"size", r.size}, {"elapsed_ms", r.elapsed_ms}});
  }
  return j;
}

}  // namespace polystore::cli
