#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "polystore/island/polystore.hpp"
#include "polystore/middleware/executor.hpp"
#include "polystore/middleware/monitor.hpp"
#include "polystore/middleware/plan.hpp"
#include "polystore/middleware/signature.hpp"
#include "polystore/poly/poly_ast.hpp"

namespace polystore::mw {

enum class OnMiss { random, train };

struct Config {
  double stale_threshold = 0.5;
  OnMiss on_miss = OnMiss::random;
  std::optional<std::uint64_t> seed;  // entropy when unset
  std::size_t plan_cap = 64;
};

/// A parsed, decomposed and planned query.
struct Prepared {
  std::string text;
  poly::PolyAst ast;
  poly::Decomposition decomposition;
  Signature signature;
  std::vector<QueryPlan> plans;
};

struct PlanRun {
  std::string plan_id;
  double elapsed_ms = 0;
  std::vector<StepStat> steps;
};

struct Report {
  island::Result result;
  std::string phase;         // "training" or "production"
  std::string chosen_plan;
  std::vector<PlanRun> runs;  // every plan run for this query
  bool monitor_hit = false;
  bool stale = false;         // a retrain is recommended
  double divergence = 0;
  std::size_t queued = 0;     // plans sent to the background queue
  Signature signature;
};

/// Planner, monitor, migrator and executor behind one entry point. One
/// user-facing query is admitted at a time; background plans run only
/// inside run_idle.
class Middleware {
 public:
  Middleware(island::Polystore& ps, MonitorStore& monitor, Config config = {});

  Prepared prepare(std::string_view query) const;

  /// Routes on the `TRAINING:` tag or `training`.
  Report run(std::string_view query, bool training = false);
  Report run_training(std::string_view query);
  Report run_production(std::string_view query);

  /// Executes up to `budget` queued plans, recording each; failures are
  /// recorded and skipped. Returns how many ran.
  std::size_t run_idle(std::size_t budget = SIZE_MAX);
  std::size_t queue_length() const;

  UsageSnapshot usage_now() const;

 private:
  struct InFlight;
  struct Job {
    Prepared prepared;
    QueryPlan plan;
  };

  Report training_locked(const Prepared& p);
  Report production_locked(const Prepared& p);
  MonitorRecord record_for(const Prepared& p, const QueryPlan& plan, const Execution* ex, std::string phase) const;
  void note_latency(double ms);

  island::Polystore& ps_;
  MonitorStore& monitor_;
  Config config_;
  std::mt19937_64 rng_;
  std::mutex admission_;
  mutable std::mutex state_;
  std::deque<Job> queue_;
  std::deque<double> latencies_;
  int in_flight_ = 0;
};

}  // namespace polystore::mw
