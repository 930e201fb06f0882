#include "polystore/middleware/middleware.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <spdlog/spdlog.h>

#include "polystore/common/error.hpp"
#include "polystore/common/stopwatch.hpp"

namespace polystore::mw {

namespace {

constexpr std::size_t kLatencyWindow = 16;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

struct Middleware::InFlight {
  Middleware& m;
  explicit InFlight(Middleware& mw) : m(mw) {
    std::lock_guard lock(m.state_);
    ++m.in_flight_;
  }
  ~InFlight() {
    std::lock_guard lock(m.state_);
    --m.in_flight_;
  }
};

Middleware::Middleware(island::Polystore& ps, MonitorStore& monitor, Config config)
    : ps_(ps), monitor_(monitor), config_(config), rng_(config.seed ? *config.seed : std::random_device{}()) {}

Prepared Middleware::prepare(std::string_view query) const {
  Prepared p;
  p.text = std::string(query);
  p.ast = poly::parse(query, island::is_island);
  p.decomposition = poly::decompose(p.ast);
  p.signature = signature_of(p.decomposition, ps_);
  p.plans = enumerate_plans(p.decomposition, ps_, config_.plan_cap);
  return p;
}

UsageSnapshot Middleware::usage_now() const {
  UsageSnapshot u;
  {
    std::lock_guard lock(state_);
    u.active_queries = in_flight_ + static_cast<double>(queue_.size());
    if (!latencies_.empty()) {
      u.avg_latency_ms = std::accumulate(latencies_.begin(), latencies_.end(), 0.0) / latencies_.size();
    }
  }
  u.relational_bytes = static_cast<double>(ps_.resident_bytes(island::Engine::relational));
  u.array_bytes = static_cast<double>(ps_.resident_bytes(island::Engine::array));
  u.kv_bytes = static_cast<double>(ps_.resident_bytes(island::Engine::kv));
  return u;
}

void Middleware::note_latency(double ms) {
  std::lock_guard lock(state_);
  latencies_.push_back(ms);
  if (latencies_.size() > kLatencyWindow) latencies_.pop_front();
}

MonitorRecord Middleware::record_for(const Prepared& p, const QueryPlan& plan, const Execution* ex,
                                     std::string phase) const {
  MonitorRecord r;
  r.signature = p.signature;
  r.query = p.text;
  r.plan_id = plan.id;
  r.plan = to_json(plan);
  if (ex) {
    r.elapsed_ms = ex->total_ms;
    for (const auto& s : ex->steps) r.step_ms.push_back(s.ms);
  }
  r.usage = usage_now();
  r.phase = std::move(phase);
  r.timestamp_ms = now_ms();
  return r;
}

Report Middleware::run(std::string_view query, bool training) {
  std::lock_guard admit(admission_);
  const auto p = prepare(query);
  return (training || p.ast.training) ? training_locked(p) : production_locked(p);
}

Report Middleware::run_training(std::string_view query) {
  std::lock_guard admit(admission_);
  return training_locked(prepare(query));
}

Report Middleware::run_production(std::string_view query) {
  std::lock_guard admit(admission_);
  return production_locked(prepare(query));
}

Report Middleware::training_locked(const Prepared& p) {
  Stopwatch sw;
  Report report;
  report.phase = "training";
  report.signature = p.signature;
  std::vector<Execution> outcomes;
  InFlight in_flight(*this);
  // Measure every plan before recording any, so the records of one training
  // share a comparable usage snapshot.
  std::vector<MonitorRecord> records;
  for (const auto& plan : p.plans) {
    outcomes.push_back(execute_plan(ps_, p.decomposition, plan));
    records.push_back(record_for(p, plan, &outcomes.back(), "training"));
    report.runs.push_back({plan.id, outcomes.back().total_ms, outcomes.back().steps});
  }
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    std::string why;
    if (!island::canonical_equal(outcomes[0].result, outcomes[i].result, &why)) {
      throw Error(Errc::plan_divergence,
                  "plans " + p.plans[0].id + " and " + p.plans[i].id + " disagree: " + why);
    }
  }
  // The snapshot includes this query's own latency, as production's will.
  note_latency(sw.elapsed_ms());
  const auto usage = usage_now();
  for (auto& r : records) {
    r.usage = usage;
    monitor_.append(std::move(r));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].total_ms < outcomes[best].total_ms) best = i;
  }
  report.chosen_plan = p.plans[best].id;
  report.result = std::move(outcomes[best].result);
  return report;
}

Report Middleware::production_locked(const Prepared& p) {
  Stopwatch sw;
  Report report;
  report.phase = "production";
  report.signature = p.signature;
  std::optional<InFlight> in_flight(std::in_place, *this);
  const auto now = usage_now();
  const QueryPlan* chosen = nullptr;
  if (auto hit = monitor_.lookup(p.signature, now, config_.stale_threshold)) {
    for (const auto& plan : p.plans) {
      if (plan.id == hit->plan_id) chosen = &plan;
    }
    if (chosen) {
      report.monitor_hit = true;
      report.stale = hit->stale;
      report.divergence = hit->divergence;
      if (hit->stale) {
        spdlog::info("usage diverged by {:.3f} since plan {} was measured; retraining recommended", hit->divergence,
                     hit->plan_id);
      }
    }
  }
  if (!chosen) {
    if (config_.on_miss == OnMiss::train) {
      in_flight.reset();
      auto r = training_locked(p);
      r.phase = "training";
      return r;
    }
    std::uniform_int_distribution<std::size_t> pick(0, p.plans.size() - 1);
    const auto idx = pick(rng_);
    chosen = &p.plans[idx];
    std::lock_guard lock(state_);
    for (std::size_t i = 0; i < p.plans.size(); ++i) {
      if (i != idx) queue_.push_back({p, p.plans[i]});
    }
    report.queued = p.plans.size() - 1;
  }
  auto ex = execute_plan(ps_, p.decomposition, *chosen);
  note_latency(sw.elapsed_ms());
  auto record = record_for(p, *chosen, &ex, "production");
  in_flight.reset();
  monitor_.append(std::move(record));
  report.chosen_plan = chosen->id;
  report.runs.push_back({chosen->id, ex.total_ms, ex.steps});
  report.result = std::move(ex.result);
  return report;
}

std::size_t Middleware::run_idle(std::size_t budget) {
  std::lock_guard admit(admission_);
  std::size_t ran = 0;
  while (ran < budget) {
    Job job;
    {
      std::lock_guard lock(state_);
      if (queue_.empty()) break;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    ++ran;
    InFlight in_flight(*this);
    try {
      const auto ex = execute_plan(ps_, job.prepared.decomposition, job.plan);
      auto r = record_for(job.prepared, job.plan, &ex, "production");
      r.background = true;
      monitor_.append(std::move(r));
    } catch (const Error& e) {
      auto r = record_for(job.prepared, job.plan, nullptr, "production");
      r.background = true;
      r.error = e.what();
      monitor_.append(std::move(r));
    }
  }
  return ran;
}

std::size_t Middleware::queue_length() const {
  std::lock_guard lock(state_);
  return queue_.size();
}

}  // namespace polystore::mw
