#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polystore/middleware/signature.hpp"

namespace polystore::mw {

/// System load when a query ran.
struct UsageSnapshot {
  double active_queries = 0;  // in flight plus queued background plans
  double relational_bytes = 0;
  double array_bytes = 0;
  double kv_bytes = 0;
  double avg_latency_ms = 0;  // moving average of the last 16 queries

  bool operator==(const UsageSnapshot&) const = default;
};

/// Sum over the five fields of |a - b| / (a + b), each term in [0, 1];
/// symmetric, and 0 exactly when the snapshots are equal.
double usage_divergence(const UsageSnapshot& a, const UsageSnapshot& b);

inline constexpr int kMonitorRecordVersion = 1;

struct MonitorRecord {
  int v = kMonitorRecordVersion;
  std::uint64_t seq = 0;  // append order, used for recency
  Signature signature;
  std::string query;
  std::string plan_id;
  nlohmann::json plan;
  double elapsed_ms = 0;
  std::vector<double> step_ms;
  UsageSnapshot usage;
  std::string phase;  // "training" or "production"
  bool background = false;
  std::string error;  // set when the plan failed
  std::int64_t timestamp_ms = 0;
};

nlohmann::json to_json(const MonitorRecord& r);
MonitorRecord record_from_json(const nlohmann::json& j);

struct Lookup {
  std::string plan_id;
  nlohmann::json plan;
  double elapsed_ms = 0;
  double constant_distance = 0;
  double divergence = 0;
  bool stale = false;
};

/// Append-only JSON-lines store. An empty path keeps records in memory.
/// The best plan is always derived by scanning, never cached.
class MonitorStore {
 public:
  explicit MonitorStore(std::string path = "");

  void append(MonitorRecord r);
  std::vector<MonitorRecord> records() const;
  std::size_t size() const;

  /// Among successful records with the same structure and objects, take the
  /// constants nearest to `sig` (ties to the most recent), then the record
  /// of minimal elapsed time under those constants.
  std::optional<Lookup> lookup(const Signature& sig, const UsageSnapshot& now, double stale_threshold) const;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::vector<MonitorRecord> records_;
};

}  // namespace polystore::mw
