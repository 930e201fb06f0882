#include "polystore/middleware/monitor.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "polystore/common/error.hpp"

namespace polystore::mw {

namespace {

double relative(double a, double b) {
  const double s = std::fabs(a) + std::fabs(b);
  return s == 0 ? 0.0 : std::fabs(a - b) / s;
}

nlohmann::json usage_json(const UsageSnapshot& u) {
  return {{"active_queries", u.active_queries},
          {"relational_bytes", u.relational_bytes},
          {"array_bytes", u.array_bytes},
          {"kv_bytes", u.kv_bytes},
          {"avg_latency_ms", u.avg_latency_ms}};
}

UsageSnapshot usage_from_json(const nlohmann::json& j) {
  UsageSnapshot u;
  u.active_queries = j.value("active_queries", 0.0);
  u.relational_bytes = j.value("relational_bytes", 0.0);
  u.array_bytes = j.value("array_bytes", 0.0);
  u.kv_bytes = j.value("kv_bytes", 0.0);
  u.avg_latency_ms = j.value("avg_latency_ms", 0.0);
  return u;
}

}  // namespace

double usage_divergence(const UsageSnapshot& a, const UsageSnapshot& b) {
  return relative(a.active_queries, b.active_queries) + relative(a.relational_bytes, b.relational_bytes) +
         relative(a.array_bytes, b.array_bytes) + relative(a.kv_bytes, b.kv_bytes) +
         relative(a.avg_latency_ms, b.avg_latency_ms);
}

nlohmann::json to_json(const MonitorRecord& r) {
  nlohmann::json j = {{"v", r.v},
                      {"seq", r.seq},
                      {"signature", to_json(r.signature)},
                      {"query", r.query},
                      {"plan_id", r.plan_id},
                      {"plan", r.plan},
                      {"elapsed_ms", r.elapsed_ms},
                      {"step_ms", r.step_ms},
                      {"usage", usage_json(r.usage)},
                      {"phase", r.phase},
                      {"background", r.background},
                      {"timestamp_ms", r.timestamp_ms}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

MonitorRecord record_from_json(const nlohmann::json& j) {
  MonitorRecord r;
  r.v = j.at("v").get<int>();
  if (r.v != kMonitorRecordVersion) {
    throw Error(Errc::io, "unsupported monitor record version " + std::to_string(r.v));
  }
  r.seq = j.value("seq", std::uint64_t{0});
  r.signature = signature_from_json(j.at("signature"));
  r.query = j.value("query", "");
  r.plan_id = j.at("plan_id").get<std::string>();
  r.plan = j.value("plan", nlohmann::json::object());
  r.elapsed_ms = j.at("elapsed_ms").get<double>();
  r.step_ms = j.value("step_ms", std::vector<double>{});
  r.usage = usage_from_json(j.value("usage", nlohmann::json::object()));
  r.phase = j.at("phase").get<std::string>();
  r.background = j.value("background", false);
  r.error = j.value("error", "");
  r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
  return r;
}

MonitorStore::MonitorStore(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;  // created on first append
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records_.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw LineError(Errc::io, lineno, std::string("monitor store: ") + e.what());
    }
    records_.back().seq = records_.size() - 1;
  }
}

void MonitorStore::append(MonitorRecord r) {
  std::lock_guard lock(mutex_);
  r.seq = records_.size();
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(Errc::io, "cannot write monitor store '" + path_ + "'");
    out << to_json(r).dump() << '\n';
  }
  records_.push_back(std::move(r));
}

std::vector<MonitorRecord> MonitorStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t MonitorStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::optional<Lookup> MonitorStore::lookup(const Signature& sig, const UsageSnapshot& now,
                                           double stale_threshold) const {
  std::lock_guard lock(mutex_);
  const MonitorRecord* nearest = nullptr;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& r : records_) {
    if (!r.error.empty() || !r.signature.same_shape(sig)) continue;
    const double d = constant_distance(sig.constants, r.signature.constants);
    if (!std::isfinite(d)) continue;
    if (!nearest || d < best_distance || (d == best_distance && r.seq > nearest->seq)) {
      nearest = &r;
      best_distance = d;
    }
  }
  if (!nearest) return std::nullopt;
  const MonitorRecord* fastest = nullptr;
  for (const auto& r : records_) {
    if (!r.error.empty() || !r.signature.same_shape(sig) || r.signature.constants != nearest->signature.constants) {
      continue;
    }
    if (!fastest || r.elapsed_ms < fastest->elapsed_ms) fastest = &r;
  }
  Lookup out;
  out.plan_id = fastest->plan_id;
  out.plan = fastest->plan;
  out.elapsed_ms = fastest->elapsed_ms;
  out.constant_distance = best_distance;
  out.divergence = usage_divergence(now, fastest->usage);
  out.stale = out.divergence > stale_threshold;
  return out;
}

}  // namespace polystore::mw
