#include "polystore/analytics/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "polystore/array/array_engine.hpp"
#include "polystore/common/error.hpp"
#include "polystore/common/stopwatch.hpp"
#include "polystore/common/value.hpp"
#include "polystore/island/polystore.hpp"
#include "polystore/kernels/kernels.hpp"

namespace polystore::analytics {

namespace {

constexpr double kBaseNoise = 0.1;
constexpr double kPeakNoise = 1.5;

PatientSeries gen_patient(std::size_t id, std::size_t length, double anomaly_rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::uniform_real_distribution<double> freq(2.0, 24.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  PatientSeries p;
  p.id = id;
  p.label = coin(rng) < anomaly_rate ? Label::deteriorating : Label::stable;
  double a[3], f[3], ph[3];
  for (int j = 0; j < 3; ++j) {
    a[j] = amp(rng);
    f[j] = freq(rng);
    ph[j] = phase(rng);
  }
  p.signal.resize(length);
  const double half = static_cast<double>(length) / 2.0;
  for (std::size_t t = 0; t < length; ++t) {
    const double x = static_cast<double>(t) / static_cast<double>(length);
    double v = 0.0;
    for (int j = 0; j < 3; ++j) v += a[j] * std::sin(2.0 * std::numbers::pi * f[j] * x + ph[j]);
    double sigma = kBaseNoise;
    if (p.label == Label::deteriorating && static_cast<double>(t) >= half) {
      sigma += (kPeakNoise - kBaseNoise) * (static_cast<double>(t) - half) / half;
    }
    p.signal[t] = v + sigma * noise(rng);
  }
  return p;
}

std::string num(double d) { return format_double(d); }

void sql(island::Polystore& ps, const std::string& script) { ps.relational().execute_script(script); }

// Test patient distances from a relation (d1, dist).
std::vector<double> read_distances(const rel::Relation& r, std::size_t n) {
  std::vector<double> out(n, 1.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.at(static_cast<std::size_t>(std::get<std::int64_t>(r.at(i, 0)))) = as_double(r.at(i, 1));
  }
  return out;
}

class Pipeline {
 public:
  Pipeline(const WorkloadConfig& c, const Cohort& cohort, Mode mode) : c_(c), cohort_(cohort), mode_(mode) {
    n_ = c.n_patients;
    groups_ = kernels::haar_group_count(c.length);
    terms_ = groups_ * c.bins;
    std::vector<double> values;
    values.reserve((n_ + 1) * c.length);
    for (const auto& p : cohort.training) values.insert(values.end(), p.signal.begin(), p.signal.end());
    values.insert(values.end(), cohort.test.signal.begin(), cohort.test.signal.end());
    array::DenseArray ecg("ecg", {{"patient", n_ + 1}, {"t", c.length}}, std::move(values));
    ps_.store_array(std::move(ecg), mode == Mode::relational_only ? island::Engine::relational : island::Engine::array);
    if (mode != Mode::array_only) load_lookup_tables();
  }

  WorkloadResult run() {
    WorkloadResult res;
    res.mode = mode_;
    res.truth = cohort_.test.label;
    for (auto s : kStages) res.stage_ms[std::string(s)] = 0.0;
    Stopwatch total;
    if (mode_ == Mode::relational_only) {
      timed(res, "haar", [&] { sql_haar(); });
      timed(res, "bin", [&] { sql_bin(); });
    } else {
      timed(res, "haar", [&] { array_haar(); });
      timed(res, "bin", [&] { array_bin(); });
    }
    if (mode_ == Mode::hybrid) {
      timed(res, "cast", [&] {
        island::CastSpec spec = island::default_array_to_rel(2);
        hist_table_ = ps_.cast_migrate("hist", island::Engine::array, island::Engine::relational, spec);
      });
      timed(res, "tfidf", [&] {
        sql(ps_, "CREATE TABLE hraw AS SELECT d1, d2 AS t, val AS c FROM " + hist_table_ + " WHERE val > 0");
        sql_tfidf();
      });
    } else if (mode_ == Mode::relational_only) {
      timed(res, "tfidf", [&] { sql_tfidf(); });
    } else {
      timed(res, "tfidf", [&] { weights_ = array::ops::tfidf(*ps_.arrays().get("hist"), n_); });
    }
    if (mode_ == Mode::array_only) {
      timed(res, "knn", [&] {
        res.distances = array::ops::cosine_to_row(weights_, n_, n_);
        res.classification = vote(res.distances, labels(), c_.k);
      });
    } else {
      timed(res, "knn", [&] {
        res.distances = sql_knn();
        res.classification = vote(res.distances, labels(), c_.k);
      });
    }
    res.total_ms = total.elapsed_ms();
    return res;
  }

 private:
  template <class F>
  void timed(WorkloadResult& res, const char* stage, F&& f) {
    Stopwatch sw;
    f();
    res.stage_ms[stage] = sw.elapsed_ms();
  }

  std::vector<Label> labels() const {
    std::vector<Label> out;
    for (const auto& p : cohort_.training) out.push_back(p.label);
    return out;
  }

  // Static lookup tables: coefficient index to scale group, every term id,
  // every training patient.
  void load_lookup_tables() {
    rel::Relation groups("groups", {{"d2", ColumnType::int64}, {"g", ColumnType::int64}});
    for (std::size_t g = 0; g < groups_; ++g) {
      const auto r = kernels::haar_group_range(g);
      for (auto i = r.begin; i < r.end; ++i) groups.append({static_cast<std::int64_t>(i), static_cast<std::int64_t>(g)});
    }
    rel::Relation allbins("allbins", {{"t", ColumnType::int64}});
    for (std::size_t t = 0; t < terms_; ++t) allbins.append({static_cast<std::int64_t>(t)});
    rel::Relation pats("pats", {{"d1", ColumnType::int64}});
    for (std::size_t p = 0; p < n_; ++p) pats.append({static_cast<std::int64_t>(p)});
    ps_.relational().store(std::move(groups));
    ps_.relational().store(std::move(allbins));
    ps_.relational().store(std::move(pats));
  }

  void array_haar() {
    auto coeffs = std::get<array::DenseArray>(ps_.arrays().execute("dwt_haar(ecg)"));
    coeffs.rename("coeffs");
    ps_.arrays().store(std::move(coeffs));
  }

  void array_bin() {
    const auto coeffs = ps_.arrays().get("coeffs");
    auto edges = bin_edges(coeffs->values(), n_, c_.length);
    ps_.arrays().store(array::DenseArray("edges", {{"group", groups_}, {"bound", 2}}, std::move(edges)));
    auto hist = std::get<array::DenseArray>(ps_.arrays().execute("bin_hist(coeffs, edges, " + std::to_string(c_.bins) + ")"));
    hist.rename("hist");
    ps_.arrays().store(std::move(hist));
  }

  // Orthonormal Haar by levels: pairs (2i, 2i+1) fold into approximation
  // and detail rows, with the kernel's operation order.
  void sql_haar() {
    const auto c = num(kernels::kInvSqrt2);
    std::string src = "ecg_cells";
    bool first = true;
    int level = 0;
    for (std::size_t len = c_.length; len >= 2; len /= 2, ++level) {
      const auto half = std::to_string(len / 2);
      const auto detail = "SELECT d1, d2 / 2 + " + half + " AS d2, SUM(val * (1 - 2 * (d2 % 2))) * " + c +
                          " AS val FROM " + src + " GROUP BY d1, d2 / 2";
      sql(ps_, (first ? "CREATE TABLE coeffs AS " : "INSERT INTO coeffs ") + detail);
      first = false;
      const auto next = "approx" + std::to_string(level);
      sql(ps_, "CREATE TABLE " + next + " AS SELECT d1, d2 / 2 AS d2, SUM(val) * " + c + " AS val FROM " + src +
                   " GROUP BY d1, d2 / 2");
      if (src != "ecg_cells") sql(ps_, "DROP TABLE " + src);
      src = next;
    }
    sql(ps_, "INSERT INTO coeffs SELECT d1, d2, val FROM " + src + "; DROP TABLE " + src);
  }

  void sql_bin() {
    const auto n = std::to_string(n_);
    const auto b = std::to_string(c_.bins);
    const auto top = std::to_string(c_.bins - 1);
    const auto bin = "cg.g * " + b + " + LEAST(GREATEST(FLOOR((cg.val - w.lo) / w.w), 0), " + top + ")";
    sql(ps_,
        "CREATE TABLE cg AS SELECT c.d1 AS d1, gr.g AS g, c.val AS val FROM coeffs c JOIN groups gr ON c.d2 = gr.d2;"
        "CREATE TABLE edges AS SELECT g, MIN(val) AS lo, MAX(val) AS hi FROM cg WHERE d1 < " + n + " GROUP BY g;"
        "CREATE TABLE widths AS SELECT g, lo, (hi - lo) / " + b + " AS w FROM edges WHERE hi > lo;"
        "INSERT INTO widths SELECT g, lo, (lo + 1 - lo) / " + b + " AS w FROM edges WHERE hi = lo;"
        "CREATE TABLE hraw AS SELECT cg.d1 AS d1, " + bin + " AS t, COUNT(*) AS c FROM cg JOIN widths w ON cg.g = w.g"
        " GROUP BY cg.d1, " + bin);
  }

  void sql_tfidf() {
    const auto n = std::to_string(n_);
    sql(ps_,
        "CREATE TABLE dfu AS SELECT t FROM hraw WHERE d1 < " + n + ";"
        "INSERT INTO dfu SELECT t FROM allbins;"
        "CREATE TABLE df AS SELECT t, COUNT(*) - 1 AS df FROM dfu GROUP BY t;"
        "CREATE TABLE idf AS SELECT t, LN((1.0 + " + n + ") / (1.0 + df)) + 1 AS idf FROM df;"
        "CREATE TABLE w AS SELECT h.d1 AS d1, h.t AS t, h.c * i.idf AS w FROM hraw h JOIN idf i ON h.t = i.t");
  }

  std::vector<double> sql_knn() {
    const auto n = std::to_string(n_);
    sql(ps_,
        "CREATE TABLE q AS SELECT t, w FROM w WHERE d1 = " + n + ";"
        "CREATE TABLE dotu AS SELECT a.d1 AS d1, SUM(a.w * b.w) AS dot FROM w a JOIN q b ON a.t = b.t"
        " WHERE a.d1 < " + n + " GROUP BY a.d1;"
        "INSERT INTO dotu SELECT d1, 0.0 AS dot FROM pats;"
        "CREATE TABLE dots AS SELECT d1, SUM(dot) AS dot FROM dotu GROUP BY d1;"
        "CREATE TABLE norms AS SELECT d1, SUM(w * w) AS n2 FROM w WHERE d1 < " + n + " GROUP BY d1");
    const auto qn_rel = rel::relation_of(ps_.relational().execute("SELECT SUM(w * w) AS n2 FROM q"));
    const double qn = qn_rel.empty() ? 0.0 : as_double(qn_rel.at(0, 0));
    if (qn == 0.0) return std::vector<double>(n_, 1.0);
    const auto out = ps_.relational().execute(
        "SELECT d.d1 AS d1, 1 - d.dot / (SQRT(m.n2) * SQRT(" + num(qn) + ")) AS dist FROM dots d JOIN norms m ON d.d1 = m.d1");
    return read_distances(rel::relation_of(out), n_);
  }

  const WorkloadConfig& c_;
  const Cohort& cohort_;
  Mode mode_;
  std::size_t n_ = 0;
  std::size_t groups_ = 0;
  std::size_t terms_ = 0;
  island::Polystore ps_;
  array::DenseArray weights_;
  std::string hist_table_;
};

}  // namespace

std::string_view label_name(Label l) { return l == Label::stable ? "stable" : "deteriorating"; }

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::array_only: return "array-only";
    case Mode::relational_only: return "relational-only";
    case Mode::hybrid: return "hybrid";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  for (auto m : {Mode::array_only, Mode::relational_only, Mode::hybrid}) {
    if (mode_name(m) == s) return m;
  }
  throw Error(Errc::invalid_argument, "unknown mode '" + std::string(s) + "'");
}

void WorkloadConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(Errc::invalid_argument, m); };
  if (bins < 2) bad("need at least 2 bins");
  if (k % 2 == 0 || k < 1) bad("k must be odd and positive");
  if (k > n_patients) bad("k exceeds the number of training patients");
  if (length < 8 || !kernels::is_power_of_two(length)) bad("signal length must be a power of two >= 8");
  if (anomaly_rate < 0 || anomaly_rate > 1) bad("anomaly rate must lie in [0, 1]");
}

Cohort gen_cohort(const WorkloadConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  Cohort c;
  for (std::size_t i = 0; i < config.n_patients; ++i) c.training.push_back(gen_patient(i, config.length, config.anomaly_rate, rng));
  c.test = gen_patient(config.n_patients, config.length, config.anomaly_rate, rng);
  return c;
}

std::vector<double> bin_edges(std::span<const double> coeffs, std::size_t rows, std::size_t length) {
  std::vector<double> edges(2 * kernels::haar_group_count(length));
  kernels::serial::group_ranges(coeffs, rows, length, edges);
  for (std::size_t g = 0; g + 1 < edges.size(); g += 2) {
    if (edges[g + 1] == edges[g]) edges[g + 1] = edges[g] + 1.0;
  }
  return edges;
}

std::vector<double> haar_patient_vector(std::span<const double> signal, std::size_t bins,
                                        std::span<const double> edges) {
  if (!kernels::is_power_of_two(signal.size())) {
    throw Error(Errc::invalid_argument, "signal length " + std::to_string(signal.size()) + " is not a power of two");
  }
  std::vector<double> coeffs(signal.size());
  kernels::serial::haar_forward(signal, coeffs);
  std::vector<double> counts(kernels::haar_group_count(signal.size()) * bins);
  kernels::serial::bin_rows(coeffs, 1, signal.size(), edges, bins, counts);
  return counts;
}

std::vector<std::vector<double>> tfidf_weight(const std::vector<std::vector<double>>& counts) {
  if (counts.empty()) return {};
  const auto terms = counts[0].size();
  std::vector<double> flat;
  for (const auto& row : counts) {
    if (row.size() != terms) throw Error(Errc::length_mismatch, "tfidf: ragged count matrix");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  std::vector<double> w(flat.size());
  kernels::serial::tfidf(flat, counts.size(), terms, counts.size(), w);
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    out.emplace_back(w.begin() + static_cast<std::ptrdiff_t>(r * terms),
                     w.begin() + static_cast<std::ptrdiff_t>((r + 1) * terms));
  }
  return out;
}

Classification vote(const std::vector<double>& distances, const std::vector<Label>& labels, std::size_t k) {
  if (distances.size() != labels.size()) throw Error(Errc::length_mismatch, "one label per training vector");
  if (k == 0 || k > distances.size()) throw Error(Errc::invalid_argument, "k must lie in [1, training size]");
  std::vector<std::size_t> order(distances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (distances[a] != distances[b]) return distances[a] < distances[b];
                      return a < b;
                    });
  Classification c;
  std::size_t votes[2] = {0, 0};
  for (std::size_t i = 0; i < k; ++i) {
    const auto id = order[i];
    c.neighbors.push_back({id, distances[id], labels[id]});
    ++votes[static_cast<int>(labels[id])];
  }
  if (votes[0] != votes[1]) {
    c.label = votes[0] > votes[1] ? Label::stable : Label::deteriorating;
  } else {
    c.label = c.neighbors.front().label;
  }
  return c;
}

Classification knn_classify(const std::vector<std::vector<double>>& train, const std::vector<Label>& labels,
                            const std::vector<double>& test, std::size_t k) {
  std::vector<double> flat;
  for (const auto& v : train) {
    if (v.size() != test.size()) throw Error(Errc::length_mismatch, "knn: vector lengths differ");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  std::vector<double> d(train.size());
  kernels::serial::cosine_distances(flat, train.size(), test.size(), test, d);
  return vote(d, labels, k);
}

WorkloadResult run_workload(const WorkloadConfig& config, const Cohort& cohort, Mode mode) {
  config.validate();
  return Pipeline(config, cohort, mode).run();
}

WorkloadResult run_workload(const WorkloadConfig& config, Mode mode) {
  return run_workload(config, gen_cohort(config), mode);
}

std::string stages_csv(const std::vector<WorkloadResult>& results) {
  std::ostringstream out;
  out << "stage,mode,ms\n";
  for (const auto& r : results) {
    for (auto s : kStages) out << s << ',' << mode_name(r.mode) << ',' << r.stage_ms.at(std::string(s)) << '\n';
    out << "total," << mode_name(r.mode) << ',' << r.total_ms << '\n';
  }
  return out.str();
}

nlohmann::json summary_json(const WorkloadConfig& config, const std::vector<WorkloadResult>& results) {
  nlohmann::json j;
  j["config"] = {{"n_patients", config.n_patients}, {"length", config.length}, {"bins", config.bins},
                 {"k", config.k}, {"seed", config.seed}, {"anomaly_rate", config.anomaly_rate}};
  auto modes = nlohmann::json::array();
  for (const auto& r : results) {
    auto neighbors = nlohmann::json::array();
    for (const auto& nb : r.classification.neighbors) {
      neighbors.push_back({{"id", nb.id}, {"distance", nb.distance}, {"label", label_name(nb.label)}});
    }
    nlohmann::json timing = nlohmann::json(r.stage_ms);
    timing["total"] = r.total_ms;
    modes.push_back({{"mode", mode_name(r.mode)},
                     {"label", label_name(r.classification.label)},
                     {"truth", label_name(r.truth)},
                     {"neighbors", neighbors},
                     {"timing", timing}});
  }
  j["modes"] = modes;
  bool same = true;
  for (const auto& r : results) same = same && r.classification.label == results.front().classification.label;
  j["labels_agree"] = same;
  return j;
}

}  // namespace polystore::analytics
