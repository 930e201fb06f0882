#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace polystore::analytics {

enum class Label { stable, deteriorating };
enum class Mode { array_only, relational_only, hybrid };

std::string_view label_name(Label l);
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);

struct PatientSeries {
  std::size_t id = 0;
  std::vector<double> signal;
  Label label = Label::stable;
};

struct WorkloadConfig {
  std::size_t n_patients = 64;
  std::size_t length = 1024;
  std::size_t bins = 16;
  std::size_t k = 5;
  std::uint64_t seed = 1;
  double anomaly_rate = 0.5;

  /// Throws Errc::invalid_argument unless bins >= 2, k odd, 1 <= k <= n,
  /// and length a power of two >= 8.
  void validate() const;
};

/// Training patients 0..n-1 plus one test patient with id n, whose label is
/// the ground truth the classifier does not see.
struct Cohort {
  std::vector<PatientSeries> training;
  PatientSeries test;
};

/// Stable signals mix three band-limited sinusoids with white noise;
/// deteriorating ones add a noise-variance ramp over the second half.
/// Bit-identical for equal configs.
Cohort gen_cohort(const WorkloadConfig& config);

/// Per-group [lo, hi] of Haar coefficients over training rows, groups x 2.
/// A group whose values are all equal is widened to [lo, lo + 1].
std::vector<double> bin_edges(std::span<const double> coeffs, std::size_t rows, std::size_t length);

/// Concatenated per-scale histograms of one signal, DC first.
std::vector<double> haar_patient_vector(std::span<const double> signal, std::size_t bins,
                                        std::span<const double> edges);

/// weight = count * (ln((1 + N) / (1 + df)) + 1) with df over all rows.
std::vector<std::vector<double>> tfidf_weight(const std::vector<std::vector<double>>& counts);

struct Neighbor {
  std::size_t id = 0;
  double distance = 0;
  Label label = Label::stable;
};

struct Classification {
  Label label = Label::stable;
  std::vector<Neighbor> neighbors;
};

/// Majority vote of the k nearest by (distance, id). A tied vote goes to
/// the label of the nearest tied neighbor.
Classification vote(const std::vector<double>& distances, const std::vector<Label>& labels, std::size_t k);

/// Cosine k-NN; all-zero vectors sit at distance 1. Throws when k exceeds
/// the training size or vector lengths differ.
Classification knn_classify(const std::vector<std::vector<double>>& train, const std::vector<Label>& labels,
                            const std::vector<double>& test, std::size_t k);

inline constexpr std::string_view kStages[] = {"haar", "bin", "cast", "tfidf", "knn"};

struct WorkloadResult {
  Mode mode = Mode::array_only;
  Classification classification;
  Label truth = Label::stable;
  std::vector<double> distances;       // test to each training patient
  std::map<std::string, double> stage_ms;
  double total_ms = 0;
};

/// Loads the cohort (untimed), then runs haar, bin, cast, tfidf and knn in
/// the given mode.
WorkloadResult run_workload(const WorkloadConfig& config, Mode mode);
WorkloadResult run_workload(const WorkloadConfig& config, const Cohort& cohort, Mode mode);

/// Rows `stage,mode,ms` with a header.
std::string stages_csv(const std::vector<WorkloadResult>& results);
/// Summary with timing fields under "timing" so the rest is deterministic.
nlohmann::json summary_json(const WorkloadConfig& config, const std::vector<WorkloadResult>& results);

}  // namespace polystore::analytics
