#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mloc/appearance.hpp"
#include "mloc/localize.hpp"
#include "mloc/tbml.hpp"

namespace mloc::evalx {

struct SplitIndices {
  std::vector<int> train;  // ascending original indices
  std::vector<int> test;
};

// Seeded sampling without replacement; floor(train_fraction * n) training
// entries, the rest held out. Disjoint and exhaustive.
SplitIndices split_dataset(int n, double train_fraction, std::uint64_t seed);

// Nadaraya-Watson baseline over (input vector, pose) pairs.
struct KnrModel {
  Mat anchors;  // d x n, one column per training entry
  std::vector<Pose> poses;

  int size() const { return static_cast<int>(anchors.cols()); }
  static KnrModel from_dataset(const appearance::LabeledDataset& ds,
                               const std::vector<int>& indices, bool on_pixels = false);
};

// Gaussian-weighted mean of the anchor poses; heading averaged through its
// (cos, sin) embedding. Throws OutOfSupportError when every weight underflows.
Pose knr_predict(const KnrModel& train, const Vec& w, double bandwidth);

// Candidate with the smallest mean squared leave-one-out prediction error
// (position plus wrapped heading); ties resolve to the smaller bandwidth.
double loo_cv_bandwidth(const KnrModel& train, const std::vector<double>& candidates);

// count log-spaced values spanning [lo, hi] x median pairwise anchor distance.
std::vector<double> default_bandwidth_grid(const Mat& anchors, int count = 15,
                                           double lo = 0.1, double hi = 10.0);

// Root-mean-square position error normalized by the RMS deviation of the true
// positions from their mean; predicting that mean everywhere scores exactly 1.
double rrmse(const std::vector<Pose>& predicted, const std::vector<Pose>& truth);

struct ReconstructionStats {
  std::vector<double> relative_errors;  // per evaluated point
  int skipped = 0;                      // points outside the chart's support
  double median = 0.0;
};

// Chart round-trip error on stacked coordinates: ||g(h(z)) - z|| / ||z||
// with the heading difference wrapped.
ReconstructionStats reconstruction_errors(const tbml::TangentBundleModel& model,
                                          const appearance::LabeledDataset& ds,
                                          const std::vector<int>& indices);

struct TangentStats {
  std::vector<double> max_angle_deg;  // worst principal angle per point
  int skipped = 0;
  double median_deg = 0.0;
};

// Principal angles between the recovered-map derivative's span vs the oracle
// tangent (central differences of the rendered stacked map). Poses closer
// than fd_step to the workspace boundary are skipped.
TangentStats tangent_angles(const tbml::TangentBundleModel& model,
                            const appearance::LabeledDataset& ds,
                            const std::vector<int>& indices, double fd_step = 1e-4);

struct BenchmarkConfig {
  std::uint64_t seed = 0;
  int n_landmarks = 12;
  appearance::SensorSpec sensor{};
  appearance::FeatureExtractorSpec extractor{};
  appearance::GridScheme grid{10, 10, 5, 2.0, 0.0};
  PoseSpace space{};
  double train_fraction = 0.7;
  localize::TrainOptions train{};
  bool knr_on_pixels = false;  // baseline input: features (default) or raw rays
  int knr_grid_size = 15;
  double knr_grid_lo = 0.1;
  double knr_grid_hi = 10.0;
};

struct MethodResult {
  std::string method;
  double rrmse_position = 0.0;
  double mean_position_error = 0.0;
  double median_heading_error = 0.0;  // radians
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  nlohmann::json dataset_descriptor;
  MethodResult pipeline;
  MethodResult knr;
  double knr_bandwidth = 0.0;
  int n_train = 0;
  int n_test = 0;
  int n_evaluated = 0;  // test entries where both methods produced a pose
  int n_skipped = 0;
  ReconstructionStats reconstruction;
  TangentStats tangents;

  nlohmann::json to_json() const;
  std::string to_csv() const;  // one row per method
};

// Evaluates an already-fitted pipeline against the split recorded in `maps`.
BenchmarkReport evaluate_split(const appearance::LabeledDataset& ds,
                               const localize::LocalizationMaps& maps,
                               const BenchmarkConfig& config);

// Full harness: world + dataset from the config seed, 70/30 split, pipeline
// and baseline fits, comparison report. Deterministic per config.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

}  // namespace mloc::evalx
