#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mloc/appearance.hpp"
#include "mloc/jacreg.hpp"
#include "mloc/motion.hpp"
#include "mloc/tbml.hpp"

namespace mloc::localize {

struct OdometryNoise {
  double sigma_v = 0.0;      // m/s
  double sigma_omega = 0.0;  // rad/s
};

// Diagonal process covariance from per-step actuation noise, floored so the
// filter stays positive definite with zero configured noise.
Eigen::Matrix3d process_noise_from_odometry(const MotionModel& motion,
                                            const OdometryNoise& noise,
                                            double floor = 1e-12);

enum class FilterVariant { embedding, feature, pose };
const char* filter_variant_name(FilterVariant v);
FilterVariant filter_variant_from_name(const std::string& name);

// Everything the online estimators need: fitted chart, both regressors, the
// extractor, the oracle scene used to simulate observations, covariances and
// the train/held-out split they were estimated from.
struct LocalizationMaps {
  tbml::TangentBundleModel model;
  jacreg::JacobianRegressor feature_reg;  // r*: features -> embedding
  jacreg::JacobianRegressor pose_reg;     // R*: pose -> embedding
  appearance::FeatureExtractorSpec extractor_spec;
  appearance::World world;
  appearance::SensorSpec sensor;
  PoseSpace space;
  Mat noise_embedding;  // q x q innovation covariance, embedding variant
  Mat noise_feature;    // m x m, feature variant
  Mat noise_pose;       // 3 x 3, pose variant
  Eigen::Matrix3d process_noise = Eigen::Matrix3d::Identity() * 1e-12;
  std::vector<int> train_indices, test_indices;
  nlohmann::json diagnostics;

  const appearance::FeatureExtractor& extractor() const;

  Vec extract(const Vec& image) const;          // omega
  Vec embed_image(const Vec& image) const;      // r*(omega(X))
  Vec predict_features(const Pose& pose) const; // Phi* = g_W(R*(theta))
  Pose estimate_pose(const Vec& image) const;   // psi* = g_Theta(r*(omega(X)))
  Vec embed_pose(const Pose& pose) const;       // r*(Phi*(theta))
  Pose pose_from_model(const Pose& pose) const; // g_Theta(r*(Phi*(theta)))

 private:
  mutable std::shared_ptr<appearance::FeatureExtractor> extractor_cache_;
};

// psi*: image -> pose through the fitted maps.
struct LocalizationEstimator {
  const appearance::FeatureExtractor* extractor = nullptr;
  const jacreg::JacobianRegressor* feature_reg = nullptr;
  const tbml::TangentBundleModel* model = nullptr;
  Pose estimate(const Vec& image) const;
};

// Phi*: pose -> expected feature vector.
struct FeatureModelEstimator {
  const jacreg::JacobianRegressor* pose_reg = nullptr;
  const tbml::TangentBundleModel* model = nullptr;
  Vec predict(const Pose& pose) const;
};

struct TrainOptions {
  int k = 12;
  double feature_scale = 0.0;  // <= 0 selects 1/sqrt(m)
  double bandwidth_factor = 0.4;
  double cutoff_factor = 3.0;
  double grassmann_bandwidth = kPi / 4.0;
  double heading_weight = 1.0;
  double dt = 0.1;
  OdometryNoise odometry{0.1, 0.05};
};

// Fits the chart and both regressors on the train split and estimates
// covariances on the held-out split (train entries when none is held out).
LocalizationMaps build_localization_maps(const appearance::LabeledDataset& dataset,
                                         const std::vector<int>& train_indices,
                                         const std::vector<int>& test_indices,
                                         const TrainOptions& options);

struct CovarianceEstimate {
  Mat measurement;  // embedding-variant innovation covariance
  Eigen::Matrix3d process;
  Mat measurement_feature;
  Mat measurement_pose;
};

// Sample covariances of map residuals over the given entries (needs >= 4),
// eigenvalue-floored at 1e-12; process covariance from the configured
// odometry noise.
CovarianceEstimate estimate_covariances(const appearance::LabeledDataset& sample,
                                        const std::vector<int>& indices,
                                        const LocalizationMaps& maps,
                                        const MotionModel& motion,
                                        const OdometryNoise& noise);

// Mean-centered sample covariance with an eigenvalue floor; always SPD.
Mat covariance_of_rows(const Mat& rows, double floor = 1e-12);

struct FilterState {
  Pose pose;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  int t = 0;
  bool last_update_skipped = false;
  double last_innovation_norm = 0.0;
};

struct MeasurementModel {
  std::function<Vec(const Pose&)> predict;  // pose -> expected measurement
  Mat noise;
  std::vector<int> angular_dims;  // innovation components to wrap
};

// One extended-filter cycle: exact-arc propagation, central-difference
// measurement Jacobian, standard gain, symmetrized covariance update.
// Asserts the posterior covariance stays PSD to -1e-10.
FilterState ekf_step(const FilterState& state, const MotionModel& motion,
                     const Control& control, const Vec& observed,
                     const MeasurementModel& measurement, double fd_step);

// Full update through the fitted maps; out-of-support measurements skip the
// correction and propagate with the flag set.
FilterState kalman_update(const FilterState& state, const MotionModel& motion,
                          const Control& control, const Vec& image_observed,
                          const LocalizationMaps& maps,
                          FilterVariant variant = FilterVariant::embedding);

struct TrackScenario {
  Pose start;
  int steps = 200;
  std::vector<Control> controls;  // at least `steps` entries
  OdometryNoise odometry_noise;
  double pixel_noise = 0.0;
  std::uint64_t seed = 0;
  FilterVariant variant = FilterVariant::embedding;
  Eigen::Matrix3d initial_cov = Eigen::Matrix3d::Zero();
};

struct StepRecord {
  int t;
  Pose truth;
  Pose dead_reckoning;
  Pose filtered;
  double innovation_norm;
  bool update_skipped;
};

struct TrackReport {
  std::vector<StepRecord> steps;
  double filtered_rmse_pos = 0.0;
  double dead_reckoning_rmse_pos = 0.0;
  double filtered_rmse_heading = 0.0;
  double dead_reckoning_rmse_heading = 0.0;
  bool truncated = false;
  std::string truncation_reason;
  int completed_steps = 0;

  std::string to_csv() const;
  nlohmann::json summary_json() const;
};

// Simulates truth with noisy actuation, renders observations through the
// oracle, and runs dead reckoning plus the filter on nominal controls.
// Truth leaving the workspace truncates the report with a reason.
TrackReport track_trajectory(const TrackScenario& scenario,
                             const LocalizationMaps& maps, const MotionModel& motion);

// Gentle weave: constant speed, sinusoidal turn rate.
std::vector<Control> make_weave_controls(int steps, double v, double amplitude,
                                         double period_steps);

}  // namespace mloc::localize
