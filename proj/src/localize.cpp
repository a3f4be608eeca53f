#include "mloc/localize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mloc/rng.hpp"

namespace mloc::localize {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& p) { return 0.5 * (p + p.transpose()); }

// Clamps tiny negative eigenvalues introduced by the (I - BH)P form; anything
// below -1e-10 means the update itself went wrong.
Eigen::Matrix3d enforce_psd(const Eigen::Matrix3d& p, const char* context) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(p);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-10)
    throw NumericalError(std::string(context) + ": covariance lost positive semidefiniteness");
  if (min_eig >= 0.0) return p;
  Eigen::Vector3d vals = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose());
}

}  // namespace

Eigen::Matrix3d process_noise_from_odometry(const MotionModel& motion,
                                            const OdometryNoise& noise, double floor) {
  if (!(motion.dt > 0.0)) throw ValidationError("process_noise_from_odometry: dt must be positive");
  if (noise.sigma_v < 0.0 || noise.sigma_omega < 0.0)
    throw ValidationError("process_noise_from_odometry: negative noise level");
  const double sv = noise.sigma_v * motion.dt;
  const double sw = noise.sigma_omega * motion.dt;
  Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
  q(0, 0) = std::max(sv * sv, floor);
  q(1, 1) = std::max(sv * sv, floor);
  q(2, 2) = std::max(sw * sw, floor);
  return q;
}

const char* filter_variant_name(FilterVariant v) {
  switch (v) {
    case FilterVariant::embedding: return "embedding";
    case FilterVariant::feature: return "feature";
    case FilterVariant::pose: return "pose";
  }
  throw ValidationError("filter_variant_name: unknown variant");
}

FilterVariant filter_variant_from_name(const std::string& name) {
  if (name == "embedding") return FilterVariant::embedding;
  if (name == "feature") return FilterVariant::feature;
  if (name == "pose") return FilterVariant::pose;
  throw ValidationError("unknown filter variant '" + name + "'");
}

const appearance::FeatureExtractor& LocalizationMaps::extractor() const {
  if (!extractor_cache_)
    extractor_cache_ = std::make_shared<appearance::FeatureExtractor>(extractor_spec, sensor.p);
  return *extractor_cache_;
}

Vec LocalizationMaps::extract(const Vec& image) const { return extractor().extract(image); }

Vec LocalizationMaps::embed_image(const Vec& image) const {
  return feature_reg.predict(extract(image));
}

Vec LocalizationMaps::predict_features(const Pose& pose) const {
  const Vec y = pose_reg.predict(pose.wrapped().to_vector());
  return model.recover(y).features;
}

Pose LocalizationMaps::estimate_pose(const Vec& image) const {
  return model.recover(embed_image(image)).pose;
}

Vec LocalizationMaps::embed_pose(const Pose& pose) const {
  return feature_reg.predict(predict_features(pose));
}

Pose LocalizationMaps::pose_from_model(const Pose& pose) const {
  return model.recover(embed_pose(pose)).pose;
}

Pose LocalizationEstimator::estimate(const Vec& image) const {
  return model->recover(feature_reg->predict(extractor->extract(image))).pose;
}

Vec FeatureModelEstimator::predict(const Pose& pose) const {
  return model->recover(pose_reg->predict(pose.wrapped().to_vector())).features;
}

Mat covariance_of_rows(const Mat& rows, double floor) {
  if (rows.rows() < 2) throw InsufficientSampleError("covariance_of_rows: need at least 2 rows");
  if (!rows.allFinite()) throw ValidationError("covariance_of_rows: non-finite residual");
  const Mat centered = rows.rowwise() - rows.colwise().mean();
  Mat cov = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  const Vec vals = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

CovarianceEstimate estimate_covariances(const appearance::LabeledDataset& sample,
                                        const std::vector<int>& indices,
                                        const LocalizationMaps& maps,
                                        const MotionModel& motion,
                                        const OdometryNoise& noise) {
  std::vector<Vec> emb_rows, feat_rows, pose_rows;
  emb_rows.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= sample.n())
      throw ValidationError("estimate_covariances: index out of range");
    const Pose& pose = sample.poses[static_cast<size_t>(i)];
    const Vec image = sample.images.row(i).transpose();
    try {
      const Vec w_obs = maps.extract(image);
      const Vec w_hat = maps.predict_features(pose);
      const Vec y_obs = maps.feature_reg.predict(w_obs);
      const Vec y_hat = maps.feature_reg.predict(w_hat);
      const Pose pose_obs = maps.model.recover(y_obs).pose;
      const Pose pose_hat = maps.model.recover(y_hat).pose;
      emb_rows.push_back(y_obs - y_hat);
      feat_rows.push_back(w_obs - w_hat);
      pose_rows.push_back(pose_delta(pose_obs, pose_hat));
    } catch (const OutOfSupportError&) {
      continue;  // held-out pose outside the fitted support contributes nothing
    }
  }
  if (emb_rows.size() < 4)
    throw InsufficientSampleError(
        "estimate_covariances: need at least 4 in-support points, got " +
        std::to_string(emb_rows.size()));
  auto stack = [](const std::vector<Vec>& rows) {
    Mat out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r];
    return out;
  };
  CovarianceEstimate est;
  est.measurement = covariance_of_rows(stack(emb_rows));
  est.measurement_feature = covariance_of_rows(stack(feat_rows));
  est.measurement_pose = covariance_of_rows(stack(pose_rows));
  est.process = process_noise_from_odometry(motion, noise);
  return est;
}

LocalizationMaps build_localization_maps(const appearance::LabeledDataset& dataset,
                                         const std::vector<int>& train_indices,
                                         const std::vector<int>& test_indices,
                                         const TrainOptions& options) {
  dataset.validate();
  if (train_indices.empty())
    throw ValidationError("build_localization_maps: empty training split");
  auto sample = tbml::RegressionManifoldSample::from_dataset(dataset, options.feature_scale,
                                                             train_indices);
  tbml::TbmlOptions chart_opts;
  chart_opts.bandwidth_factor = options.bandwidth_factor;
  chart_opts.cutoff_factor = options.cutoff_factor;
  LocalizationMaps maps;
  maps.model = tbml::fit_tangent_bundle(sample, options.k, chart_opts);

  jacreg::JacregOptions reg_opts;
  reg_opts.bandwidth_factor = options.bandwidth_factor;
  reg_opts.grassmann_bandwidth = options.grassmann_bandwidth;
  reg_opts.heading_weight = options.heading_weight;
  maps.feature_reg = jacreg::build_feature_regressor(maps.model, reg_opts);
  maps.pose_reg = jacreg::build_pose_regressor(maps.model, reg_opts);

  maps.extractor_spec = dataset.meta.extractor;
  maps.world = dataset.meta.world;
  maps.sensor = dataset.meta.sensor;
  maps.space = dataset.meta.space;
  maps.train_indices = train_indices;
  maps.test_indices = test_indices;

  MotionModel motion;
  motion.dt = options.dt;
  const auto& holdout = test_indices.size() >= 4 ? test_indices : train_indices;
  const auto cov = estimate_covariances(dataset, holdout, maps, motion, options.odometry);
  maps.noise_embedding = cov.measurement;
  maps.noise_feature = cov.measurement_feature;
  maps.noise_pose = cov.measurement_pose;
  maps.process_noise = cov.process;

  maps.diagnostics = {
      {"n_train", static_cast<int>(train_indices.size())},
      {"n_test", static_cast<int>(test_indices.size())},
      {"k", options.k},
      {"q", maps.model.q},
      {"feature_scale", maps.model.feature_scale},
      {"cutoff_z", maps.model.cutoff_z},
      {"cutoff_y", maps.model.cutoff_y},
      {"covariance_source", test_indices.size() >= 4 ? "held_out" : "train"},
      {"embedding_noise_trace", maps.noise_embedding.trace()},
  };
  return maps;
}

FilterState ekf_step(const FilterState& state, const MotionModel& motion,
                     const Control& control, const Vec& observed,
                     const MeasurementModel& measurement, double fd_step) {
  if (!(fd_step > 0.0)) throw ValidationError("ekf_step: fd_step must be positive");
  if (!measurement.predict) throw ValidationError("ekf_step: missing measurement function");

  const Pose prior_pose = motion_step(motion, state.pose, control);
  const Eigen::Matrix3d f = motion_jacobian(motion, state.pose, control);
  const Eigen::Matrix3d prior_cov =
      symmetrize(f * state.cov * f.transpose() + motion.process_noise);

  const Vec predicted = measurement.predict(prior_pose);
  const auto dim = predicted.size();
  if (observed.size() != dim)
    throw ValidationError("ekf_step: observation dimension mismatch");
  if (measurement.noise.rows() != dim || measurement.noise.cols() != dim)
    throw ValidationError("ekf_step: measurement noise dimension mismatch");

  auto wrap_dims = [&](Vec d) {
    for (int a : measurement.angular_dims) {
      if (a < 0 || a >= dim) throw ValidationError("ekf_step: angular dimension out of range");
      d[a] = wrap_angle(d[a]);
    }
    return d;
  };

  Mat h(dim, 3);
  Eigen::Vector3d base = prior_pose.to_vector();
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d hi = base, lo = base;
    hi[j] += fd_step;
    lo[j] -= fd_step;
    const Vec ph = measurement.predict(Pose::from_vector(hi));
    const Vec pl = measurement.predict(Pose::from_vector(lo));
    h.col(j) = wrap_dims(ph - pl) / (2.0 * fd_step);
  }

  const Vec innovation = wrap_dims(observed - predicted);

  // Repair the measurement noise spectrally: an eigenvalue floor applied
  // before float32 storage can leave it very slightly indefinite on reload.
  // Anything worse than storage roundoff is a genuinely indefinite input.
  Mat noise = 0.5 * (measurement.noise + measurement.noise.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Mat> reig(noise);
    if (reig.info() != Eigen::Success)
      throw NumericalError("ekf_step: measurement noise eigendecomposition failed");
    const double rmax = reig.eigenvalues()[dim - 1];
    if (reig.eigenvalues()[0] < -(1e-6 * std::abs(rmax) + 1e-12))
      throw ConditioningError("ekf_step: measurement noise is not positive semidefinite");
    if (reig.eigenvalues()[0] < 0.0)
      noise = reig.eigenvectors() * reig.eigenvalues().cwiseMax(0.0).asDiagonal() *
              reig.eigenvectors().transpose();
  }

  Mat s = h * prior_cov * h.transpose() + noise;
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  if (eig.info() != Eigen::Success)
    throw NumericalError("ekf_step: innovation covariance eigendecomposition failed");
  const Vec& evals = eig.eigenvalues();
  const double max_eig = evals[evals.size() - 1];
  if (!(max_eig > 0.0) || evals[0] < -1e-9 * max_eig)
    throw ConditioningError("ekf_step: innovation covariance is not positive definite");
  // Invert S through its spectrum, truncating directions whose eigenvalue sits
  // below float32 representational noise of the stored covariances: those carry
  // no trustworthy innovation information, and inverting them would only
  // amplify model error.
  Vec inv_evals(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    inv_evals[i] = evals[i] > 1e-6 * max_eig ? 1.0 / evals[i] : 0.0;
  // gain B = P- H^T S^+, computed through the factorization
  const Mat gain = prior_cov * h.transpose() * eig.eigenvectors() *
                   inv_evals.asDiagonal() * eig.eigenvectors().transpose();

  FilterState out;
  const Eigen::Vector3d correction = gain * innovation;
  out.pose = Pose::from_vector(base + correction);
  // Joseph form: positive semidefinite by construction for any gain, which
  // matters when the gain came from a truncated pseudo-inverse.
  const Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - gain * h;
  const Eigen::Matrix3d joseph =
      ikh * prior_cov * ikh.transpose() + gain * noise * gain.transpose();
  out.cov = enforce_psd(symmetrize(joseph), "ekf_step");
  out.t = state.t + 1;
  out.last_update_skipped = false;
  out.last_innovation_norm = innovation.norm();
  return out;
}

FilterState kalman_update(const FilterState& state, const MotionModel& motion,
                          const Control& control, const Vec& image_observed,
                          const LocalizationMaps& maps, FilterVariant variant) {
  MeasurementModel measurement;
  Vec observed;
  try {
    switch (variant) {
      case FilterVariant::embedding:
        observed = maps.embed_image(image_observed);
        measurement.predict = [&maps](const Pose& p) { return maps.embed_pose(p); };
        measurement.noise = maps.noise_embedding;
        break;
      case FilterVariant::feature:
        observed = maps.extract(image_observed);
        measurement.predict = [&maps](const Pose& p) { return maps.predict_features(p); };
        measurement.noise = maps.noise_feature;
        break;
      case FilterVariant::pose:
        observed = maps.estimate_pose(image_observed).to_vector();
        measurement.predict = [&maps](const Pose& p) {
          return Vec(maps.pose_from_model(p).to_vector());
        };
        measurement.noise = maps.noise_pose;
        measurement.angular_dims = {2};
        break;
    }
    const double fd_step = 1e-4 * maps.space.diagonal();
    return ekf_step(state, motion, control, observed, measurement, fd_step);
  } catch (const OutOfSupportError&) {
    // No usable correction; keep the motion prior and flag the gap.
    FilterState out;
    out.pose = motion_step(motion, state.pose, control);
    const Eigen::Matrix3d f = motion_jacobian(motion, state.pose, control);
    out.cov = symmetrize(f * state.cov * f.transpose() + motion.process_noise);
    out.t = state.t + 1;
    out.last_update_skipped = true;
    out.last_innovation_norm = 0.0;
    return out;
  }
}

std::vector<Control> make_weave_controls(int steps, double v, double amplitude,
                                         double period_steps) {
  if (steps < 1) throw ValidationError("make_weave_controls: steps must be positive");
  if (!(period_steps > 0.0))
    throw ValidationError("make_weave_controls: period must be positive");
  std::vector<Control> controls;
  controls.reserve(static_cast<size_t>(steps));
  for (int t = 0; t < steps; ++t)
    controls.push_back({v, amplitude * std::sin(kTwoPi * t / period_steps)});
  return controls;
}

TrackReport track_trajectory(const TrackScenario& scenario, const LocalizationMaps& maps,
                             const MotionModel& motion) {
  if (scenario.steps < 1) throw ValidationError("track_trajectory: steps must be positive");
  if (static_cast<int>(scenario.controls.size()) < scenario.steps)
    throw ValidationError("track_trajectory: fewer controls than steps");
  if (scenario.pixel_noise < 0.0)
    throw ValidationError("track_trajectory: negative pixel noise");
  if (!maps.space.contains(scenario.start))
    throw OutOfDomainError("track_trajectory: start pose outside the workspace");

  Rng actuation_rng(derive_seed(scenario.seed, 1));
  Rng pixel_rng(derive_seed(scenario.seed, 2));

  TrackReport report;
  report.steps.reserve(static_cast<size_t>(scenario.steps));
  Pose truth = scenario.start;
  Pose reckoned = scenario.start;
  FilterState filter;
  filter.pose = scenario.start;
  filter.cov = scenario.initial_cov;

  for (int t = 0; t < scenario.steps; ++t) {
    const Control nominal = scenario.controls[static_cast<size_t>(t)];
    Control actual = nominal;
    actual.v += scenario.odometry_noise.sigma_v * actuation_rng.normal();
    actual.omega += scenario.odometry_noise.sigma_omega * actuation_rng.normal();

    const Pose next_truth = motion_step(motion, truth, actual);
    if (!maps.space.contains(next_truth)) {
      report.truncated = true;
      report.truncation_reason = "truth left the workspace at step " + std::to_string(t);
      break;
    }
    truth = next_truth;

    Vec image = appearance::render_image(maps.world, maps.sensor, maps.space, truth);
    if (scenario.pixel_noise > 0.0) {
      for (Eigen::Index i = 0; i < image.size(); ++i)
        image[i] = std::clamp(image[i] + scenario.pixel_noise * pixel_rng.normal(), 0.0, 1.0);
    }

    reckoned = motion_step(motion, reckoned, nominal);
    filter = kalman_update(filter, motion, nominal, image, maps, scenario.variant);

    report.steps.push_back({t, truth, reckoned, filter.pose, filter.last_innovation_norm,
                            filter.last_update_skipped});
  }

  report.completed_steps = static_cast<int>(report.steps.size());
  if (report.completed_steps > 0) {
    double f_pos = 0.0, d_pos = 0.0, f_head = 0.0, d_head = 0.0;
    for (const auto& rec : report.steps) {
      const Eigen::Vector3d ef = pose_delta(rec.filtered, rec.truth);
      const Eigen::Vector3d ed = pose_delta(rec.dead_reckoning, rec.truth);
      f_pos += ef.head<2>().squaredNorm();
      d_pos += ed.head<2>().squaredNorm();
      f_head += ef[2] * ef[2];
      d_head += ed[2] * ed[2];
    }
    const double inv = 1.0 / report.completed_steps;
    report.filtered_rmse_pos = std::sqrt(f_pos * inv);
    report.dead_reckoning_rmse_pos = std::sqrt(d_pos * inv);
    report.filtered_rmse_heading = std::sqrt(f_head * inv);
    report.dead_reckoning_rmse_heading = std::sqrt(d_head * inv);
  }
  return report;
}

std::string TrackReport::to_csv() const {
  std::ostringstream out;
  out << "t,truth_x,truth_y,truth_heading,dr_x,dr_y,dr_heading,"
         "filtered_x,filtered_y,filtered_heading,innovation_norm,update_skipped\n";
  for (const auto& rec : steps) {
    out << rec.t << ',' << format_double(rec.truth.x) << ',' << format_double(rec.truth.y)
        << ',' << format_double(rec.truth.heading) << ',' << format_double(rec.dead_reckoning.x)
        << ',' << format_double(rec.dead_reckoning.y) << ','
        << format_double(rec.dead_reckoning.heading) << ',' << format_double(rec.filtered.x)
        << ',' << format_double(rec.filtered.y) << ',' << format_double(rec.filtered.heading)
        << ',' << format_double(rec.innovation_norm) << ',' << (rec.update_skipped ? 1 : 0)
        << '\n';
  }
  return out.str();
}

nlohmann::json TrackReport::summary_json() const {
  int skipped = 0;
  for (const auto& rec : steps) skipped += rec.update_skipped ? 1 : 0;
  return {
      {"completed_steps", completed_steps},
      {"truncated", truncated},
      {"truncation_reason", truncation_reason},
      {"filtered_rmse_pos", filtered_rmse_pos},
      {"dead_reckoning_rmse_pos", dead_reckoning_rmse_pos},
      {"filtered_rmse_heading", filtered_rmse_heading},
      {"dead_reckoning_rmse_heading", dead_reckoning_rmse_heading},
      {"skipped_updates", skipped},
  };
}

}  // namespace mloc::localize
