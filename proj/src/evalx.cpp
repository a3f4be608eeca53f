#include "mloc/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mloc/linalg.hpp"
#include "mloc/rng.hpp"

namespace mloc::evalx {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double median_pairwise_distance(const Mat& anchors) {
  const int n = static_cast<int>(anchors.cols());
  if (n < 2) throw InsufficientSampleError("median pairwise distance: need >= 2 anchors");
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dists.push_back((anchors.col(i) - anchors.col(j)).norm());
  return median_of(std::move(dists));
}

}  // namespace

SplitIndices split_dataset(int n, double train_fraction, std::uint64_t seed) {
  if (n < 5) throw ValidationError("split_dataset: need at least 5 entries");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("split_dataset: train_fraction must be in (0, 1)");
  const int n_train = static_cast<int>(std::floor(train_fraction * n));
  if (n_train < 1 || n_train >= n)
    throw ValidationError("split_dataset: train_fraction leaves an empty side");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(order[static_cast<size_t>(i)],
                                            order[static_cast<size_t>(rng.uniform_int(0, i))]);
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.test.assign(order.begin() + n_train, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

KnrModel KnrModel::from_dataset(const appearance::LabeledDataset& ds,
                                const std::vector<int>& indices, bool on_pixels) {
  ds.validate();
  if (indices.empty()) throw ValidationError("KnrModel: empty index set");
  const Mat& source = on_pixels ? ds.images : ds.features;
  KnrModel model;
  model.anchors.resize(source.cols(), static_cast<Eigen::Index>(indices.size()));
  model.poses.reserve(indices.size());
  for (size_t c = 0; c < indices.size(); ++c) {
    const int i = indices[c];
    if (i < 0 || i >= ds.n()) throw ValidationError("KnrModel: index out of range");
    model.anchors.col(static_cast<Eigen::Index>(c)) = source.row(i).transpose();
    model.poses.push_back(ds.poses[static_cast<size_t>(i)]);
  }
  return model;
}

Pose knr_predict(const KnrModel& train, const Vec& w, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ValidationError("knr_predict: bandwidth must be positive");
  if (train.size() < 1) throw ValidationError("knr_predict: empty model");
  if (w.size() != train.anchors.rows())
    throw ValidationError("knr_predict: query dimension mismatch");
  double total = 0.0, sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0;
  double nearest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < train.size(); ++i) {
    const double d = (w - train.anchors.col(i)).norm();
    nearest = std::min(nearest, d);
    const double weight = gaussian_weight(d, bandwidth);
    const Pose& pose = train.poses[static_cast<size_t>(i)];
    total += weight;
    sx += weight * pose.x;
    sy += weight * pose.y;
    sc += weight * std::cos(pose.heading);
    ss += weight * std::sin(pose.heading);
  }
  if (total <= 1e-300)
    throw OutOfSupportError("knr_predict: all kernel weights underflow", nearest);
  return Pose{sx / total, sy / total, std::atan2(ss, sc)}.wrapped();
}

double loo_cv_bandwidth(const KnrModel& train, const std::vector<double>& candidates) {
  if (candidates.empty()) throw ValidationError("loo_cv_bandwidth: empty candidate grid");
  const int n = train.size();
  if (n < 3) throw ValidationError("loo_cv_bandwidth: need at least 3 training entries");
  for (double c : candidates)
    if (!(c > 0.0)) throw ValidationError("loo_cv_bandwidth: candidates must be positive");

  Mat dist2(n, n);
  for (int i = 0; i < n; ++i) {
    dist2(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (train.anchors.col(i) - train.anchors.col(j)).squaredNorm();
      dist2(i, j) = d2;
      dist2(j, i) = d2;
    }
  }

  double best_bw = candidates.front();
  double best_err = std::numeric_limits<double>::infinity();
  std::vector<double> ordered(candidates);
  std::sort(ordered.begin(), ordered.end());
  for (double bw : ordered) {
    const double inv = -0.5 / (bw * bw);
    double err = 0.0;
    bool usable = true;
    for (int i = 0; i < n && usable; ++i) {
      double total = 0.0, sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double weight = std::exp(dist2(i, j) * inv);
        const Pose& pose = train.poses[static_cast<size_t>(j)];
        total += weight;
        sx += weight * pose.x;
        sy += weight * pose.y;
        sc += weight * std::cos(pose.heading);
        ss += weight * std::sin(pose.heading);
      }
      if (total <= 1e-300) {
        usable = false;
        break;
      }
      const Pose& truth = train.poses[static_cast<size_t>(i)];
      const double dx = sx / total - truth.x;
      const double dy = sy / total - truth.y;
      const double dh = wrap_angle(std::atan2(ss, sc) - truth.heading);
      err += dx * dx + dy * dy + dh * dh;
    }
    if (!usable) continue;
    err /= n;
    if (err < best_err) {
      best_err = err;
      best_bw = bw;
    }
  }
  if (!std::isfinite(best_err))
    throw NumericalError("loo_cv_bandwidth: every candidate left some point unsupported");
  return best_bw;
}

std::vector<double> default_bandwidth_grid(const Mat& anchors, int count, double lo,
                                           double hi) {
  if (count < 2) throw ValidationError("default_bandwidth_grid: need at least 2 values");
  if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("default_bandwidth_grid: bad range");
  const double scale = median_pairwise_distance(anchors);
  if (!(scale > 0.0))
    throw NumericalError("default_bandwidth_grid: zero median pairwise distance");
  std::vector<double> grid;
  grid.reserve(static_cast<size_t>(count));
  const double log_lo = std::log(lo * scale);
  const double log_hi = std::log(hi * scale);
  for (int i = 0; i < count; ++i)
    grid.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (count - 1)));
  return grid;
}

double rrmse(const std::vector<Pose>& predicted, const std::vector<Pose>& truth) {
  if (predicted.size() != truth.size())
    throw ValidationError("rrmse: prediction/truth length mismatch");
  if (truth.empty()) throw ValidationError("rrmse: empty input");
  double mx = 0.0, my = 0.0;
  for (const Pose& p : truth) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(truth.size());
  my /= static_cast<double>(truth.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const double ex = predicted[i].x - truth[i].x;
    const double ey = predicted[i].y - truth[i].y;
    num += ex * ex + ey * ey;
    const double dx = truth[i].x - mx;
    const double dy = truth[i].y - my;
    den += dx * dx + dy * dy;
  }
  if (den <= 1e-300)
    throw NumericalError("rrmse: truth positions have zero variance");
  return std::sqrt(num / den);
}

ReconstructionStats reconstruction_errors(const tbml::TangentBundleModel& model,
                                          const appearance::LabeledDataset& ds,
                                          const std::vector<int>& indices) {
  if (indices.empty()) throw ValidationError("reconstruction_errors: empty index set");
  ReconstructionStats stats;
  stats.relative_errors.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= ds.n())
      throw ValidationError("reconstruction_errors: index out of range");
    const Vec z = ds.point(i).stacked(model.feature_scale);
    try {
      const Vec y = model.embed_stacked(z);
      const Vec z_rec = model.recover(y).stacked(model.feature_scale);
      const double denom = z.norm();
      if (!(denom > 0.0))
        throw NumericalError("reconstruction_errors: zero-norm stacked point");
      stats.relative_errors.push_back(model.z_difference(z_rec, z).norm() / denom);
    } catch (const OutOfSupportError&) {
      ++stats.skipped;
    }
  }
  if (stats.relative_errors.empty())
    throw InsufficientSampleError("reconstruction_errors: every point fell out of support");
  stats.median = median_of(stats.relative_errors);
  return stats;
}

TangentStats tangent_angles(const tbml::TangentBundleModel& model,
                            const appearance::LabeledDataset& ds,
                            const std::vector<int>& indices, double fd_step) {
  if (indices.empty()) throw ValidationError("tangent_angles: empty index set");
  if (!(fd_step > 0.0)) throw ValidationError("tangent_angles: fd_step must be positive");
  const appearance::FeatureExtractor extractor(ds.meta.extractor, ds.meta.sensor.p);
  const PoseSpace& space = ds.meta.space;
  const double s = model.feature_scale;

  auto stacked_at = [&](const Pose& pose) {
    const Vec image = appearance::render_image(ds.meta.world, ds.meta.sensor, space, pose);
    const Vec w = extractor.extract(image);
    Vec z(w.size() + 3);
    z.head(w.size()) = s * w;
    z[w.size()] = pose.x;
    z[w.size() + 1] = pose.y;
    z[w.size() + 2] = pose.heading;
    return z;
  };

  TangentStats stats;
  for (int idx : indices) {
    if (idx < 0 || idx >= ds.n()) throw ValidationError("tangent_angles: index out of range");
    const Pose pose = ds.poses[static_cast<size_t>(idx)];
    const bool interior = pose.x - fd_step >= space.x_range.lo &&
                          pose.x + fd_step <= space.x_range.hi &&
                          pose.y - fd_step >= space.y_range.lo &&
                          pose.y + fd_step <= space.y_range.hi;
    if (!interior) {
      ++stats.skipped;
      continue;
    }
    try {
      const Vec z = ds.point(idx).stacked(s);
      const Vec y = model.embed_stacked(z);
      Mat learned = model.recovery_jacobian(y);
      learned.topRows(model.m) *= s;

      Mat oracle(model.m + 3, 3);
      for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d hi_v = pose.to_vector(), lo_v = pose.to_vector();
        hi_v[j] += fd_step;
        lo_v[j] -= fd_step;
        Vec diff = stacked_at(Pose::from_vector(hi_v)) - stacked_at(Pose::from_vector(lo_v));
        diff[model.m + 2] = wrap_angle(diff[model.m + 2]);
        oracle.col(j) = diff / (2.0 * fd_step);
      }

      const Mat learned_q = orthonormal_columns(learned, model.q, "tangent_angles");
      const Mat oracle_q = orthonormal_columns(oracle, 3, "tangent_angles oracle");
      const Vec angles = principal_angles(learned_q, oracle_q);
      stats.max_angle_deg.push_back(angles.maxCoeff() * 180.0 / kPi);
    } catch (const OutOfSupportError&) {
      ++stats.skipped;
    }
  }
  if (stats.max_angle_deg.empty())
    throw InsufficientSampleError("tangent_angles: no evaluable interior points");
  stats.median_deg = median_of(stats.max_angle_deg);
  return stats;
}

namespace {

nlohmann::json method_json(const MethodResult& r) {
  return {{"method", r.method},
          {"rrmse_position", r.rrmse_position},
          {"mean_position_error", r.mean_position_error},
          {"median_heading_error", r.median_heading_error}};
}

}  // namespace

nlohmann::json BenchmarkReport::to_json() const {
  return {
      {"seed", seed},
      {"dataset", dataset_descriptor},
      {"rrmse_definition", "rms position error / rms deviation of truth from its mean"},
      {"methods", nlohmann::json::array({method_json(pipeline), method_json(knr)})},
      {"knr_bandwidth", knr_bandwidth},
      {"n_train", n_train},
      {"n_test", n_test},
      {"n_evaluated", n_evaluated},
      {"n_skipped", n_skipped},
      {"reconstruction",
       {{"median_relative_error", reconstruction.median},
        {"skipped", reconstruction.skipped},
        {"relative_errors", reconstruction.relative_errors}}},
      {"tangents",
       {{"median_max_angle_deg", tangents.median_deg},
        {"skipped", tangents.skipped},
        {"max_angles_deg", tangents.max_angle_deg}}},
  };
}

std::string BenchmarkReport::to_csv() const {
  std::ostringstream out;
  out << "method,rrmse_position,mean_position_error,median_heading_error,n_evaluated\n";
  for (const MethodResult* r : {&pipeline, &knr}) {
    out << r->method << ',' << r->rrmse_position << ',' << r->mean_position_error << ','
        << r->median_heading_error << ',' << n_evaluated << '\n';
  }
  return out.str();
}

BenchmarkReport evaluate_split(const appearance::LabeledDataset& ds,
                               const localize::LocalizationMaps& maps,
                               const BenchmarkConfig& config) {
  ds.validate();
  const std::vector<int>& train_idx = maps.train_indices;
  const std::vector<int>& test_idx = maps.test_indices;
  if (train_idx.empty() || test_idx.empty())
    throw ValidationError("evaluate_split: model carries an empty split");

  const KnrModel baseline = KnrModel::from_dataset(ds, train_idx, config.knr_on_pixels);
  const auto grid = default_bandwidth_grid(baseline.anchors, config.knr_grid_size,
                                           config.knr_grid_lo, config.knr_grid_hi);
  const double bandwidth = loo_cv_bandwidth(baseline, grid);

  std::vector<Pose> truth, pipeline_pred, knr_pred;
  int skipped = 0;
  for (int i : test_idx) {
    const Vec image = ds.images.row(i).transpose();
    const Vec query = config.knr_on_pixels ? image : Vec(ds.features.row(i).transpose());
    try {
      const Pose from_pipeline = maps.estimate_pose(image);
      const Pose from_knr = knr_predict(baseline, query, bandwidth);
      truth.push_back(ds.poses[static_cast<size_t>(i)]);
      pipeline_pred.push_back(from_pipeline);
      knr_pred.push_back(from_knr);
    } catch (const OutOfSupportError&) {
      ++skipped;
    }
  }
  if (truth.size() < 2)
    throw InsufficientSampleError("evaluate_split: fewer than 2 evaluable test points");

  auto summarize = [&](const std::string& name, const std::vector<Pose>& pred) {
    MethodResult r;
    r.method = name;
    r.rrmse_position = rrmse(pred, truth);
    double pos_sum = 0.0;
    std::vector<double> heading_errs;
    heading_errs.reserve(truth.size());
    for (size_t i = 0; i < truth.size(); ++i) {
      pos_sum += std::hypot(pred[i].x - truth[i].x, pred[i].y - truth[i].y);
      heading_errs.push_back(std::abs(wrap_angle(pred[i].heading - truth[i].heading)));
    }
    r.mean_position_error = pos_sum / static_cast<double>(truth.size());
    r.median_heading_error = median_of(heading_errs);
    return r;
  };

  BenchmarkReport report;
  report.seed = config.seed;
  report.dataset_descriptor = {
      {"n", ds.n()},        {"p", ds.p()},
      {"m", ds.m()},        {"seed", ds.meta.seed},
      {"world_hash", ds.meta.world_hash},
      {"extractor", appearance::extractor_kind_name(ds.meta.extractor.kind)},
      {"knr_input", config.knr_on_pixels ? "pixels" : "features"},
  };
  report.pipeline = summarize("pipeline", pipeline_pred);
  report.knr = summarize("knr", knr_pred);
  report.knr_bandwidth = bandwidth;
  report.n_train = static_cast<int>(train_idx.size());
  report.n_test = static_cast<int>(test_idx.size());
  report.n_evaluated = static_cast<int>(truth.size());
  report.n_skipped = skipped;
  report.reconstruction = reconstruction_errors(maps.model, ds, test_idx);
  report.tangents = tangent_angles(maps.model, ds, test_idx);
  return report;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  const auto world =
      appearance::make_ring_world(derive_seed(config.seed, 1), config.n_landmarks);
  appearance::FeatureExtractorSpec extractor = config.extractor;
  extractor.seed = derive_seed(config.seed, 3);
  const auto dataset = appearance::generate_dataset(world, config.sensor, config.space,
                                                    extractor, config.grid,
                                                    derive_seed(config.seed, 2));
  const auto split = split_dataset(dataset.n(), config.train_fraction,
                                   derive_seed(config.seed, 4));
  const auto maps =
      localize::build_localization_maps(dataset, split.train, split.test, config.train);
  return evaluate_split(dataset, maps, config);
}

}  // namespace mloc::evalx
