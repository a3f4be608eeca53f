#include "mloc/jacreg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mloc/linalg.hpp"

namespace mloc::jacreg {

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Per-anchor bandwidth: median distance to the k nearest other anchors.
Vec adaptive_bandwidths(const JacobianRegressor& reg, int k, double factor) {
  const int n = reg.size();
  const int use = std::min(k, n - 1);
  Vec out(n);
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) - 1);
  for (int i = 0; i < n; ++i) {
    dists.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dists.push_back(reg.input_distance(reg.anchors.col(j), i));
    }
    std::partial_sort(dists.begin(), dists.begin() + use, dists.end());
    std::vector<double> nearest(dists.begin(), dists.begin() + use);
    const double bw = factor * median_of(nearest);
    if (!(bw > 0.0))
      throw DegenerateNeighborhoodError(
          "jacreg: zero bandwidth at anchor " + std::to_string(i), 0);
    out[i] = bw;
  }
  return out;
}

}  // namespace

Vec JacobianRegressor::input_delta(const Vec& x, int i) const {
  Vec d = x - anchors.col(i);
  if (kind == InputKind::pose_space) d[2] = wrap_angle(x[2] - anchors(2, i));
  return d;
}

double JacobianRegressor::input_distance(const Vec& x, int i) const {
  Vec d = input_delta(x, i);
  if (kind == InputKind::pose_space) d[2] *= heading_weight;
  return d.norm();
}

Vec JacobianRegressor::weights(const Vec& x) const {
  if (x.size() != d_in) throw ValidationError("JacobianRegressor: input length mismatch");
  if (!x.allFinite()) throw ValidationError("JacobianRegressor: non-finite input");
  const int n = size();
  Vec dist(n);
  double dmin = std::numeric_limits<double>::infinity();
  int nearest = 0;
  for (int i = 0; i < n; ++i) {
    dist[i] = input_distance(x, i);
    if (dist[i] < dmin) {
      dmin = dist[i];
      nearest = i;
    }
  }
  const bool use_frames = grassmann_bandwidth > 0.0 && !frames.empty();
  Vec w(n);
  for (int i = 0; i < n; ++i) {
    double value = gaussian_weight(dist[i], bandwidths[i]);
    if (use_frames && value > 0.0)
      value *= gaussian_weight(
          grassmann_distance(frames[static_cast<size_t>(nearest)],
                             frames[static_cast<size_t>(i)]),
          grassmann_bandwidth);
    w[i] = value;
  }
  const double total = w.sum();
  if (!(total > 1e-300))
    throw OutOfSupportError("JacobianRegressor: query outside kernel support (nearest " +
                                std::to_string(dmin) + ")",
                            dmin);
  return w / total;
}

Vec JacobianRegressor::predict(const Vec& x) const {
  Vec w = weights(x);
  Vec out = Vec::Zero(d_out);
  for (int i = 0; i < size(); ++i) {
    if (w[i] == 0.0) continue;
    out += w[i] * (values.col(i) + jacobians[static_cast<size_t>(i)] * input_delta(x, i));
  }
  return out;
}

JacobianRegressor build_feature_regressor(const tbml::TangentBundleModel& model,
                                          const JacregOptions& options) {
  JacobianRegressor reg;
  reg.kind = InputKind::feature_space;
  reg.d_in = model.m;
  reg.d_out = model.q;
  reg.anchors = model.anchor_feats;
  reg.values = model.y_points;
  reg.heading_weight = options.heading_weight;
  reg.grassmann_bandwidth = options.grassmann_bandwidth;
  reg.jacobians.reserve(static_cast<size_t>(model.n));
  reg.frames = model.feature_bases;
  for (int i = 0; i < model.n; ++i) {
    Mat g_u = model.feature_jacobian(model.y_points.col(i));
    Mat projector = model.tangent_projection(model.anchor_feats.col(i));
    reg.jacobians.push_back(pseudo_inverse(g_u) * projector);
  }
  reg.bandwidths = adaptive_bandwidths(reg, model.k, options.bandwidth_factor);
  return reg;
}

JacobianRegressor build_pose_regressor(const tbml::TangentBundleModel& model,
                                       const JacregOptions& options) {
  JacobianRegressor reg;
  reg.kind = InputKind::pose_space;
  reg.d_in = 3;
  reg.d_out = model.q;
  reg.anchors = model.z_points.bottomRows(3);
  reg.values = model.y_points;
  reg.heading_weight = options.heading_weight;
  reg.grassmann_bandwidth = 0.0;  // pose domain is flat; frames carry nothing
  reg.jacobians.reserve(static_cast<size_t>(model.n));
  for (int i = 0; i < model.n; ++i) {
    Mat g_v = model.pose_jacobian(model.y_points.col(i));  // 3 x q
    Eigen::JacobiSVD<Mat> svd(g_v);
    const Vec& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    if (!(smin > 0.0) || sv[0] / smin > 1e8)
      throw ConditioningError("build_pose_regressor: ill-conditioned pose block at anchor " +
                              std::to_string(i));
    if (model.q == 3)
      reg.jacobians.push_back(g_v.partialPivLu().solve(Mat::Identity(3, 3)));
    else
      reg.jacobians.push_back(pseudo_inverse(g_v));
  }
  reg.bandwidths = adaptive_bandwidths(reg, model.k, options.bandwidth_factor);
  return reg;
}

double kernel_eval(const KernelSpec& spec, const Vec& x1, const Vec& x2,
                   const std::optional<Mat>& frame1, const std::optional<Mat>& frame2) {
  if (x1.size() != x2.size()) throw ValidationError("kernel_eval: length mismatch");
  double value = gaussian_weight((x1 - x2).norm(), spec.spatial_bandwidth);
  if (spec.grassmann_bandwidth && frame1 && frame2)
    value *= gaussian_weight(grassmann_distance(*frame1, *frame2),
                             *spec.grassmann_bandwidth);
  return value;
}

}  // namespace mloc::jacreg
