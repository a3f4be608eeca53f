#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "mloc/errors.hpp"

namespace mloc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double r = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
  if (r >= kPi) r -= kTwoPi;  // guards the r == pi rounding edge
  return r;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, kept in [-pi, pi)

  Pose wrapped() const { return {x, y, wrap_angle(heading)}; }
  Eigen::Vector3d to_vector() const { return {x, y, heading}; }
  static Pose from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], wrap_angle(v[2])}; }
  bool all_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(heading);
  }
};

// a - b componentwise with the heading difference wrapped.
inline Eigen::Vector3d pose_delta(const Pose& a, const Pose& b) {
  return {a.x - b.x, a.y - b.y, wrap_angle(a.heading - b.heading)};
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct PoseSpace {
  Interval x_range{-3.0, 3.0};
  Interval y_range{-3.0, 3.0};
  bool include_heading = true;

  int intrinsic_dim() const { return include_heading ? 3 : 2; }
  bool contains(const Pose& p) const {
    return p.all_finite() && x_range.contains(p.x) && y_range.contains(p.y);
  }
  double diagonal() const { return std::hypot(x_range.length(), y_range.length()); }
  void validate() const {
    if (!std::isfinite(x_range.lo) || !std::isfinite(x_range.hi) ||
        !std::isfinite(y_range.lo) || !std::isfinite(y_range.hi))
      throw ValidationError("PoseSpace: non-finite range");
    if (!(x_range.length() > 0.0) || !(y_range.length() > 0.0))
      throw ValidationError("PoseSpace: degenerate range");
  }
};

// One labeled sample of the joint feature/pose ambient space.
struct RegressionPoint {
  Vec features;  // length m, unscaled
  Pose pose;

  int m() const { return static_cast<int>(features.size()); }

  // Stacked ambient vector: scaled features followed by pose coordinates.
  Vec stacked(double feature_scale) const {
    Vec z(features.size() + 3);
    z.head(features.size()) = feature_scale * features;
    z[features.size()] = pose.x;
    z[features.size() + 1] = pose.y;
    z[features.size() + 2] = pose.heading;
    return z;
  }
};

struct Neighbor {
  int index;
  double distance;
};

// Symmetric-closure kNN graph; adjacency sorted by (distance, index).
struct NeighborGraph {
  int k = 0;
  std::vector<std::vector<Neighbor>> adjacency;
  int size() const { return static_cast<int>(adjacency.size()); }
};

struct TangentFrame {
  int basepoint = -1;
  Mat basis;  // ambient_dim x q, orthonormal columns
};

struct KernelSpec {
  double spatial_bandwidth = 1.0;
  std::optional<double> grassmann_bandwidth;  // factor disabled when absent
};

}  // namespace mloc
