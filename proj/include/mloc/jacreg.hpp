#pragma once

#include <optional>
#include <vector>

#include "mloc/tbml.hpp"
#include "mloc/types.hpp"

namespace mloc::jacreg {

enum class InputKind { feature_space, pose_space };

struct JacregOptions {
  double bandwidth_factor = 1.0;
  // <= 0 disables the tangent-agreement kernel factor.
  double grassmann_bandwidth = kPi / 4.0;
  double heading_weight = 1.0;  // meters-per-radian scale in pose kernels
};

// First-order kernel regressor: prediction blends per-anchor tangent-plane
// extrapolations y_i + G_i (x - x_i) with Gaussian weights, optionally
// multiplied by a Gaussian of the Grassmann distance between the query's
// nearest-anchor frame and each anchor frame.
struct JacobianRegressor {
  InputKind kind = InputKind::feature_space;
  int d_in = 0;
  int d_out = 0;
  Mat anchors;                  // d_in x n
  Mat values;                   // d_out x n
  std::vector<Mat> jacobians;   // d_out x d_in per anchor
  Vec bandwidths;               // per-anchor spatial bandwidths
  double grassmann_bandwidth = 0.0;  // <= 0 -> spatial factor only
  std::vector<Mat> frames;      // optional d_in x q tangent frames
  double heading_weight = 1.0;

  int size() const { return static_cast<int>(anchors.cols()); }

  // Difference x - anchor_i; pose inputs wrap the heading component.
  Vec input_delta(const Vec& x, int i) const;
  // Kernel distance; pose inputs scale the wrapped heading by heading_weight.
  double input_distance(const Vec& x, int i) const;

  Vec predict(const Vec& x) const;
  // Normalized kernel weights used by predict (diagnostic surface).
  Vec weights(const Vec& x) const;
};

// r*: feature vector -> embedding coordinates. Anchor Jacobians are
// pinv(feature block of the recovery Jacobian) composed with the feature
// tangent projector at the anchor.
JacobianRegressor build_feature_regressor(const tbml::TangentBundleModel& model,
                                          const JacregOptions& options = {});

// R*: pose -> embedding coordinates. Anchor Jacobians invert the pose block
// of the recovery Jacobian; throws ConditioningError naming the anchor when
// that block's condition number exceeds 1e8.
JacobianRegressor build_pose_regressor(const tbml::TangentBundleModel& model,
                                       const JacregOptions& options = {});

// Symmetric kernel value in (0, 1]: Gaussian spatial factor times an optional
// Gaussian-of-Grassmann-distance factor when both frames are present.
double kernel_eval(const KernelSpec& spec, const Vec& x1, const Vec& x2,
                   const std::optional<Mat>& frame1 = std::nullopt,
                   const std::optional<Mat>& frame2 = std::nullopt);

}  // namespace mloc::jacreg
