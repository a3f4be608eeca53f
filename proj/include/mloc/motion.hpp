#pragma once

#include "mloc/types.hpp"

namespace mloc::localize {

struct Control {
  double v = 0.0;      // forward velocity, m/s
  double omega = 0.0;  // turn rate, rad/s
};

struct MotionModel {
  double dt = 0.1;
  Eigen::Matrix3d process_noise = Eigen::Matrix3d::Zero();
};

// Unicycle step. Uses the exact circular-arc solution when the turn rate is
// meaningful and the straight-line limit below |omega| = 1e-9, where the arc
// formula loses precision.
inline Pose motion_step(const MotionModel& model, const Pose& pose, const Control& u) {
  if (!(model.dt > 0.0)) throw ValidationError("motion_step: dt must be positive");
  if (!pose.all_finite() || !std::isfinite(u.v) || !std::isfinite(u.omega))
    throw ValidationError("motion_step: non-finite input");
  const double h = pose.heading;
  const double h2 = h + u.omega * model.dt;
  Pose out;
  if (std::abs(u.omega) > 1e-9) {
    const double r = u.v / u.omega;
    out.x = pose.x + r * (std::sin(h2) - std::sin(h));
    out.y = pose.y + r * (std::cos(h) - std::cos(h2));
  } else {
    out.x = pose.x + u.v * std::cos(h) * model.dt;
    out.y = pose.y + u.v * std::sin(h) * model.dt;
  }
  out.heading = wrap_angle(h2);
  return out;
}

// Derivative of motion_step with respect to the state (x, y, heading).
inline Eigen::Matrix3d motion_jacobian(const MotionModel& model, const Pose& pose,
                                       const Control& u) {
  const double h = pose.heading;
  const double h2 = h + u.omega * model.dt;
  Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
  if (std::abs(u.omega) > 1e-9) {
    const double r = u.v / u.omega;
    f(0, 2) = r * (std::cos(h2) - std::cos(h));
    f(1, 2) = r * (std::sin(h2) - std::sin(h));
  } else {
    f(0, 2) = -u.v * std::sin(h) * model.dt;
    f(1, 2) = u.v * std::cos(h) * model.dt;
  }
  return f;
}

}  // namespace mloc::localize
