#include "mloc/appearance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mloc/motion.hpp"
#include "mloc/rng.hpp"

namespace mloc::appearance {

void World::validate() const {
  if (landmarks.size() < 3) throw ValidationError("World: needs at least 3 landmarks");
  if (!(ambient_level >= 0.0) || !(ambient_level < 1.0))
    throw ValidationError("World: ambient_level must lie in [0, 1)");
  for (const Landmark& lm : landmarks) {
    if (!lm.position.allFinite()) throw ValidationError("World: non-finite landmark");
    if (!(lm.intensity > 0.0)) throw ValidationError("World: intensity must be positive");
    if (!(lm.angular_width > 0.0) || !(lm.angular_width < kPi))
      throw ValidationError("World: angular_width must lie in (0, pi)");
  }
}

void SensorSpec::validate() const {
  if (p < 16) throw ValidationError("SensorSpec: p must be >= 16");
  if (!(max_range > 0.0)) throw ValidationError("SensorSpec: max_range must be positive");
  if (!(falloff > 0.0)) throw ValidationError("SensorSpec: falloff must be positive");
}

World make_ring_world(std::uint64_t seed, int n_landmarks, double radius_lo,
                      double radius_hi, double ambient) {
  if (n_landmarks < 3) throw ValidationError("make_ring_world: needs >= 3 landmarks");
  if (!(radius_lo > 0.0) || !(radius_hi > radius_lo))
    throw ValidationError("make_ring_world: bad radius range");
  World world;
  world.seed = seed;
  world.ambient_level = ambient;
  Rng rng(seed);
  world.landmarks.reserve(n_landmarks);
  for (int i = 0; i < n_landmarks; ++i) {
    // Stratified angles keep all bearings covered for any seed.
    double angle = kTwoPi * (i + rng.uniform()) / n_landmarks - kPi;
    double radius = rng.uniform(radius_lo, radius_hi);
    Landmark lm;
    lm.position = {radius * std::cos(angle), radius * std::sin(angle)};
    // Diverse intensities and wide lobes break the ring's rotational
    // pseudo-symmetry; similar landmarks make distinct poses render nearly
    // identical panoramas, which aliases any appearance-based regression.
    lm.intensity = rng.uniform(0.2, 1.0);
    lm.angular_width = rng.uniform(0.6, 1.0);
    world.landmarks.push_back(lm);
  }
  world.validate();
  return world;
}

const char* extractor_kind_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::identity: return "identity";
    case ExtractorKind::random_projection: return "random_projection";
    case ExtractorKind::block_average: return "block_average";
  }
  throw ValidationError("extractor_kind_name: unknown kind");
}

ExtractorKind extractor_kind_from_name(const std::string& name) {
  if (name == "identity") return ExtractorKind::identity;
  if (name == "random_projection") return ExtractorKind::random_projection;
  if (name == "block_average") return ExtractorKind::block_average;
  throw ValidationError("unknown extractor kind: " + name);
}

FeatureExtractor::FeatureExtractor(const FeatureExtractorSpec& spec, int input_dim)
    : spec_(spec), p_(input_dim) {
  if (input_dim < 1) throw ValidationError("FeatureExtractor: input_dim must be >= 1");
  if (spec.m < 1) throw ValidationError("FeatureExtractor: m must be >= 1");
  switch (spec.kind) {
    case ExtractorKind::identity:
      if (spec.m != input_dim)
        throw ValidationError("FeatureExtractor: identity requires m == p");
      break;
    case ExtractorKind::block_average:
      if (input_dim % spec.m != 0)
        throw ValidationError("FeatureExtractor: block_average requires m to divide p");
      break;
    case ExtractorKind::random_projection: {
      Rng rng(spec.seed);
      projection_.resize(spec.m, input_dim);
      for (int i = 0; i < spec.m; ++i)
        for (int j = 0; j < input_dim; ++j)
          projection_(i, j) = static_cast<double>(rng.sign());
      break;
    }
  }
}

Vec FeatureExtractor::extract(const Vec& image) const {
  if (image.size() != p_)
    throw ValidationError("FeatureExtractor: image length mismatch");
  if (!image.allFinite()) throw ValidationError("FeatureExtractor: non-finite image");
  switch (spec_.kind) {
    case ExtractorKind::identity:
      return image;
    case ExtractorKind::random_projection:
      return (projection_ * image) / std::sqrt(static_cast<double>(spec_.m));
    case ExtractorKind::block_average: {
      const int block = p_ / spec_.m;
      Vec out(spec_.m);
      for (int b = 0; b < spec_.m; ++b)
        out[b] = image.segment(static_cast<Eigen::Index>(b) * block, block).mean();
      return out;
    }
  }
  throw ValidationError("FeatureExtractor: unknown kind");
}

Vec extract_features(const FeatureExtractorSpec& spec, const Vec& image) {
  return FeatureExtractor(spec, static_cast<int>(image.size())).extract(image);
}

Vec render_image(const World& world, const SensorSpec& sensor, const PoseSpace& space,
                 const Pose& pose) {
  world.validate();
  sensor.validate();
  space.validate();
  if (!space.contains(pose))
    throw OutOfDomainError("render_image: pose outside workspace");

  Vec img = Vec::Constant(sensor.p, world.ambient_level);
  for (const Landmark& lm : world.landmarks) {
    const double dx = lm.position.x() - pose.x;
    const double dy = lm.position.y() - pose.y;
    const double dist = std::hypot(dx, dy);
    const double bearing_to = std::atan2(dy, dx);
    const double gain = lm.intensity / (1.0 + std::pow(dist, sensor.falloff));
    const double inv_two_w2 = 1.0 / (2.0 * lm.angular_width * lm.angular_width);
    for (int j = 0; j < sensor.p; ++j) {
      const double ray = pose.heading + kTwoPi * j / sensor.p;
      const double db = wrap_angle(ray - bearing_to);
      img[j] += gain * std::exp(-db * db * inv_two_w2);
    }
  }
  for (int j = 0; j < sensor.p; ++j) img[j] = std::clamp(img[j], 0.0, 1.0);
  return img;
}

void LabeledDataset::validate() const {
  const int count = n();
  if (count < 1) throw ValidationError("LabeledDataset: empty");
  if (features.rows() != count || static_cast<int>(poses.size()) != count)
    throw ValidationError("LabeledDataset: entry count mismatch");
  if (!images.allFinite() || !features.allFinite())
    throw ValidationError("LabeledDataset: non-finite data");
  for (const Pose& pose : poses)
    if (!pose.all_finite()) throw ValidationError("LabeledDataset: non-finite pose");
}

namespace {

std::vector<double> linspace(const Interval& range, int n) {
  std::vector<double> out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(range.mid());
    return out;
  }
  for (int i = 0; i < n; ++i)
    out.push_back(range.lo + range.length() * i / (n - 1));
  return out;
}

std::vector<Pose> grid_poses(const PoseSpace& space, const GridScheme& grid) {
  if (grid.nx < 1 || grid.ny < 1 || grid.n_headings < 1)
    throw ValidationError("grid scheme: counts must be >= 1");
  if (!(grid.heading_span > 0.0))
    throw ValidationError("grid scheme: heading_span must be positive");
  if (!space.include_heading && grid.n_headings != 1)
    throw ValidationError("grid scheme: n_headings must be 1 when heading is excluded");

  std::vector<double> headings;
  if (!space.include_heading) {
    headings.push_back(0.0);
  } else if (grid.heading_span >= kTwoPi - 1e-12) {
    for (int j = 0; j < grid.n_headings; ++j)
      headings.push_back(-kPi + kTwoPi * j / grid.n_headings);
  } else {
    Interval arc{grid.heading_center - 0.5 * grid.heading_span,
                 grid.heading_center + 0.5 * grid.heading_span};
    for (double h : linspace(arc, grid.n_headings)) headings.push_back(wrap_angle(h));
  }

  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(grid.nx) * grid.ny * headings.size());
  for (double x : linspace(space.x_range, grid.nx))
    for (double y : linspace(space.y_range, grid.ny))
      for (double h : headings) poses.push_back({x, y, h});
  return poses;
}

// Serpentine waypoints with a margin, tracked by a saturated heading
// controller. Feedback on the current (noisy) pose keeps the path inside the
// workspace under moderate actuation noise.
std::vector<Pose> trajectory_poses(const PoseSpace& space, const TrajectoryScheme& traj) {
  if (traj.n < 2) throw ValidationError("trajectory scheme: n must be >= 2");
  if (!(traj.dt > 0.0) || !(traj.speed > 0.0))
    throw ValidationError("trajectory scheme: dt and speed must be positive");
  if (traj.noise_v < 0.0 || traj.noise_w < 0.0)
    throw ValidationError("trajectory scheme: noise must be non-negative");
  const double margin = traj.margin;
  Interval xr{space.x_range.lo + margin, space.x_range.hi - margin};
  Interval yr{space.y_range.lo + margin, space.y_range.hi - margin};
  if (!(xr.length() > 0.0) || !(yr.length() > 0.0))
    throw ValidationError("trajectory scheme: margin leaves no room");

  std::vector<Eigen::Vector2d> waypoints;
  bool left_to_right = true;
  for (double y = yr.lo;; y += traj.row_spacing) {
    if (y > yr.hi) break;
    if (left_to_right) {
      waypoints.emplace_back(xr.lo, y);
      waypoints.emplace_back(xr.hi, y);
    } else {
      waypoints.emplace_back(xr.hi, y);
      waypoints.emplace_back(xr.lo, y);
    }
    left_to_right = !left_to_right;
  }
  if (waypoints.size() < 2)
    throw ValidationError("trajectory scheme: row_spacing too large for workspace");

  localize::MotionModel motion;
  motion.dt = traj.dt;
  Rng rng(traj.noise_seed);
  Pose pose{waypoints[0].x(), waypoints[0].y(), 0.0};
  size_t target = 1;
  // Capture within 1.5 minimum turn radii (turn rate is clamped at 1.2 rad/s
  // below) so the follower cannot orbit an unreachable waypoint, yet rows stay
  // straight regardless of their pitch.
  const double capture = std::max(1.5 * traj.speed / 1.2, traj.speed * traj.dt * 2.0);
  std::vector<Pose> poses;
  poses.reserve(traj.n);
  poses.push_back(pose);
  for (int step = 1; step < traj.n; ++step) {
    const Eigen::Vector2d& wp = waypoints[target];
    if (std::hypot(wp.x() - pose.x, wp.y() - pose.y) < capture)
      target = (target + 1) % waypoints.size();
    const Eigen::Vector2d& goal = waypoints[target];
    const double bearing = std::atan2(goal.y() - pose.y, goal.x() - pose.x);
    const double turn = std::clamp(2.0 * wrap_angle(bearing - pose.heading), -1.2, 1.2);
    localize::Control u{traj.speed + traj.noise_v * rng.normal(),
                        turn + traj.noise_w * rng.normal()};
    pose = localize::motion_step(motion, pose, u);
    if (!space.contains(pose))
      throw OutOfDomainError("trajectory scheme: pose left workspace at step " +
                             std::to_string(step));
    poses.push_back(pose);
  }
  return poses;
}

}  // namespace

LabeledDataset generate_dataset(const World& world, const SensorSpec& sensor,
                                const PoseSpace& space,
                                const FeatureExtractorSpec& extractor,
                                const SamplingScheme& scheme,
                                std::uint64_t dataset_seed) {
  world.validate();
  sensor.validate();
  space.validate();

  std::vector<Pose> poses;
  if (std::holds_alternative<GridScheme>(scheme))
    poses = grid_poses(space, std::get<GridScheme>(scheme));
  else
    poses = trajectory_poses(space, std::get<TrajectoryScheme>(scheme));

  FeatureExtractor fx(extractor, sensor.p);
  LabeledDataset ds;
  ds.images.resize(static_cast<Eigen::Index>(poses.size()), sensor.p);
  ds.features.resize(static_cast<Eigen::Index>(poses.size()), extractor.m);
  ds.poses = poses;
  for (size_t i = 0; i < poses.size(); ++i) {
    Vec img = render_image(world, sensor, space, poses[i]);
    ds.images.row(static_cast<Eigen::Index>(i)) = img.transpose();
    ds.features.row(static_cast<Eigen::Index>(i)) = fx.extract(img).transpose();
  }
  ds.meta = {dataset_seed, world_hash(world), scheme, extractor, world, sensor, space};
  ds.validate();
  return ds;
}

std::vector<Pose> integrate_controls(const PoseSpace& space, const Pose& start,
                                     const std::vector<Eigen::Vector2d>& controls,
                                     double dt, double noise_v, double noise_w,
                                     std::uint64_t noise_seed) {
  space.validate();
  if (!space.contains(start))
    throw OutOfDomainError("integrate_controls: start pose outside workspace");
  localize::MotionModel motion;
  motion.dt = dt;
  Rng rng(noise_seed);
  std::vector<Pose> poses;
  poses.reserve(controls.size() + 1);
  poses.push_back(start.wrapped());
  for (size_t t = 0; t < controls.size(); ++t) {
    localize::Control u{controls[t].x() + noise_v * rng.normal(),
                        controls[t].y() + noise_w * rng.normal()};
    Pose next = localize::motion_step(motion, poses.back(), u);
    if (!space.contains(next))
      throw OutOfDomainError("integrate_controls: pose left workspace at step " +
                             std::to_string(t));
    poses.push_back(next);
  }
  return poses;
}

std::string world_hash(const World& world) {
  std::ostringstream canon;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g;", v);
    canon << buf;
  };
  canon << "world:v1:" << world.seed << ";" << world.landmarks.size() << ";";
  put(world.ambient_level);
  for (const Landmark& lm : world.landmarks) {
    put(lm.position.x());
    put(lm.position.y());
    put(lm.intensity);
    put(lm.angular_width);
  }
  const std::string s = canon.str();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace mloc::appearance
