#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mloc/types.hpp"

namespace mloc::appearance {

struct Landmark {
  Eigen::Vector2d position;
  double intensity = 1.0;      // > 0
  double angular_width = 0.4;  // radians, in (0, pi)
};

struct World {
  std::vector<Landmark> landmarks;
  double ambient_level = 0.1;  // additive floor in [0, 1)
  std::uint64_t seed = 0;
  void validate() const;
};

// Landmarks on an annulus around the workspace. Widths and intensities are
// drawn wide enough that panoramas stay smooth at grid-sampling scales.
World make_ring_world(std::uint64_t seed, int n_landmarks = 12, double radius_lo = 7.0,
                      double radius_hi = 12.0, double ambient = 0.1);

struct SensorSpec {
  int p = 1024;             // ray count, >= 16
  double max_range = 30.0;  // nominal range, metadata only
  double falloff = 1.0;     // distance attenuation exponent, > 0
  void validate() const;
};

enum class ExtractorKind { identity, random_projection, block_average };

const char* extractor_kind_name(ExtractorKind kind);
ExtractorKind extractor_kind_from_name(const std::string& name);

struct FeatureExtractorSpec {
  ExtractorKind kind = ExtractorKind::random_projection;
  int m = 64;
  std::uint64_t seed = 0;
};

// Materialized extractor; random_projection builds its sign matrix once.
class FeatureExtractor {
 public:
  FeatureExtractor(const FeatureExtractorSpec& spec, int input_dim);
  Vec extract(const Vec& image) const;
  const FeatureExtractorSpec& spec() const { return spec_; }
  int input_dim() const { return p_; }

 private:
  FeatureExtractorSpec spec_;
  int p_ = 0;
  Mat projection_;  // m x p of +-1 entries (random_projection only)
};

// Panoramic intensity image at the given pose. Ray j points at
// heading + 2*pi*j/p; each landmark contributes a Gaussian bearing lobe
// attenuated by 1/(1 + dist^falloff); values clamp to [0, 1].
Vec render_image(const World& world, const SensorSpec& sensor, const PoseSpace& space,
                 const Pose& pose);

Vec extract_features(const FeatureExtractorSpec& spec, const Vec& image);

struct GridScheme {
  int nx = 10;
  int ny = 10;
  int n_headings = 5;
  // Sampled heading arc; a span >= 2*pi means equispaced around the full
  // circle. Narrow spans keep the sampled patch chart-friendly.
  double heading_span = kTwoPi;
  double heading_center = 0.0;
};

struct TrajectoryScheme {
  int n = 2500;
  double dt = 0.1;
  double speed = 0.8;
  double noise_v = 0.0;  // actuation noise std, m/s
  double noise_w = 0.0;  // actuation noise std, rad/s
  std::uint64_t noise_seed = 0;
  double margin = 1.0;       // clearance kept from the workspace boundary
  double row_spacing = 1.5;  // serpentine row pitch
};

using SamplingScheme = std::variant<GridScheme, TrajectoryScheme>;

struct DatasetMeta {
  std::uint64_t seed = 0;
  std::string world_hash;
  SamplingScheme scheme;
  FeatureExtractorSpec extractor;
  World world;
  SensorSpec sensor;
  PoseSpace space;
};

struct LabeledDataset {
  Mat images;    // n x p, one row per entry
  Mat features;  // n x m
  std::vector<Pose> poses;
  DatasetMeta meta;

  int n() const { return static_cast<int>(images.rows()); }
  int p() const { return static_cast<int>(images.cols()); }
  int m() const { return static_cast<int>(features.cols()); }
  RegressionPoint point(int i) const {
    return {features.row(i).transpose(), poses[static_cast<size_t>(i)]};
  }
  void validate() const;
};

// Grid: regular pose lattice times equispaced headings. Trajectory: a
// boundary-aware serpentine drive integrated through the motion model with
// seeded actuation noise.
LabeledDataset generate_dataset(const World& world, const SensorSpec& sensor,
                                const PoseSpace& space,
                                const FeatureExtractorSpec& extractor,
                                const SamplingScheme& scheme,
                                std::uint64_t dataset_seed = 0);

// Open-loop integration of an explicit control script; throws
// OutOfDomainError naming the offending step if the path leaves the space.
std::vector<Pose> integrate_controls(const PoseSpace& space, const Pose& start,
                                     const std::vector<Eigen::Vector2d>& controls,
                                     double dt, double noise_v, double noise_w,
                                     std::uint64_t noise_seed);

// FNV-1a over the canonical world serialization; hex string.
std::string world_hash(const World& world);

}  // namespace mloc::appearance
