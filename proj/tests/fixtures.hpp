#pragma once

// Shared, lazily-built fixtures. Everything is deterministic (fixed seeds), and
// the expensive objects are cached in function-local statics so each test
// binary pays the build cost at most once.

#include <cmath>
#include <vector>

#include "mloc/appearance.hpp"
#include "mloc/evalx.hpp"
#include "mloc/localize.hpp"
#include "mloc/rng.hpp"
#include "mloc/tbml.hpp"

namespace fixtures {

using namespace mloc;

// A compact scene: enough resolution for the maps to work, small enough that
// fitting stays in the couple-of-seconds range.
struct Scene {
  appearance::World world;
  appearance::SensorSpec sensor;
  appearance::FeatureExtractorSpec extractor;
  PoseSpace space;
  appearance::GridScheme grid;
  std::uint64_t dataset_seed = 0;
};

inline const Scene& small_scene() {
  static const Scene scene = [] {
    Scene s;
    s.world = appearance::make_ring_world(derive_seed(7, 1));
    s.sensor.p = 256;
    s.extractor.m = 32;
    s.extractor.seed = derive_seed(7, 3);
    s.grid = {8, 8, 4, 2.0, 0.0};
    s.dataset_seed = derive_seed(7, 2);
    return s;
  }();
  return scene;
}

inline const appearance::LabeledDataset& small_dataset() {
  static const appearance::LabeledDataset ds = [] {
    const Scene& s = small_scene();
    return appearance::generate_dataset(s.world, s.sensor, s.space, s.extractor, s.grid,
                                        s.dataset_seed);
  }();
  return ds;
}

inline const evalx::SplitIndices& small_split() {
  static const evalx::SplitIndices split =
      evalx::split_dataset(small_dataset().n(), 0.7, derive_seed(7, 4));
  return split;
}

inline const localize::LocalizationMaps& small_maps() {
  static const localize::LocalizationMaps maps = [] {
    localize::TrainOptions options;
    return localize::build_localization_maps(small_dataset(), small_split().train,
                                             small_split().test, options);
  }();
  return maps;
}

// Exactly affine joint manifold: features are an affine function of the pose,
// so every fitted map has a closed-form ground truth.
struct AffineWorld {
  Mat a;   // m x 3
  Vec b;   // m
  tbml::RegressionManifoldSample sample;

  Vec features_at(const Pose& p) const { return a * p.to_vector() + b; }
  Vec stacked_at(const Pose& p) const {
    Vec z(a.rows() + 3);
    z.head(a.rows()) = sample.feature_scale * features_at(p);
    z.tail(3) = p.to_vector();
    return z;
  }
};

inline const AffineWorld& affine_world() {
  static const AffineWorld world = [] {
    AffineWorld w;
    const int m = 10;
    w.a.resize(m, 3);
    w.b.resize(m);
    Rng rng(42);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < 3; ++j) w.a(i, j) = rng.uniform(-1.0, 1.0);
      w.b[i] = rng.uniform(-1.0, 1.0);
    }
    std::vector<Pose> poses;
    for (int ix = 0; ix < 6; ++ix)
      for (int iy = 0; iy < 6; ++iy)
        for (int ih = 0; ih < 5; ++ih)
          poses.push_back({-1.0 + 2.0 * ix / 5.0, -1.0 + 2.0 * iy / 5.0, -0.5 + ih / 4.0});
    const int n = static_cast<int>(poses.size());
    w.sample.features.resize(n, m);
    for (int i = 0; i < n; ++i)
      w.sample.features.row(i) = w.features_at(poses[static_cast<size_t>(i)]).transpose();
    w.sample.poses = poses;
    w.sample.feature_scale = 1.0 / std::sqrt(static_cast<double>(m));
    w.sample.q = 3;
    return w;
  }();
  return world;
}

inline const tbml::TangentBundleModel& affine_model() {
  static const tbml::TangentBundleModel model =
      tbml::fit_tangent_bundle(affine_world().sample, 12, {});
  return model;
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fixtures
