#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mloc/appearance.hpp"
#include "mloc/io.hpp"
#include "mloc/rng.hpp"

using namespace mloc;
namespace fs = std::filesystem;

namespace {

appearance::World test_world() { return appearance::make_ring_world(11); }

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("mloc_test_" + tag);
  fs::remove_all(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("make_ring_world places valid landmarks on the annulus, deterministically") {
  const appearance::World w = appearance::make_ring_world(5, 9, 6.0, 10.0, 0.2);
  CHECK(w.landmarks.size() == 9);
  CHECK(w.ambient_level == doctest::Approx(0.2));
  for (const auto& lm : w.landmarks) {
    const double r = lm.position.norm();
    CHECK(r >= 6.0);
    CHECK(r <= 10.0);
    CHECK(lm.intensity > 0.0);
    CHECK(lm.angular_width > 0.0);
    CHECK(lm.angular_width < kPi);
  }
  w.validate();

  const appearance::World again = appearance::make_ring_world(5, 9, 6.0, 10.0, 0.2);
  REQUIRE(again.landmarks.size() == w.landmarks.size());
  for (size_t i = 0; i < w.landmarks.size(); ++i) {
    CHECK(again.landmarks[i].position == w.landmarks[i].position);
    CHECK(again.landmarks[i].intensity == w.landmarks[i].intensity);
    CHECK(again.landmarks[i].angular_width == w.landmarks[i].angular_width);
  }
  const appearance::World other = appearance::make_ring_world(6, 9, 6.0, 10.0, 0.2);
  CHECK(other.landmarks[0].position != w.landmarks[0].position);
}

TEST_CASE("render_image stays in [0,1], is deterministic, and rejects outside poses") {
  const auto world = test_world();
  appearance::SensorSpec sensor;
  sensor.p = 128;
  PoseSpace space;

  const Pose pose{0.7, -1.1, 0.4};
  const Vec img = appearance::render_image(world, sensor, space, pose);
  REQUIRE(img.size() == 128);
  CHECK(img.minCoeff() >= 0.0);
  CHECK(img.maxCoeff() <= 1.0);
  CHECK(img.maxCoeff() > world.ambient_level);  // landmarks actually visible

  const Vec again = appearance::render_image(world, sensor, space, pose);
  CHECK((img - again).cwiseAbs().maxCoeff() == 0.0);

  const Vec far = appearance::render_image(world, sensor, space, {-2.0, 2.0, -1.0});
  CHECK((img - far).norm() > 1e-3);  // distinct poses give distinct panoramas

  CHECK_THROWS_AS(appearance::render_image(world, sensor, space, {99.0, 0.0, 0.0}),
                  OutOfDomainError);
}

TEST_CASE("rotating the sensor by a whole ray pitch cyclically shifts the panorama") {
  const auto world = test_world();
  appearance::SensorSpec sensor;
  sensor.p = 64;
  PoseSpace space;
  const Pose base{0.3, 0.9, 0.2};
  const int shift = 5;
  const Pose rotated{base.x, base.y, base.heading + kTwoPi * shift / sensor.p};

  const Vec img = appearance::render_image(world, sensor, space, base);
  const Vec rot = appearance::render_image(world, sensor, space, rotated);
  for (int j = 0; j < sensor.p; ++j)
    CHECK(rot[j] == doctest::Approx(img[(j + shift) % sensor.p]).epsilon(1e-9));
}

TEST_CASE("identity extractor passes images through and validates dimensions") {
  appearance::FeatureExtractorSpec spec;
  spec.kind = appearance::ExtractorKind::identity;
  spec.m = 16;
  appearance::FeatureExtractor fx(spec, 16);
  Vec img = Vec::LinSpaced(16, 0.0, 1.0);
  CHECK((fx.extract(img) - img).norm() == 0.0);

  CHECK_THROWS_AS(appearance::FeatureExtractor(spec, 32), ValidationError);
  CHECK_THROWS_AS(fx.extract(Vec::Zero(8)), ValidationError);
}

TEST_CASE("block_average extractor averages blocks and preserves constants") {
  appearance::FeatureExtractorSpec spec;
  spec.kind = appearance::ExtractorKind::block_average;
  spec.m = 4;
  appearance::FeatureExtractor fx(spec, 12);
  Vec img(12);
  img << 1, 1, 1, 2, 2, 2, 3, 3, 3, 0, 1, 2;
  const Vec f = fx.extract(img);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(1.0));
  CHECK(f[1] == doctest::Approx(2.0));
  CHECK(f[2] == doctest::Approx(3.0));
  CHECK(f[3] == doctest::Approx(1.0));

  const Vec flat = fx.extract(Vec::Constant(12, 0.37));
  CHECK((flat - Vec::Constant(4, 0.37)).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(appearance::FeatureExtractor(spec, 10), ValidationError);  // m does not divide p
}

TEST_CASE("random projection approximately preserves pairwise distances") {
  appearance::FeatureExtractorSpec spec;
  spec.m = 64;
  spec.seed = 31;
  const int p = 1024;
  appearance::FeatureExtractor fx(spec, p);

  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Vec a(p), b(p);
    for (int i = 0; i < p; ++i) {
      a[i] = rng.uniform();
      b[i] = rng.uniform();
    }
    const double ratio = (fx.extract(a) - fx.extract(b)).norm() / (a - b).norm();
    CHECK(ratio > 0.7);
    CHECK(ratio < 1.3);
  }

  // Same seed, fresh instance: identical projection.
  appearance::FeatureExtractor fx2(spec, p);
  Vec probe = Vec::LinSpaced(p, 0.0, 1.0);
  CHECK((fx.extract(probe) - fx2.extract(probe)).cwiseAbs().maxCoeff() == 0.0);

  // The free helper builds the same extractor.
  CHECK((appearance::extract_features(spec, probe) - fx.extract(probe)).cwiseAbs().maxCoeff() ==
        0.0);

  appearance::FeatureExtractorSpec other = spec;
  other.seed = 32;
  appearance::FeatureExtractor fx3(other, p);
  CHECK((fx.extract(probe) - fx3.extract(probe)).cwiseAbs().maxCoeff() > 1e-12);
}

TEST_CASE("grid datasets cover the workspace lattice with equispaced headings") {
  const auto world = test_world();
  appearance::SensorSpec sensor;
  sensor.p = 64;
  appearance::FeatureExtractorSpec extractor;
  extractor.m = 16;
  PoseSpace space;
  space.x_range = {-1.0, 1.0};
  space.y_range = {-2.0, 2.0};
  appearance::GridScheme grid{3, 5, 4, kTwoPi, 0.0};

  const auto ds = appearance::generate_dataset(world, sensor, space, extractor, grid, 77);
  ds.validate();
  CHECK(ds.n() == 3 * 5 * 4);
  CHECK(ds.p() == 64);
  CHECK(ds.m() == 16);
  CHECK(ds.meta.seed == 77);
  CHECK(ds.meta.world_hash == appearance::world_hash(world));

  double x_lo = 1e9, x_hi = -1e9;
  std::vector<double> headings;
  for (const Pose& pose : ds.poses) {
    CHECK(space.contains(pose));
    x_lo = std::min(x_lo, pose.x);
    x_hi = std::max(x_hi, pose.x);
    headings.push_back(pose.heading);
  }
  CHECK(x_lo == doctest::Approx(-1.0));
  CHECK(x_hi == doctest::Approx(1.0));
  std::sort(headings.begin(), headings.end());
  CHECK(headings.front() == doctest::Approx(-kPi));
  CHECK(headings.back() == doctest::Approx(-kPi + kTwoPi * 3 / 4));

  // Features are exactly the extractor applied to the stored images.
  appearance::FeatureExtractor fx(extractor, sensor.p);
  for (int i : {0, 7, ds.n() - 1}) {
    const Vec img = ds.images.row(i).transpose();
    CHECK((ds.features.row(i).transpose() - fx.extract(img)).cwiseAbs().maxCoeff() < 1e-15);
    const Vec fresh = appearance::render_image(world, sensor, space, ds.poses[static_cast<size_t>(i)]);
    CHECK((img - fresh).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("trajectory datasets stay inside the workspace and are reproducible") {
  const auto world = test_world();
  appearance::SensorSpec sensor;
  sensor.p = 64;
  appearance::FeatureExtractorSpec extractor;
  extractor.m = 16;
  PoseSpace space;

  appearance::TrajectoryScheme traj;
  traj.n = 150;
  traj.speed = 0.4;
  traj.noise_v = 0.02;
  traj.noise_w = 0.02;
  traj.noise_seed = 4;

  const auto ds = appearance::generate_dataset(world, sensor, space, extractor, traj, 3);
  ds.validate();
  CHECK(ds.n() == 150);
  for (const Pose& pose : ds.poses) CHECK(space.contains(pose));
  for (int i = 1; i < ds.n(); ++i) {
    const Eigen::Vector3d d =
        pose_delta(ds.poses[static_cast<size_t>(i)], ds.poses[static_cast<size_t>(i - 1)]);
    CHECK(d.head<2>().norm() <= (traj.speed + 4.0 * traj.noise_v) * traj.dt + 1e-12);
  }

  const auto again = appearance::generate_dataset(world, sensor, space, extractor, traj, 3);
  CHECK((ds.images - again.images).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < ds.n(); ++i) {
    CHECK(ds.poses[static_cast<size_t>(i)].x == again.poses[static_cast<size_t>(i)].x);
    CHECK(ds.poses[static_cast<size_t>(i)].heading == again.poses[static_cast<size_t>(i)].heading);
  }
}

TEST_CASE("integrate_controls reports the step at which the path escapes") {
  PoseSpace space;
  std::vector<Eigen::Vector2d> controls(100, Eigen::Vector2d{1.0, 0.0});
  // 100 steps of 1 m/s from x=2.5 heads out of the +-3 box quickly.
  try {
    appearance::integrate_controls(space, {2.5, 0.0, 0.0}, controls, 0.1, 0.0, 0.0, 0);
    CHECK(false);
  } catch (const OutOfDomainError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }

  const auto poses =
      appearance::integrate_controls(space, {0.0, 0.0, 0.0}, {5, Eigen::Vector2d{0.5, 0.1}},
                                     0.1, 0.0, 0.0, 0);
  CHECK(poses.size() == 6);  // start plus one pose per control
  CHECK(poses[0].x == doctest::Approx(0.0));
  CHECK(poses[5].x > 0.2);
}

TEST_CASE("world_hash is stable and sensitive to every world parameter") {
  const auto w = test_world();
  const std::string h = appearance::world_hash(w);
  CHECK(h == appearance::world_hash(w));
  CHECK(!h.empty());

  auto moved = w;
  moved.landmarks[0].position.x() += 1e-6;
  CHECK(appearance::world_hash(moved) != h);

  auto dimmer = w;
  dimmer.ambient_level += 0.01;
  CHECK(appearance::world_hash(dimmer) != h);
}

TEST_CASE("dataset save/load round trip preserves content at storage precision") {
  const auto world = test_world();
  appearance::SensorSpec sensor;
  sensor.p = 64;
  appearance::FeatureExtractorSpec extractor;
  extractor.m = 16;
  PoseSpace space;
  const auto ds = appearance::generate_dataset(world, sensor, space, extractor,
                                               appearance::GridScheme{4, 4, 3, kTwoPi, 0.0}, 13);

  const fs::path dir = fresh_dir("ds_roundtrip");
  io::save_dataset(ds, dir.string());
  const auto back = io::load_dataset(dir.string());

  REQUIRE(back.n() == ds.n());
  REQUIRE(back.p() == ds.p());
  REQUIRE(back.m() == ds.m());
  CHECK((back.images - ds.images).cwiseAbs().maxCoeff() < 1e-6);    // float32 storage
  CHECK((back.features - ds.features).cwiseAbs().maxCoeff() < 1e-6);
  for (int i = 0; i < ds.n(); ++i)
    CHECK(pose_delta(back.poses[static_cast<size_t>(i)], ds.poses[static_cast<size_t>(i)]).norm() <
          1e-12);
  CHECK(back.meta.world_hash == ds.meta.world_hash);
  CHECK(back.meta.seed == ds.meta.seed);

  // Saving the loaded dataset reproduces the binary payloads byte for byte.
  const fs::path dir2 = fresh_dir("ds_roundtrip2");
  io::save_dataset(back, dir2.string());
  CHECK(read_bytes(dir / "images.f32") == read_bytes(dir2 / "images.f32"));
  CHECK(read_bytes(dir / "features.f32") == read_bytes(dir2 / "features.f32"));
  CHECK(read_bytes(dir / "poses.csv") == read_bytes(dir2 / "poses.csv"));

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("dataset loader rejects truncated arrays and tampered manifests by name") {
  const auto world = test_world();
  appearance::SensorSpec sensor;
  sensor.p = 64;
  appearance::FeatureExtractorSpec extractor;
  extractor.m = 16;
  PoseSpace space;
  const auto ds = appearance::generate_dataset(world, sensor, space, extractor,
                                               appearance::GridScheme{3, 3, 2, kTwoPi, 0.0}, 1);

  const fs::path dir = fresh_dir("ds_corrupt");
  io::save_dataset(ds, dir.string());

  SUBCASE("truncated images.f32") {
    const std::string bytes = read_bytes(dir / "images.f32");
    std::ofstream out(dir / "images.f32", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    try {
      io::load_dataset(dir.string());
      CHECK(false);
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("images") != std::string::npos);
    }
  }

  SUBCASE("manifest world tampered") {
    const std::string manifest = read_bytes(dir / "manifest.json");
    const std::string needle = "\"ambient_level\":";
    const auto at = manifest.find(needle);
    REQUIRE(at != std::string::npos);
    std::string hacked = manifest;
    hacked.replace(at, needle.size() + 4, needle + " 0.9");
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << hacked;
    out.close();
    CHECK_THROWS_AS(io::load_dataset(dir.string()), IoError);
  }

  SUBCASE("missing directory") {
    CHECK_THROWS_AS(io::load_dataset((dir / "nope").string()), IoError);
  }

  fs::remove_all(dir);
}
