#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "mloc/linalg.hpp"
#include "mloc/tbml.hpp"

using namespace mloc;
using fixtures::affine_model;
using fixtures::affine_world;

namespace {

Vec stack_point(const tbml::RegressionManifoldSample& sample, const RegressionPoint& p) {
  Vec z(p.features.size() + 3);
  z.head(p.features.size()) = sample.feature_scale * p.features;
  z.tail(3) = p.pose.to_vector();
  return z;
}

}  // namespace

TEST_CASE("stacked coordinates scale features and append the pose") {
  tbml::RegressionManifoldSample s;
  s.features.resize(2, 4);
  s.features << 1, 2, 3, 4, 5, 6, 7, 8;
  s.poses = {{0.5, -0.5, 1.0}, {1.5, 2.5, -2.0}};
  s.feature_scale = 0.25;
  const Vec z = s.stacked(1);
  REQUIRE(z.size() == 7);
  CHECK(z[0] == doctest::Approx(1.25));
  CHECK(z[3] == doctest::Approx(2.0));
  CHECK(z[4] == doctest::Approx(1.5));
  CHECK(z[6] == doctest::Approx(-2.0));
}

TEST_CASE("from_dataset defaults the feature scale to 1/sqrt(m) and honors index subsets") {
  const auto& ds = fixtures::small_dataset();
  const auto all = tbml::RegressionManifoldSample::from_dataset(ds);
  CHECK(all.n() == ds.n());
  CHECK(all.m() == ds.m());
  CHECK(all.feature_scale == doctest::Approx(1.0 / std::sqrt(static_cast<double>(ds.m()))));

  const std::vector<int> subset{3, 10, 42, 77};
  const auto some = tbml::RegressionManifoldSample::from_dataset(ds, 0.5, subset);
  CHECK(some.n() == 4);
  CHECK(some.feature_scale == doctest::Approx(0.5));
  CHECK((some.features.row(2) - ds.features.row(42)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(some.poses[2].x == ds.poses[42].x);
}

TEST_CASE("z_difference wraps only the heading coordinate") {
  const auto& model = affine_model();
  Vec a = Vec::Zero(model.m + 3), b = Vec::Zero(model.m + 3);
  a[0] = 1.0;
  a[model.m + 2] = 3.0;
  b[model.m + 2] = -3.0;
  const Vec d = model.z_difference(a, b);
  CHECK(d[0] == doctest::Approx(1.0));
  CHECK(d[model.m + 2] == doctest::Approx(wrap_angle(6.0)));
}

TEST_CASE("fitting an affine manifold reproduces every map exactly") {
  const auto& w = affine_world();
  const auto& model = affine_model();
  const int n = w.sample.n();

  SUBCASE("embedding reproduces stored coordinates at anchors") {
    for (int i = 0; i < n; i += 7) {
      const Vec y = model.embed_stacked(w.sample.stacked(i));
      CHECK((y - model.y_points.col(i)).norm() < 1e-10);
    }
  }

  SUBCASE("round trips are exact at anchors and between them") {
    double worst = 0.0;
    Rng rng(7);
    for (int t = 0; t < 60; ++t) {
      const Pose p{rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), rng.uniform(-0.45, 0.45)};
      const Vec z = w.stacked_at(p);
      const Vec back = stack_point(w.sample, model.recover(model.embed_stacked(z)));
      worst = std::max(worst, (back - z).norm() / z.norm());
    }
    CHECK(worst < 1e-8);
  }

  SUBCASE("recovery jacobian is constant and matches the generating map") {
    const Mat j0 = model.recovery_jacobian(model.y_points.col(0));
    for (int i = 1; i < n; i += 23) {
      const Mat ji = model.recovery_jacobian(model.y_points.col(i));
      CHECK((ji - j0).norm() / j0.norm() < 1e-8);
    }
    // d(features)/d(pose) must equal the affine matrix: J_w * J_theta^{-1} = A.
    const Mat composed = j0.topRows(model.m) * j0.bottomRows(3).inverse();
    CHECK((composed - w.a).norm() / w.a.norm() < 1e-8);
  }

  SUBCASE("aligned frames stay orthonormal") {
    for (int i = 0; i < n; i += 11) {
      const Mat& f = model.frames[static_cast<size_t>(i)];
      CHECK((f.transpose() * f - Mat::Identity(model.q, model.q)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("feature tangent projector is an exact rank-q projector onto span(A)") {
    Rng rng(19);
    for (int t = 0; t < 5; ++t) {
      const Pose p{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.4, 0.4)};
      const Mat proj = model.tangent_projection(w.features_at(p));
      CHECK((proj - proj.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((proj * proj - proj).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(proj.trace() == doctest::Approx(model.q).epsilon(1e-8));
      CHECK((proj * w.a - w.a).norm() / w.a.norm() < 1e-8);
    }
  }
}

TEST_CASE("refitting the same sample is bitwise reproducible") {
  const auto first = tbml::fit_tangent_bundle(affine_world().sample, 12, {});
  const auto second = tbml::fit_tangent_bundle(affine_world().sample, 12, {});
  CHECK(first.to_bytes() == second.to_bytes());
  CHECK(first.to_bytes() == affine_model().to_bytes());
}

TEST_CASE("fitted chart on a rendered scene reconstructs held-out points") {
  const auto& ds = fixtures::small_dataset();
  const auto& split = fixtures::small_split();
  const auto sample = tbml::RegressionManifoldSample::from_dataset(ds, 0.0, split.train);
  tbml::TbmlOptions options;
  options.bandwidth_factor = 0.4;
  const auto model = tbml::fit_tangent_bundle(sample, 12, options);

  std::vector<double> errors;
  int skipped = 0;
  const auto held = tbml::RegressionManifoldSample::from_dataset(ds, 0.0, split.test);
  for (int i = 0; i < held.n(); ++i) {
    const Vec z = held.stacked(i);
    try {
      const Vec back = stack_point(held, model.recover(model.embed_stacked(z)));
      Vec diff = back - z;
      diff[model.m + 2] = wrap_angle(diff[model.m + 2]);
      errors.push_back(diff.norm() / z.norm());
    } catch (const OutOfSupportError&) {
      ++skipped;
    }
  }
  REQUIRE(errors.size() > held.n() / 2U);
  CHECK(fixtures::median_of(errors) < 0.05);
  CHECK(skipped < held.n() / 3);
}

TEST_CASE("recovery jacobian agrees with central finite differences") {
  const auto& ds = fixtures::small_dataset();
  const auto& split = fixtures::small_split();
  const auto sample = tbml::RegressionManifoldSample::from_dataset(ds, 0.0, split.train);
  tbml::TbmlOptions options;
  options.bandwidth_factor = 0.4;
  const auto model = tbml::fit_tangent_bundle(sample, 12, options);

  const double step = 1e-5;
  int checked = 0;
  for (int i = 0; i < model.n && checked < 12; i += 17, ++checked) {
    const Vec y = model.y_points.col(i);
    const Mat jac = model.recovery_jacobian(y);
    Mat fd(model.m + 3, model.q);
    bool ok = true;
    for (int c = 0; c < model.q; ++c) {
      Vec hi = y, lo = y;
      hi[c] += step;
      lo[c] -= step;
      try {
        const RegressionPoint ph = model.recover(hi);
        const RegressionPoint pl = model.recover(lo);
        fd.col(c).head(model.m) = (ph.features - pl.features) / (2.0 * step);
        fd.col(c).tail(3) = pose_delta(ph.pose, pl.pose) / (2.0 * step);
      } catch (const OutOfSupportError&) {
        ok = false;
      }
    }
    if (!ok) continue;
    CHECK((jac - fd).norm() / fd.norm() < 1e-4);
  }
  CHECK(checked >= 10);
}

TEST_CASE("queries beyond the support radius raise extrapolation errors") {
  const auto& w = affine_world();
  const auto& model = affine_model();

  RegressionPoint far;
  far.features = w.features_at({40.0, 40.0, 0.0});
  far.pose = {40.0, 40.0, 0.0};
  try {
    model.embed(far);
    CHECK(false);
  } catch (const ExtrapolationError& e) {
    CHECK(e.nearest_distance > model.cutoff_z);
  }

  try {
    model.recover(Vec::Constant(model.q, 1e4));
    CHECK(false);
  } catch (const ExtrapolationError& e) {
    CHECK(e.nearest_distance > model.cutoff_y);
  }

  CHECK_THROWS_AS(model.embed_stacked(Vec::Zero(2)), ValidationError);
  CHECK_THROWS_AS(model.recover(Vec::Zero(model.q + 1)), ValidationError);
}

TEST_CASE("fit rejects samples that are too small or fall apart") {
  tbml::RegressionManifoldSample tiny;
  tiny.features.resize(5, 4);
  tiny.features.setRandom();
  tiny.poses = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0}};
  tiny.feature_scale = 0.5;
  CHECK_THROWS_AS(tbml::fit_tangent_bundle(tiny, 8, {}), ValidationError);

  // Two far-apart affine patches cannot form one connected chart at small k.
  const auto& w = affine_world();
  tbml::RegressionManifoldSample split_sample = w.sample;
  const int n = split_sample.n();
  for (int i = n / 2; i < n; ++i) {
    split_sample.poses[static_cast<size_t>(i)].x += 500.0;
    split_sample.features.row(i).array() += 500.0;
  }
  CHECK_THROWS_AS(tbml::fit_tangent_bundle(split_sample, 4, {}), DisconnectedGraphError);
}

TEST_CASE("hausdorff_estimate matches a hand-computed case and its axioms") {
  Mat a(2, 2), b(1, 2);
  a << 0, 0, 1, 0;
  b << 0, 0.5;
  const double expected = std::sqrt(1.0 + 0.25);
  CHECK(tbml::hausdorff_estimate(a, b) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(tbml::hausdorff_estimate(b, a) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(tbml::hausdorff_estimate(a, a) == doctest::Approx(0.0));
}
