#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mloc/knn.hpp"
#include "mloc/linalg.hpp"
#include "mloc/motion.hpp"
#include "mloc/rng.hpp"
#include "mloc/types.hpp"

using namespace mloc;

TEST_CASE("wrap_angle maps onto [-pi, pi) and is 2*pi periodic") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_angle(-3.5 * kPi) == doctest::Approx(0.5 * kPi));
  for (double a : {-9.7, -3.2, -0.4, 0.0, 1.1, 2.9, 14.8}) {
    const double w = wrap_angle(a);
    CHECK(w >= -kPi);
    CHECK(w < kPi);
    CHECK(wrap_angle(w) == doctest::Approx(w).epsilon(1e-14));
    CHECK(wrap_angle(a + 4.0 * kTwoPi) == doctest::Approx(w).epsilon(1e-12));
    CHECK(std::abs(wrap_angle(a) - (a - kTwoPi * std::round(a / kTwoPi))) < 1e-12);
  }
}

TEST_CASE("pose_delta wraps only the heading component") {
  const Pose a{1.0, 2.0, 3.0};
  const Pose b{-1.0, 0.5, -3.0};
  const Eigen::Vector3d d = pose_delta(a, b);
  CHECK(d[0] == doctest::Approx(2.0));
  CHECK(d[1] == doctest::Approx(1.5));
  CHECK(d[2] == doctest::Approx(wrap_angle(6.0)));
}

TEST_CASE("Rng is deterministic and produces sane distributions") {
  Rng a(123), b(123), c(124);
  bool identical = true, differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    identical = identical && (va == b.next_u64());
    differs = differs || (va != c.next_u64());
  }
  CHECK(identical);
  CHECK(differs);

  Rng r(5);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.05));

  Rng g(9);
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.normal();
    mean += x;
    var += x * x;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(mean == doctest::Approx(0.0).epsilon(1.0));  // epsilon is relative; use abs below
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));

  Rng ui(11);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    const int v = ui.uniform_int(-2, 3);
    CHECK(v >= -2);
    CHECK(v <= 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("derive_seed decorrelates sibling streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  // Consecutive master seeds with the same stream must not collide.
  std::set<std::uint64_t> values;
  for (std::uint64_t s = 0; s < 100; ++s)
    for (std::uint64_t stream = 0; stream < 4; ++stream) values.insert(derive_seed(s, stream));
  CHECK(values.size() == 400);
}

namespace {

void check_penrose(const Mat& a, double tol) {
  const Mat p = pseudo_inverse(a);
  CHECK((a * p * a - a).norm() < tol);
  CHECK((p * a * p - p).norm() < tol);
  CHECK(((a * p) - (a * p).transpose()).norm() < tol);
  CHECK(((p * a) - (p * a).transpose()).norm() < tol);
}

}  // namespace

TEST_CASE("pseudo_inverse satisfies the four Penrose conditions") {
  Rng rng(17);
  Mat a(8, 5);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
  check_penrose(a, 1e-10);

  // Rank-deficient: last two columns are combinations of the first three.
  Mat low = a;
  low.col(3) = a.col(0) - 2.0 * a.col(1);
  low.col(4) = 0.5 * a.col(2);
  check_penrose(low, 1e-10);

  // Square invertible: pseudo-inverse equals the inverse.
  Mat sq(3, 3);
  sq << 2, 0, 1, 0, 3, -1, 1, 1, 4;
  CHECK((pseudo_inverse(sq) - sq.inverse()).norm() < 1e-12);

  CHECK_THROWS_AS(pseudo_inverse(Mat()), ValidationError);
}

TEST_CASE("fix_column_signs makes the leading significant entry positive and is idempotent") {
  Mat m(3, 3);
  m << -1, 0, 1e-14, 2, -3, -2, 0, 1, 5;
  Mat once = m;
  fix_column_signs(once);
  CHECK(once(0, 0) == doctest::Approx(1.0));
  CHECK(once(1, 1) == doctest::Approx(3.0));
  // Column 2's first entry is below the significance threshold; the next one rules.
  CHECK(once(1, 2) == doctest::Approx(2.0));
  Mat twice = once;
  fix_column_signs(twice);
  CHECK((twice - once).norm() == 0.0);
}

TEST_CASE("orthonormal_columns returns an orthonormal basis and reports rank deficits") {
  Rng rng(3);
  Mat m(6, 4);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  const Mat basis = orthonormal_columns(m, 3, "test");
  CHECK((basis.transpose() * basis - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  Mat rank1 = Mat::Zero(6, 4);
  rank1.col(0).setOnes();
  rank1.col(1) = 2.0 * rank1.col(0);
  try {
    orthonormal_columns(rank1, 2, "test");
    CHECK(false);
  } catch (const DegenerateNeighborhoodError& e) {
    CHECK(e.achieved_rank == 1);
  }
}

TEST_CASE("local_pca recovers a known plane and respects weights") {
  // Points on the span of e1, e3 inside R^4, plus one heavy outlier with zero weight.
  std::vector<Vec> pts;
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    Vec p = Vec::Zero(4);
    p[0] = rng.normal();
    p[2] = rng.normal();
    pts.push_back(p);
  }
  Vec outlier = Vec::Zero(4);
  outlier[1] = 100.0;
  pts.push_back(outlier);
  Vec w = Vec::Ones(static_cast<Eigen::Index>(pts.size()));
  w[w.size() - 1] = 0.0;

  const TangentFrame frame = local_pca(pts, Vec::Zero(4), w, 2);
  Mat truth = Mat::Zero(4, 2);
  truth(0, 0) = 1.0;
  truth(2, 1) = 1.0;
  // acos saturates near zero angle: cos = 1 - O(eps) gives angle O(sqrt(eps)).
  const Vec angles = principal_angles(frame.basis, truth);
  CHECK(angles.maxCoeff() < 1e-6);

  Vec too_few = Vec::Zero(static_cast<Eigen::Index>(pts.size()));
  too_few[0] = 1.0;
  CHECK_THROWS_AS(local_pca(pts, Vec::Zero(4), too_few, 2), ValidationError);
}

TEST_CASE("principal_angles matches the analytic rotation case") {
  Mat a = Mat::Zero(4, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  const double alpha = 0.3;
  Mat b = Mat::Zero(4, 2);
  b(0, 0) = 1.0;
  b(1, 1) = std::cos(alpha);
  b(2, 1) = std::sin(alpha);
  const Vec angles = principal_angles(a, b);
  CHECK(angles[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(angles[1] == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(grassmann_distance(a, b) == doctest::Approx(alpha).epsilon(1e-12));

  Mat c = Mat::Zero(4, 2);
  c(2, 0) = 1.0;
  c(3, 1) = 1.0;
  CHECK(principal_angles(a, c).minCoeff() == doctest::Approx(kPi / 2).epsilon(1e-12));

  Mat skew = a;
  skew(0, 1) = 0.5;  // not orthonormal
  CHECK_THROWS_AS(principal_angles(skew, a), ValidationError);
}

TEST_CASE("gaussian_weight matches its closed form and validates inputs") {
  CHECK(gaussian_weight(0.0, 2.0) == doctest::Approx(1.0));
  CHECK(gaussian_weight(1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(gaussian_weight(3.0, 2.0) == doctest::Approx(std::exp(-9.0 / 8.0)).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_weight(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(gaussian_weight(-1.0, 1.0), ValidationError);
}

namespace {

// Reference kNN by full sort, before symmetric closure.
std::vector<std::set<int>> brute_knn(const std::vector<Vec>& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::vector<std::set<int>> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < n; ++j)
      if (j != i) d.emplace_back((pts[static_cast<size_t>(i)] - pts[static_cast<size_t>(j)]).norm(), j);
    std::sort(d.begin(), d.end());
    for (int t = 0; t < k; ++t) out[static_cast<size_t>(i)].insert(d[static_cast<size_t>(t)].second);
  }
  return out;
}

}  // namespace

TEST_CASE("knn_graph equals a brute-force oracle plus symmetric closure") {
  Rng rng(21);
  std::vector<Vec> pts;
  for (int i = 0; i < 40; ++i) {
    Vec p(3);
    p << rng.normal(), rng.normal(), rng.normal();
    pts.push_back(p);
  }
  const int k = 5;
  const NeighborGraph graph = knn_graph(pts, k);
  const auto reference = brute_knn(pts, k);

  // Expected closure: union of "i chose j" and "j chose i".
  for (int i = 0; i < graph.size(); ++i) {
    std::set<int> expected = reference[static_cast<size_t>(i)];
    for (int j = 0; j < graph.size(); ++j)
      if (reference[static_cast<size_t>(j)].count(i)) expected.insert(j);
    std::set<int> got;
    double prev = -1.0;
    for (const Neighbor& nb : graph.adjacency[static_cast<size_t>(i)]) {
      got.insert(nb.index);
      CHECK(nb.index != i);
      CHECK(nb.distance >= prev);
      prev = nb.distance;
      CHECK(nb.distance ==
            doctest::Approx((pts[static_cast<size_t>(i)] - pts[static_cast<size_t>(nb.index)]).norm()));
    }
    CHECK(got == expected);
  }

  // Symmetry of the closed graph.
  for (int i = 0; i < graph.size(); ++i)
    for (const Neighbor& nb : graph.adjacency[static_cast<size_t>(i)]) {
      bool back = false;
      for (const Neighbor& rev : graph.adjacency[static_cast<size_t>(nb.index)])
        back = back || rev.index == i;
      CHECK(back);
    }

  // Metric form with the Euclidean metric gives the identical graph.
  const NeighborGraph metric = knn_graph_metric(
      static_cast<int>(pts.size()), k,
      [&pts](int i, int j) { return (pts[static_cast<size_t>(i)] - pts[static_cast<size_t>(j)]).norm(); });
  REQUIRE(metric.size() == graph.size());
  for (int i = 0; i < graph.size(); ++i) {
    REQUIRE(metric.adjacency[static_cast<size_t>(i)].size() == graph.adjacency[static_cast<size_t>(i)].size());
    for (size_t t = 0; t < graph.adjacency[static_cast<size_t>(i)].size(); ++t)
      CHECK(metric.adjacency[static_cast<size_t>(i)][t].index ==
            graph.adjacency[static_cast<size_t>(i)][t].index);
  }

  CHECK_THROWS_AS(knn_graph(pts, 0), ValidationError);
  CHECK_THROWS_AS(knn_graph(pts, static_cast<int>(pts.size())), ValidationError);
}

TEST_CASE("knn_graph breaks distance ties toward the lower index") {
  // Four collinear points, equally spaced: point 1's single neighbor could be 0 or 2.
  std::vector<Vec> pts;
  for (int i = 0; i < 4; ++i) {
    Vec p(1);
    p << static_cast<double>(i);
    pts.push_back(p);
  }
  const NeighborGraph g = knn_graph(pts, 1);
  CHECK(g.adjacency[1][0].index == 0);
  CHECK(g.adjacency[2][0].index == 1);
}

TEST_CASE("connected_components labels separated clusters") {
  std::vector<Vec> pts;
  for (int i = 0; i < 10; ++i) {
    Vec p(2);
    p << 0.1 * i, 0.0;
    pts.push_back(p);
  }
  for (int i = 0; i < 7; ++i) {
    Vec p(2);
    p << 100.0 + 0.1 * i, 0.0;
    pts.push_back(p);
  }
  const NeighborGraph g = knn_graph(pts, 2);
  std::vector<int> sizes;
  const std::vector<int> labels = connected_components(g, &sizes);
  REQUIRE(sizes.size() == 2);
  CHECK(sizes[0] == 10);
  CHECK(sizes[1] == 7);
  for (int i = 0; i < 10; ++i) CHECK(labels[static_cast<size_t>(i)] == 0);
  for (int i = 10; i < 17; ++i) CHECK(labels[static_cast<size_t>(i)] == 1);
}

TEST_CASE("motion_step holds still on zero controls and integrates straight lines") {
  localize::MotionModel model;
  model.dt = 0.25;
  const Pose start{0.4, -0.2, 1.1};
  const Pose same = localize::motion_step(model, start, {0.0, 0.0});
  CHECK(same.x == doctest::Approx(start.x));
  CHECK(same.y == doctest::Approx(start.y));
  CHECK(same.heading == doctest::Approx(start.heading));

  localize::MotionModel unit;
  unit.dt = 1.0;
  const Pose fwd = localize::motion_step(unit, {0.0, 0.0, 0.0}, {1.0, 0.0});
  CHECK(fwd.x == doctest::Approx(1.0));
  CHECK(fwd.y == doctest::Approx(0.0));
  CHECK(fwd.heading == doctest::Approx(0.0));
}

TEST_CASE("motion_step closes a full circle exactly under the arc formulas") {
  localize::MotionModel model;
  model.dt = 0.1;
  const int steps = 100;
  const double omega = kTwoPi / (model.dt * steps);
  Pose p{0.3, -0.7, 0.9};
  for (int i = 0; i < steps; ++i) p = localize::motion_step(model, p, {1.3, omega});
  CHECK(std::abs(p.x - 0.3) < 1e-9);
  CHECK(std::abs(p.y + 0.7) < 1e-9);
  CHECK(std::abs(wrap_angle(p.heading - 0.9)) < 1e-9);
}

TEST_CASE("motion_jacobian agrees with central finite differences") {
  localize::MotionModel model;
  model.dt = 0.1;
  const localize::Control u{0.8, 0.6};
  const Pose pose{0.2, 0.5, -1.2};
  const Eigen::Matrix3d j = localize::motion_jacobian(model, pose, u);
  const double eps = 1e-6;
  Eigen::Matrix3d fd;
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d hi = pose.to_vector(), lo = pose.to_vector();
    hi[c] += eps;
    lo[c] -= eps;
    const Pose ph = localize::motion_step(model, Pose::from_vector(hi), u);
    const Pose pl = localize::motion_step(model, Pose::from_vector(lo), u);
    fd.col(c) = (ph.to_vector() - pl.to_vector()) / (2.0 * eps);
  }
  CHECK((j - fd).cwiseAbs().maxCoeff() < 1e-8);

  // Straight-line branch.
  const Eigen::Matrix3d js = localize::motion_jacobian(model, pose, {0.8, 0.0});
  CHECK(js(0, 2) == doctest::Approx(-0.8 * std::sin(pose.heading) * model.dt).epsilon(1e-12));
  CHECK(js(1, 2) == doctest::Approx(0.8 * std::cos(pose.heading) * model.dt).epsilon(1e-12));
}
