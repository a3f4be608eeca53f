#include "mloc/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

namespace mloc {

namespace {
constexpr double kRankTolerance = 1e-10;
constexpr double kSignTolerance = 1e-12;
}  // namespace

Mat pseudo_inverse(const Mat& h) {
  if (h.size() == 0) throw ValidationError("pseudo_inverse: empty matrix");
  if (!h.allFinite()) throw ValidationError("pseudo_inverse: non-finite input");
  Eigen::JacobiSVD<Mat> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double tol = kRankTolerance * (s.size() > 0 ? s[0] : 0.0);
  Vec inv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = s[i] > tol ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

void fix_column_signs(Mat& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      double v = m(r, c);
      if (std::abs(v) > kSignTolerance) {
        if (v < 0.0) m.col(c) = -m.col(c);
        break;
      }
    }
  }
}

Mat orthonormal_columns(const Mat& m, int q, const char* context) {
  if (q < 1) throw ValidationError(std::string(context) + ": q must be >= 1");
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > kRankTolerance * smax && s[i] > 0.0) ++rank;
  if (rank < q)
    throw DegenerateNeighborhoodError(
        std::string(context) + ": rank " + std::to_string(rank) + " below required " +
            std::to_string(q),
        rank);
  Mat basis = svd.matrixU().leftCols(q);
  fix_column_signs(basis);
  return basis;
}

TangentFrame local_pca(const std::vector<Vec>& points, const Vec& center,
                       const Vec& weights, int q) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n == 0) throw ValidationError("local_pca: no points");
  if (weights.size() != n) throw ValidationError("local_pca: weight count mismatch");
  const Eigen::Index dim = center.size();
  int positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (points[i].size() != dim) throw ValidationError("local_pca: dimension mismatch");
    if (!points[i].allFinite()) throw ValidationError("local_pca: non-finite point");
    if (weights[i] < 0.0 || !std::isfinite(weights[i]))
      throw ValidationError("local_pca: weights must be non-negative and finite");
    if (weights[i] > 0.0) ++positive;
  }
  if (q < 1) throw ValidationError("local_pca: q must be >= 1");
  if (positive < q)
    throw ValidationError("local_pca: needs at least q points with positive weight");

  Mat centered(dim, positive);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] > 0.0)
      centered.col(col++) = std::sqrt(weights[i]) * (points[i] - center);
  }
  TangentFrame frame;
  frame.basis = orthonormal_columns(centered, q, "local_pca");
  return frame;
}

Vec principal_angles(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError("principal_angles: frame shapes differ");
  if (a.cols() < 1) throw ValidationError("principal_angles: empty frames");
  // Tolerance admits frames that round-tripped through float32 storage.
  auto check_orthonormal = [](const Mat& f, const char* name) {
    Mat g = f.transpose() * f - Mat::Identity(f.cols(), f.cols());
    if (g.cwiseAbs().maxCoeff() > 1e-6)
      throw ValidationError(std::string("principal_angles: frame ") + name +
                            " is not orthonormal");
  };
  check_orthonormal(a, "a");
  check_orthonormal(b, "b");
  Eigen::JacobiSVD<Mat> svd(a.transpose() * b);
  Vec angles(a.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    double c = std::min(1.0, std::max(0.0, svd.singularValues()[i]));
    angles[i] = std::acos(c);
  }
  // Singular values are descending, so angles come out ascending already.
  return angles;
}

double grassmann_distance(const Mat& a, const Mat& b) {
  return std::sqrt(principal_angles(a, b).squaredNorm());
}

double gaussian_weight(double distance, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw ValidationError("gaussian_weight: bandwidth must be positive");
  if (distance < 0.0 || !std::isfinite(distance))
    throw ValidationError("gaussian_weight: distance must be non-negative");
  return std::exp(-distance * distance / (2.0 * bandwidth * bandwidth));
}

}  // namespace mloc
