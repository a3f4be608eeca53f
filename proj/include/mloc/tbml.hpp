#pragma once

#include <cstdint>
#include <vector>

#include "mloc/appearance.hpp"
#include "mloc/types.hpp"

namespace mloc::tbml {

// Training sample on the joint feature/pose manifold. Stacked vectors are
// [feature_scale * w; x; y; heading]; heading differences are always wrapped.
struct RegressionManifoldSample {
  Mat features;  // n x m, unscaled
  std::vector<Pose> poses;
  double feature_scale = 0.0;
  int q = 3;  // intrinsic dimension; 2 when heading is excluded

  int n() const { return static_cast<int>(features.rows()); }
  int m() const { return static_cast<int>(features.cols()); }
  Vec stacked(int i) const;

  // feature_scale <= 0 selects the default 1/sqrt(m). Empty indices means
  // all rows.
  static RegressionManifoldSample from_dataset(const appearance::LabeledDataset& ds,
                                               double feature_scale = 0.0,
                                               const std::vector<int>& indices = {});
};

struct TbmlOptions {
  double bandwidth_factor = 1.0;  // scales per-anchor kernel bandwidths
  double cutoff_factor = 3.0;     // cutoff radius in median nearest-neighbor units
};

// Fitted atlas: per-anchor tangent frames aligned along a spanning tree, a
// global least-squares embedding, and local affine maps in both directions.
class TangentBundleModel {
 public:
  int q = 3;
  int m = 0;
  int n = 0;
  int k = 0;
  double feature_scale = 0.0;
  double cutoff_z = 0.0;  // embed() support radius in stacked space
  double cutoff_y = 0.0;  // recover() support radius in embedding space
  TbmlOptions options;

  Mat z_points;       // (m+3) x n stacked training points
  Mat y_points;       // q x n embedding coordinates
  Mat anchor_feats;   // m x n unscaled anchor features
  std::vector<Mat> frames;       // (m+3) x q aligned orthonormal bases
  std::vector<Mat> tangent_to_y; // q x q: tangent coords -> embedding deltas
  std::vector<Mat> y_to_z;       // (m+3) x q: embedding deltas -> stacked deltas
  std::vector<Mat> feature_bases;// m x q orthonormal feature-tangent bases
  Vec bandwidth_z;    // per-anchor kernel bandwidths, stacked space
  Vec bandwidth_y;    // per-anchor kernel bandwidths, embedding space

  // Difference in stacked coordinates with the heading entry wrapped.
  Vec z_difference(const Vec& a, const Vec& b) const;

  // Kernel-weighted first-order chart. Reproduces stored y exactly at
  // training points; throws ExtrapolationError beyond cutoff_z.
  Vec embed(const RegressionPoint& point) const;
  Vec embed_stacked(const Vec& z) const;

  // Inverse chart g: embedding -> (features, pose); heading re-wrapped.
  RegressionPoint recover(const Vec& y) const;

  // Analytic derivative of recover (unscaled feature rows), (m+3) x q.
  Mat recovery_jacobian(const Vec& y) const;
  Mat feature_jacobian(const Vec& y) const;  // top m rows
  Mat pose_jacobian(const Vec& y) const;     // bottom 3 rows

  // Projector onto the feature-space tangent at w, estimated from nearby
  // anchors' frame feature blocks. m x m, symmetric, idempotent, rank q.
  Mat tangent_projection(const Vec& w) const;

  // Bitwise-stable serialization for determinism checks.
  std::string to_bytes() const;

 private:
  struct RecoverTerms;
  RecoverTerms recover_terms(const Vec& y) const;
};

TangentBundleModel fit_tangent_bundle(const RegressionManifoldSample& sample, int k,
                                      const TbmlOptions& options = {});

// Symmetric Hausdorff distance between two point sets (rows).
double hausdorff_estimate(const Mat& a, const Mat& b);

}  // namespace mloc::tbml
