#pragma once

#include "mloc/types.hpp"

namespace mloc {

// Moore-Penrose pseudo-inverse via SVD; singular values below
// 1e-10 * sigma_max are treated as zero.
Mat pseudo_inverse(const Mat& h);

// Deterministic sign convention: flips each column so that its first entry
// with magnitude above 1e-12 is positive.
void fix_column_signs(Mat& m);

// Top-q left singular vectors with the sign convention applied. Throws
// DegenerateNeighborhoodError when fewer than q singular values exceed
// 1e-10 * sigma_max.
Mat orthonormal_columns(const Mat& m, int q, const char* context);

// Weighted PCA of (points - center); returns the dominant q-dimensional
// orthonormal basis. Requires at least q points with positive weight.
TangentFrame local_pca(const std::vector<Vec>& points, const Vec& center,
                       const Vec& weights, int q);

// Principal angles between equal-rank orthonormal frames, ascending, in
// [0, pi/2]. Computed from the singular values of a^T b.
Vec principal_angles(const Mat& a, const Mat& b);

// Geodesic Grassmann distance: sqrt(sum of squared principal angles).
double grassmann_distance(const Mat& a, const Mat& b);

// exp(-d^2 / (2 bw^2)); requires d >= 0 and bw > 0.
double gaussian_weight(double distance, double bandwidth);

}  // namespace mloc
