#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "mloc/types.hpp"

namespace mloc::dimest {

enum class DimMethod { global, local, pointwise };

const char* dim_method_name(DimMethod method);

struct DimEstimate {
  DimMethod method;
  double value = 0.0;
  int rounded = 0;
  nlohmann::json diagnostics;
  nlohmann::json to_json() const;
};

// Geodesic-distance spectral estimate: kNN graph, shortest paths, classical
// double-centered scaling; returns the smallest d whose residual variance
// drops below the threshold. Points are rows. Requires n >= 20 and a
// connected graph.
DimEstimate global_isomap_dim(const Mat& points, int k, double threshold = 0.05);

// Pair-counting estimate: slope of log C(r) vs log r, fitted where the pair
// fraction lies in [count_lo, count_hi]. Empty grid means a default 64-point
// log-spaced grid between the smallest nonzero and the largest pairwise
// distance. Requires n >= 50.
DimEstimate correlation_dim(const Mat& points, std::vector<double> r_grid = {},
                            double count_lo = 0.05, double count_hi = 0.5);

// Maximum-likelihood estimate from nearest-neighbor distance ratios,
// averaged over points. Requires 3 <= k < n and no duplicate points.
DimEstimate mle_dim(const Mat& points, int k);

}  // namespace mloc::dimest
