#include "mloc/dimest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "mloc/knn.hpp"

namespace mloc::dimest {

const char* dim_method_name(DimMethod method) {
  switch (method) {
    case DimMethod::global: return "global";
    case DimMethod::local: return "local";
    case DimMethod::pointwise: return "pointwise";
  }
  throw ValidationError("dim_method_name: unknown method");
}

nlohmann::json DimEstimate::to_json() const {
  return {{"method", dim_method_name(method)},
          {"value", value},
          {"rounded", rounded},
          {"diagnostics", diagnostics}};
}

namespace {

std::vector<Vec> to_rows(const Mat& points) {
  if (points.rows() < 1 || points.cols() < 1)
    throw ValidationError("dimension estimate: empty point set");
  if (!points.allFinite())
    throw ValidationError("dimension estimate: non-finite points");
  std::vector<Vec> rows;
  rows.reserve(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    rows.push_back(points.row(i).transpose());
  return rows;
}

// Dijkstra over the weighted neighbor graph from one source.
void shortest_paths(const NeighborGraph& graph, int source, Vec& out) {
  const int n = graph.size();
  out.setConstant(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  out[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > out[u]) continue;
    for (const Neighbor& nb : graph.adjacency[u]) {
      double nd = d + nb.distance;
      if (nd < out[nb.index]) {
        out[nb.index] = nd;
        heap.emplace(nd, nb.index);
      }
    }
  }
}

std::vector<double> pairwise_distances_sorted(const Mat& points) {
  const Eigen::Index n = points.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dists.push_back((points.row(i) - points.row(j)).norm());
  std::sort(dists.begin(), dists.end());
  return dists;
}

}  // namespace

DimEstimate global_isomap_dim(const Mat& points, int k, double threshold) {
  if (points.rows() < 20)
    throw ValidationError("global_isomap_dim: needs at least 20 points");
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw ValidationError("global_isomap_dim: threshold must lie in (0, 1)");
  const int n = static_cast<int>(points.rows());
  NeighborGraph graph = knn_graph(to_rows(points), k);

  std::vector<int> sizes;
  connected_components(graph, &sizes);
  if (sizes.size() > 1) {
    std::string msg = "global_isomap_dim: neighbor graph disconnected, component sizes";
    for (int s : sizes) msg += " " + std::to_string(s);
    throw DisconnectedGraphError(msg, sizes);
  }

  Mat geo(n, n);
  Vec row;
  for (int i = 0; i < n; ++i) {
    shortest_paths(graph, i, row);
    geo.row(i) = row.transpose();
  }
  geo = 0.5 * (geo + geo.transpose());  // Dijkstra asymmetry is pure roundoff

  // Classical scaling of squared geodesics.
  Mat d2 = geo.array().square();
  Vec row_mean = d2.rowwise().mean();
  double total_mean = row_mean.mean();
  Mat b = -0.5 * d2;
  b.colwise() += 0.5 * row_mean;
  b.rowwise() += 0.5 * row_mean.transpose();
  b.array() -= 0.5 * total_mean;

  Eigen::SelfAdjointEigenSolver<Mat> eig(b);
  if (eig.info() != Eigen::Success)
    throw NumericalError("global_isomap_dim: eigensolver failed");
  Vec lambda = eig.eigenvalues().reverse();  // descending

  double positive_sum = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > 0.0) positive_sum += lambda[i];
  if (!(positive_sum > 0.0))
    throw NumericalError("global_isomap_dim: no positive spectrum");

  const int max_d = std::min<int>(n - 1, 25);
  std::vector<double> residuals;
  int dim = max_d;
  double cumulative = 0.0;
  bool found = false;
  for (int d = 1; d <= max_d; ++d) {
    cumulative += std::max(0.0, lambda[d - 1]);
    double residual = 1.0 - cumulative / positive_sum;
    residuals.push_back(residual);
    if (!found && residual < threshold) {
      dim = d;
      found = true;
    }
  }
  if (!found)
    throw NumericalError("global_isomap_dim: residual variance never fell below threshold");

  DimEstimate est;
  est.method = DimMethod::global;
  est.value = dim;
  est.rounded = dim;
  std::vector<double> spectrum(lambda.data(), lambda.data() + std::min<int>(20, n));
  est.diagnostics = {{"residuals", residuals},
                     {"eigenvalues", spectrum},
                     {"threshold", threshold},
                     {"k", k}};
  return est;
}

DimEstimate correlation_dim(const Mat& points, std::vector<double> r_grid,
                            double count_lo, double count_hi) {
  if (points.rows() < 50)
    throw ValidationError("correlation_dim: needs at least 50 points");
  if (!(count_lo > 0.0) || !(count_hi > count_lo) || !(count_hi < 1.0))
    throw ValidationError("correlation_dim: bad count window");
  to_rows(points);  // finite check
  const auto n = static_cast<double>(points.rows());
  std::vector<double> dists = pairwise_distances_sorted(points);
  const double total_pairs = n * (n - 1.0) / 2.0;

  if (r_grid.empty()) {
    double lo = 0.0;
    for (double d : dists)
      if (d > 0.0) {
        lo = d;
        break;
      }
    double hi = dists.back();
    if (!(lo > 0.0) || !(hi > lo))
      throw InsufficientScaleError("correlation_dim: degenerate distance range");
    const int grid_n = 64;
    for (int i = 0; i < grid_n; ++i)
      r_grid.push_back(lo * std::pow(hi / lo, (i + 1.0) / grid_n));
  }

  std::vector<double> log_r, log_c, counts;
  for (double r : r_grid) {
    if (!(r > 0.0)) throw ValidationError("correlation_dim: radii must be positive");
    auto it = std::lower_bound(dists.begin(), dists.end(), r);
    double c = static_cast<double>(it - dists.begin()) / total_pairs;
    counts.push_back(c);
    if (c >= count_lo && c <= count_hi) {
      log_r.push_back(std::log(r));
      log_c.push_back(std::log(c));
    }
  }
  if (log_r.size() < 3)
    throw InsufficientScaleError(
        "correlation_dim: fewer than 3 radii fall in the usable count window");

  const auto used = static_cast<double>(log_r.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < log_r.size(); ++i) {
    mx += log_r[i];
    my += log_c[i];
  }
  mx /= used;
  my /= used;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < log_r.size(); ++i) {
    sxy += (log_r[i] - mx) * (log_c[i] - my);
    sxx += (log_r[i] - mx) * (log_r[i] - mx);
  }
  if (!(sxx > 0.0))
    throw InsufficientScaleError("correlation_dim: zero spread in usable radii");
  const double slope = sxy / sxx;

  DimEstimate est;
  est.method = DimMethod::local;
  est.value = slope;
  est.rounded = std::max(1, static_cast<int>(std::lround(slope)));
  est.diagnostics = {{"radii", r_grid},
                     {"counts", counts},
                     {"count_window", {count_lo, count_hi}},
                     {"points_used", log_r.size()}};
  return est;
}

DimEstimate mle_dim(const Mat& points, int k) {
  const int n = static_cast<int>(points.rows());
  if (k < 3) throw ValidationError("mle_dim: k must be >= 3");
  if (n <= k) throw ValidationError("mle_dim: needs more than k points");
  to_rows(points);  // finite check

  std::vector<double> per_point;
  per_point.reserve(n);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((points.row(i) - points.row(j)).norm(), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int j = 0; j < k; ++j)
      if (!(cand[j].first > 0.0))
        throw DegenerateDistanceError("mle_dim: duplicate points " + std::to_string(i) +
                                          " and " + std::to_string(cand[j].second),
                                      i, cand[j].second);
    const double tk = cand[k - 1].first;
    double acc = 0.0;
    for (int j = 0; j < k - 1; ++j) acc += std::log(tk / cand[j].first);
    acc /= (k - 1);
    if (!(acc > 0.0))
      throw NumericalError("mle_dim: degenerate distance ratios at point " +
                           std::to_string(i));
    per_point.push_back(1.0 / acc);
  }

  double mean = 0.0;
  for (double v : per_point) mean += v;
  mean /= per_point.size();

  DimEstimate est;
  est.method = DimMethod::pointwise;
  est.value = mean;
  est.rounded = std::max(1, static_cast<int>(std::lround(mean)));
  est.diagnostics = {{"k", k}, {"per_point", per_point}};
  return est;
}

}  // namespace mloc::dimest
