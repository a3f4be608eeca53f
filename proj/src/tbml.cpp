#include "mloc/tbml.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <queue>
#include <string>

#include "mloc/knn.hpp"
#include "mloc/linalg.hpp"

namespace mloc::tbml {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void append_bytes(std::string& out, const void* data, size_t len) {
  out.append(static_cast<const char*>(data), len);
}

void append_matrix(std::string& out, const Mat& m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  append_bytes(out, &rows, sizeof(rows));
  append_bytes(out, &cols, sizeof(cols));
  append_bytes(out, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

}  // namespace

Vec RegressionManifoldSample::stacked(int i) const {
  RegressionPoint point{features.row(i).transpose(), poses[static_cast<size_t>(i)]};
  return point.stacked(feature_scale);
}

RegressionManifoldSample RegressionManifoldSample::from_dataset(
    const appearance::LabeledDataset& ds, double feature_scale,
    const std::vector<int>& indices) {
  ds.validate();
  RegressionManifoldSample sample;
  sample.q = ds.meta.space.intrinsic_dim();
  sample.feature_scale =
      feature_scale > 0.0 ? feature_scale : 1.0 / std::sqrt(static_cast<double>(ds.m()));
  if (indices.empty()) {
    sample.features = ds.features;
    sample.poses = ds.poses;
  } else {
    sample.features.resize(static_cast<Eigen::Index>(indices.size()), ds.m());
    sample.poses.reserve(indices.size());
    for (size_t r = 0; r < indices.size(); ++r) {
      const int i = indices[r];
      if (i < 0 || i >= ds.n())
        throw ValidationError("RegressionManifoldSample: index out of range");
      sample.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(i);
      sample.poses.push_back(ds.poses[static_cast<size_t>(i)]);
    }
  }
  return sample;
}

Vec TangentBundleModel::z_difference(const Vec& a, const Vec& b) const {
  Vec d = a - b;
  d[m + 2] = wrap_angle(a[m + 2] - b[m + 2]);
  return d;
}

TangentBundleModel fit_tangent_bundle(const RegressionManifoldSample& sample, int k,
                                      const TbmlOptions& options) {
  const int n = sample.n();
  const int m = sample.m();
  const int q = sample.q;
  if (q < 2 || q > 3) throw ValidationError("fit_tangent_bundle: q must be 2 or 3");
  if (m < q) throw ValidationError("fit_tangent_bundle: m must be >= q");
  if (!(sample.feature_scale > 0.0))
    throw ValidationError("fit_tangent_bundle: feature_scale must be positive");
  if (k < q + 1) throw ValidationError("fit_tangent_bundle: k must be >= q + 1");
  if (n <= k) throw ValidationError("fit_tangent_bundle: needs more than k points");
  if (!sample.features.allFinite())
    throw ValidationError("fit_tangent_bundle: non-finite features");

  TangentBundleModel model;
  model.q = q;
  model.m = m;
  model.n = n;
  model.k = k;
  model.feature_scale = sample.feature_scale;
  model.options = options;

  const int d = m + 3;
  model.z_points.resize(d, n);
  for (int i = 0; i < n; ++i) model.z_points.col(i) = sample.stacked(i);
  model.anchor_feats = model.z_points.topRows(m) / sample.feature_scale;

  NeighborGraph graph = knn_graph_metric(n, k, [&](int i, int j) {
    return model.z_difference(model.z_points.col(i), model.z_points.col(j)).norm();
  });
  std::vector<int> sizes;
  connected_components(graph, &sizes);
  if (sizes.size() > 1) {
    std::string msg = "fit_tangent_bundle: sample graph disconnected, component sizes";
    for (int s : sizes) msg += " " + std::to_string(s);
    throw DisconnectedGraphError(msg, sizes);
  }

  // Local tangent frames from kernel-weighted PCA of locally unwrapped
  // neighborhoods.
  model.frames.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& nbs = graph.adjacency[i];
    std::vector<Vec> pts;
    pts.reserve(nbs.size());
    std::vector<double> dists;
    dists.reserve(nbs.size());
    for (const Neighbor& nb : nbs) {
      pts.push_back(model.z_points.col(i) +
                    model.z_difference(model.z_points.col(nb.index), model.z_points.col(i)));
      dists.push_back(nb.distance);
    }
    const double bw = median_of(dists);
    if (!(bw > 0.0))
      throw DegenerateNeighborhoodError(
          "fit_tangent_bundle: duplicate neighborhood at point " + std::to_string(i), 0);
    Vec weights(static_cast<Eigen::Index>(dists.size()));
    for (size_t a = 0; a < dists.size(); ++a)
      weights[static_cast<Eigen::Index>(a)] = gaussian_weight(dists[a], bw);
    try {
      TangentFrame frame = local_pca(pts, model.z_points.col(i), weights, q);
      frame.basepoint = i;
      model.frames[i] = frame.basis;
    } catch (const DegenerateNeighborhoodError& e) {
      throw DegenerateNeighborhoodError(
          "fit_tangent_bundle: degenerate neighborhood at point " + std::to_string(i) +
              " (" + e.what() + ")",
          e.achieved_rank);
    }
  }

  // Orient frames consistently along a BFS spanning tree: each child frame is
  // rotated by the orthogonal Procrustes solution onto its parent.
  {
    std::vector<bool> seen(n, false);
    std::queue<int> queue;
    queue.push(0);
    seen[0] = true;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop();
      for (const Neighbor& nb : graph.adjacency[u]) {
        if (seen[nb.index]) continue;
        seen[nb.index] = true;
        Mat overlap = model.frames[nb.index].transpose() * model.frames[u];
        Eigen::JacobiSVD<Mat> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
        model.frames[nb.index] =
            model.frames[nb.index] * (svd.matrixU() * svd.matrixV().transpose());
        queue.push(nb.index);
      }
    }
  }

  // Global least-squares assembly: accumulate per-neighborhood alignment
  // penalties and read the embedding off the bottom nontrivial eigenvectors.
  {
    Mat align = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> hood;
      hood.push_back(i);
      for (const Neighbor& nb : graph.adjacency[i]) hood.push_back(nb.index);
      const auto kk = static_cast<Eigen::Index>(hood.size());
      Mat coords(q, kk);
      for (Eigen::Index a = 0; a < kk; ++a)
        coords.col(a) = model.frames[i].transpose() *
                        model.z_difference(model.z_points.col(hood[static_cast<size_t>(a)]),
                                           model.z_points.col(i));
      Vec mean = coords.rowwise().mean();
      coords.colwise() -= mean;
      Eigen::JacobiSVD<Mat> svd(coords, Eigen::ComputeThinV);
      const Vec& sv = svd.singularValues();
      int rank = 0;
      for (Eigen::Index a = 0; a < sv.size(); ++a)
        if (sv[a] > 1e-10 * sv[0]) ++rank;
      if (rank < q)
        throw DegenerateNeighborhoodError(
            "fit_tangent_bundle: flat local coordinates at point " + std::to_string(i),
            rank);
      Mat g(kk, q + 1);
      g.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(kk)));
      g.rightCols(q) = svd.matrixV().leftCols(q);
      Mat penalty = Mat::Identity(kk, kk) - g * g.transpose();
      for (Eigen::Index a = 0; a < kk; ++a)
        for (Eigen::Index b = 0; b < kk; ++b)
          align(hood[static_cast<size_t>(a)], hood[static_cast<size_t>(b)]) +=
              penalty(a, b);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(align);
    if (eig.info() != Eigen::Success)
      throw NumericalError("fit_tangent_bundle: embedding eigensolver failed");
    Mat y = eig.eigenvectors().block(0, 1, n, q);  // skip the constant mode
    fix_column_signs(y);
    model.y_points = y.transpose();
  }

  // Re-metrize the embedding: eigenvector normalization whitens the
  // coordinates, which distorts scale anisotropically. Solve the single
  // linear map that best carries embedding differences onto the (isometric)
  // local tangent coordinates over all graph edges, and apply it globally.
  {
    Mat cross = Mat::Zero(q, q);
    Mat gram = Mat::Zero(q, q);
    for (int i = 0; i < n; ++i) {
      for (const Neighbor& nb : graph.adjacency[i]) {
        Vec xi = model.frames[i].transpose() *
                 model.z_difference(model.z_points.col(nb.index), model.z_points.col(i));
        Vec eta = model.y_points.col(nb.index) - model.y_points.col(i);
        cross += xi * eta.transpose();
        gram += eta * eta.transpose();
      }
    }
    Eigen::LDLT<Mat> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalError("fit_tangent_bundle: embedding re-metrization failed");
    model.y_points = ldlt.solve(cross.transpose()).transpose() * model.y_points;
  }

  // Local affine maps in both directions, fitted over each neighborhood.
  model.tangent_to_y.resize(n);
  model.y_to_z.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& nbs = graph.adjacency[i];
    const auto kk = static_cast<Eigen::Index>(nbs.size());
    Mat dz(d, kk), dy(q, kk), tang(q, kk);
    for (Eigen::Index a = 0; a < kk; ++a) {
      const int j = nbs[static_cast<size_t>(a)].index;
      dz.col(a) = model.z_difference(model.z_points.col(j), model.z_points.col(i));
      dy.col(a) = model.y_points.col(j) - model.y_points.col(i);
      tang.col(a) = model.frames[i].transpose() * dz.col(a);
    }
    model.tangent_to_y[i] = dy * pseudo_inverse(tang);
    model.y_to_z[i] = dz * pseudo_inverse(dy);
  }

  // Feature-block tangent bases for the projector and kernel frames.
  model.feature_bases.resize(n);
  for (int i = 0; i < n; ++i) {
    try {
      model.feature_bases[i] =
          orthonormal_columns(model.frames[i].topRows(m), q, "feature basis");
    } catch (const DegenerateNeighborhoodError& e) {
      throw DegenerateNeighborhoodError(
          "fit_tangent_bundle: feature tangent degenerate at point " + std::to_string(i),
          e.achieved_rank);
    }
  }

  // Adaptive bandwidths (median neighbor distance per anchor) and support
  // cutoffs (multiple of the median nearest-neighbor distance).
  model.bandwidth_z.resize(n);
  model.bandwidth_y.resize(n);
  std::vector<double> nn_z, nn_y;
  nn_z.reserve(n);
  nn_y.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> dz_dists, dy_dists;
    for (const Neighbor& nb : graph.adjacency[i]) {
      dz_dists.push_back(nb.distance);
      dy_dists.push_back((model.y_points.col(nb.index) - model.y_points.col(i)).norm());
    }
    const double bz = options.bandwidth_factor * median_of(dz_dists);
    const double by = options.bandwidth_factor * median_of(dy_dists);
    if (!(bz > 0.0) || !(by > 0.0))
      throw DegenerateNeighborhoodError(
          "fit_tangent_bundle: zero bandwidth at point " + std::to_string(i), 0);
    model.bandwidth_z[i] = bz;
    model.bandwidth_y[i] = by;
    nn_z.push_back(graph.adjacency[i][0].distance);
    nn_y.push_back(*std::min_element(dy_dists.begin(), dy_dists.end()));
  }
  model.cutoff_z = options.cutoff_factor * median_of(nn_z);
  model.cutoff_y = options.cutoff_factor * median_of(nn_y);
  return model;
}

Vec TangentBundleModel::embed(const RegressionPoint& point) const {
  if (point.m() != m) throw ValidationError("embed: feature length mismatch");
  return embed_stacked(point.stacked(feature_scale));
}

Vec TangentBundleModel::embed_stacked(const Vec& z) const {
  if (z.size() != m + 3) throw ValidationError("embed: stacked length mismatch");
  if (!z.allFinite()) throw ValidationError("embed: non-finite input");

  double dmin = std::numeric_limits<double>::infinity();
  int nearest = 0;
  std::vector<double> dist(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    dist[static_cast<size_t>(i)] = z_difference(z, z_points.col(i)).norm();
    if (dist[static_cast<size_t>(i)] < dmin) {
      dmin = dist[static_cast<size_t>(i)];
      nearest = i;
    }
  }
  if (dmin > cutoff_z)
    throw ExtrapolationError("embed: query beyond support radius (nearest " +
                                 std::to_string(dmin) + ", cutoff " +
                                 std::to_string(cutoff_z) + ")",
                             dmin);
  if (dmin <= 1e-12 * cutoff_z) return y_points.col(nearest);

  Vec num = Vec::Zero(q);
  double den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = gaussian_weight(dist[static_cast<size_t>(i)], bandwidth_z[i]);
    if (w == 0.0) continue;
    Vec tangent = frames[static_cast<size_t>(i)].transpose() *
                  z_difference(z, z_points.col(i));
    num += w * (y_points.col(i) + tangent_to_y[static_cast<size_t>(i)] * tangent);
    den += w;
  }
  if (!(den > 1e-300)) throw ExtrapolationError("embed: kernel support vanished", dmin);
  return num / den;
}

struct TangentBundleModel::RecoverTerms {
  Vec weights;   // normalized kernel weights
  Mat terms;     // (m+3) x n first-order predictions per anchor
  Vec g;         // blended stacked output
  double dmin = 0.0;
  int nearest = 0;
};

TangentBundleModel::RecoverTerms TangentBundleModel::recover_terms(const Vec& y) const {
  if (y.size() != q) throw ValidationError("recover: embedding length mismatch");
  if (!y.allFinite()) throw ValidationError("recover: non-finite input");

  RecoverTerms out;
  Vec dist(n);
  double dmin = std::numeric_limits<double>::infinity();
  int nearest = 0;
  for (int i = 0; i < n; ++i) {
    dist[i] = (y - y_points.col(i)).norm();
    if (dist[i] < dmin) {
      dmin = dist[i];
      nearest = i;
    }
  }
  if (dmin > cutoff_y)
    throw ExtrapolationError("recover: query beyond support radius (nearest " +
                                 std::to_string(dmin) + ", cutoff " +
                                 std::to_string(cutoff_y) + ")",
                             dmin);

  // Headings are unwrapped relative to the nearest anchor so that anchors on
  // either side of the seam blend consistently.
  const double h_ref = z_points(m + 2, nearest);
  out.weights.resize(n);
  out.terms.resize(m + 3, n);
  double den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = gaussian_weight(dist[i], bandwidth_y[i]);
    out.weights[i] = w;
    den += w;
    Vec anchor = z_points.col(i);
    anchor[m + 2] = h_ref + wrap_angle(anchor[m + 2] - h_ref);
    out.terms.col(i) =
        anchor + y_to_z[static_cast<size_t>(i)] * (y - y_points.col(i));
  }
  if (!(den > 1e-300))
    throw ExtrapolationError("recover: kernel support vanished", dmin);
  out.weights /= den;
  out.g = out.terms * out.weights;
  out.dmin = dmin;
  out.nearest = nearest;
  return out;
}

RegressionPoint TangentBundleModel::recover(const Vec& y) const {
  RecoverTerms t = recover_terms(y);
  RegressionPoint point;
  point.features = t.g.head(m) / feature_scale;
  point.pose = {t.g[m], t.g[m + 1], wrap_angle(t.g[m + 2])};
  return point;
}

Mat TangentBundleModel::recovery_jacobian(const Vec& y) const {
  RecoverTerms t = recover_terms(y);
  Mat jac = Mat::Zero(m + 3, q);
  for (int i = 0; i < n; ++i) {
    const double w = t.weights[i];
    if (w == 0.0) continue;
    const double bw = bandwidth_y[i];
    Vec dlog = -(y - y_points.col(i)) / (bw * bw);  // gradient of log kernel
    jac += w * y_to_z[static_cast<size_t>(i)];
    jac += (t.terms.col(i) - t.g) * (w * dlog).transpose();
  }
  jac.topRows(m) /= feature_scale;
  return jac;
}

Mat TangentBundleModel::feature_jacobian(const Vec& y) const {
  return recovery_jacobian(y).topRows(m);
}

Mat TangentBundleModel::pose_jacobian(const Vec& y) const {
  return recovery_jacobian(y).bottomRows(3);
}

Mat TangentBundleModel::tangent_projection(const Vec& w) const {
  if (w.size() != m) throw ValidationError("tangent_projection: feature length mismatch");
  if (!w.allFinite()) throw ValidationError("tangent_projection: non-finite input");

  std::vector<std::pair<double, int>> cand(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    cand[static_cast<size_t>(i)] = {(w - anchor_feats.col(i)).norm(), i};
  const int take = std::min(k + 1, n);
  std::partial_sort(cand.begin(), cand.begin() + take, cand.end());

  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(take));
  for (int a = 0; a < take; ++a) dists.push_back(cand[static_cast<size_t>(a)].first);
  const double bw = std::max(median_of(dists), 1e-12);

  Mat stacked(m, static_cast<Eigen::Index>(take) * q);
  for (int a = 0; a < take; ++a) {
    const auto& [dist, idx] = cand[static_cast<size_t>(a)];
    const double w_a = std::sqrt(gaussian_weight(dist, bw));
    stacked.middleCols(static_cast<Eigen::Index>(a) * q, q) =
        w_a * feature_bases[static_cast<size_t>(idx)];
  }
  Mat basis = orthonormal_columns(stacked, q, "tangent_projection");
  return basis * basis.transpose();
}

std::string TangentBundleModel::to_bytes() const {
  std::string out;
  out.reserve(static_cast<size_t>((m + 3)) * n * sizeof(double) * 4);
  append_bytes(out, &q, sizeof(q));
  append_bytes(out, &m, sizeof(m));
  append_bytes(out, &n, sizeof(n));
  append_bytes(out, &k, sizeof(k));
  append_bytes(out, &feature_scale, sizeof(feature_scale));
  append_bytes(out, &cutoff_z, sizeof(cutoff_z));
  append_bytes(out, &cutoff_y, sizeof(cutoff_y));
  append_matrix(out, z_points);
  append_matrix(out, y_points);
  append_matrix(out, anchor_feats);
  for (const Mat& f : frames) append_matrix(out, f);
  for (const Mat& f : tangent_to_y) append_matrix(out, f);
  for (const Mat& f : y_to_z) append_matrix(out, f);
  for (const Mat& f : feature_bases) append_matrix(out, f);
  append_matrix(out, bandwidth_z);
  append_matrix(out, bandwidth_y);
  return out;
}

double hausdorff_estimate(const Mat& a, const Mat& b) {
  if (a.rows() < 1 || b.rows() < 1)
    throw ValidationError("hausdorff_estimate: empty point set");
  if (a.cols() != b.cols())
    throw ValidationError("hausdorff_estimate: dimension mismatch");
  if (!a.allFinite() || !b.allFinite())
    throw ValidationError("hausdorff_estimate: non-finite points");
  auto directed = [](const Mat& from, const Mat& to) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace mloc::tbml
