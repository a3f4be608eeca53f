#include "mloc/knn.hpp"

#include <algorithm>
#include <queue>
#include <string>

namespace mloc {

NeighborGraph knn_graph_metric(int n, int k,
                               const std::function<double(int, int)>& dist) {
  if (n < 2) throw ValidationError("knn_graph: needs at least two points");
  if (k < 1) throw ValidationError("knn_graph: k must be >= 1");
  if (k >= n) throw ValidationError("knn_graph: k must be < n");

  std::vector<std::vector<std::pair<double, int>>> chosen(n);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = dist(i, j);
      if (!(d >= 0.0))
        throw ValidationError("knn_graph: distance must be non-negative and finite");
      cand.emplace_back(d, j);
    }
    // pair ordering = (distance, index): ties resolved toward lower index.
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    chosen[i].assign(cand.begin(), cand.begin() + k);
  }

  // Symmetric closure can push a node's degree above k.
  std::vector<std::vector<std::pair<double, int>>> adj(n);
  for (int i = 0; i < n; ++i)
    for (const auto& [d, j] : chosen[i]) {
      adj[i].emplace_back(d, j);
      adj[j].emplace_back(d, i);
    }

  NeighborGraph graph;
  graph.k = k;
  graph.adjacency.resize(n);
  for (int i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
    graph.adjacency[i].reserve(adj[i].size());
    for (const auto& [d, j] : adj[i]) graph.adjacency[i].push_back({j, d});
  }
  return graph;
}

NeighborGraph knn_graph(const std::vector<Vec>& points, int k) {
  const int n = static_cast<int>(points.size());
  if (n >= 1) {
    const Eigen::Index dim = points[0].size();
    for (const Vec& p : points) {
      if (p.size() != dim) throw ValidationError("knn_graph: dimension mismatch");
      if (!p.allFinite()) throw ValidationError("knn_graph: non-finite point");
    }
  }
  return knn_graph_metric(n, k, [&points](int i, int j) {
    return (points[i] - points[j]).norm();
  });
}

std::vector<int> connected_components(const NeighborGraph& graph,
                                      std::vector<int>* sizes) {
  const int n = graph.size();
  std::vector<int> label(n, -1);
  std::vector<int> counts;
  int next = 0;
  for (int start = 0; start < n; ++start) {
    if (label[start] != -1) continue;
    int count = 0;
    std::queue<int> queue;
    queue.push(start);
    label[start] = next;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop();
      ++count;
      for (const Neighbor& nb : graph.adjacency[u]) {
        if (label[nb.index] == -1) {
          label[nb.index] = next;
          queue.push(nb.index);
        }
      }
    }
    counts.push_back(count);
    ++next;
  }
  if (sizes) *sizes = counts;
  return label;
}

}  // namespace mloc
