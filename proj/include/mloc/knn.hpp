#pragma once

#include <functional>
#include <vector>

#include "mloc/types.hpp"

namespace mloc {

// Exact k-nearest-neighbor graph (Euclidean) with symmetric closure.
// Ties are broken by lower index. Requires 1 <= k < n.
NeighborGraph knn_graph(const std::vector<Vec>& points, int k);

// Same construction under an arbitrary distance; dist(i, j) must be
// symmetric and non-negative.
NeighborGraph knn_graph_metric(int n, int k,
                               const std::function<double(int, int)>& dist);

// Component label per node; optional component sizes, largest first order
// is not imposed (sizes follow label order of discovery from node 0).
std::vector<int> connected_components(const NeighborGraph& graph,
                                      std::vector<int>* sizes = nullptr);

}  // namespace mloc
