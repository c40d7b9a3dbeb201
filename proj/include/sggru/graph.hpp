#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sggru/types.hpp"

namespace sggru {

/// Per-node station record: id plus geographic position.
struct NodeMeta {
  std::string id;
  double lat = 0.0;   // degrees
  double lon = 0.0;   // degrees
  double alt = 0.0;   // meters
};

/// Weighted undirected connected graph. The adjacency matrix is validated on
/// construction: symmetric as stored, nonnegative weights, zero diagonal and
/// a single connected component.
class Graph {
 public:
  static Graph from_adjacency(Matrix adjacency, std::vector<NodeMeta> meta = {});

  int n_nodes() const { return static_cast<int>(adjacency_.rows()); }
  const Matrix& adjacency() const { return adjacency_; }
  const std::vector<NodeMeta>& node_meta() const { return meta_; }

  /// Neighbor indices of node n (nonzero weight), ascending.
  IndexList neighbors(int n) const;

 private:
  Graph(Matrix adjacency, std::vector<NodeMeta> meta)
      : adjacency_(std::move(adjacency)), meta_(std::move(meta)) {}

  Matrix adjacency_;
  std::vector<NodeMeta> meta_;
};

/// True when the nonzero-weight edges connect all nodes into one component.
bool is_connected(const Matrix& adjacency);

/// Combinatorial Laplacian L = D - A with D the diagonal degree matrix.
Matrix build_laplacian(const Graph& graph);

/// Great-circle distance in kilometers (sphere of radius 6371 km).
double geodesic_distance_km(double lat1, double lon1, double lat2, double lon2);

/// Edge affinity exp(-(d^2 + h^2)) with the distance expressed in units of
/// 100 km and the altitude difference in km, so the exponent stays O(1).
double station_affinity(double distance_km, double altitude_diff_m);

/// k-nearest-neighbor graph over station positions. Neighborhoods are chosen
/// by geodesic distance, edges are kept if either endpoint selects the other,
/// and weights follow the normalized exponential affinity over distance and
/// altitude difference. Throws numerical_error if the result is disconnected
/// (raise k in that case).
Graph build_knn_graph(const std::vector<NodeMeta>& stations, int k);

/// Replaces the nonzero entries of a binary adjacency by the radial-basis
/// weight exp(-||x_n - x_m||^2 / 10) computed over the first `window`
/// timesteps of the node series (N x T, column per snapshot).
Graph build_rbf_adjacency(const Matrix& binary_adjacency, const Matrix& series,
                          int window = 1000);

}  // namespace sggru
