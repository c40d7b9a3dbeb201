#include "sggru/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace sggru {

bool is_connected(const Matrix& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v = 0; v < n; ++v) {
      if (!seen[v] && adjacency(u, v) != 0.0) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

Graph Graph::from_adjacency(Matrix adjacency, std::vector<NodeMeta> meta) {
  const int n = static_cast<int>(adjacency.rows());
  require(n > 0, "graph: adjacency must be non-empty");
  require(adjacency.cols() == n, "graph: adjacency must be square");
  require(meta.empty() || static_cast<int>(meta.size()) == n,
          "graph: node_meta size must match node count");
  for (int i = 0; i < n; ++i) {
    require(adjacency(i, i) == 0.0, "graph: diagonal entries must be zero");
    for (int j = i + 1; j < n; ++j) {
      require(adjacency(i, j) == adjacency(j, i), "graph: adjacency must be symmetric");
      require(adjacency(i, j) >= 0.0, "graph: weights must be nonnegative");
      require(std::isfinite(adjacency(i, j)), "graph: weights must be finite");
    }
  }
  if (!is_connected(adjacency)) {
    throw numerical_error("graph: adjacency is disconnected");
  }
  return Graph(std::move(adjacency), std::move(meta));
}

IndexList Graph::neighbors(int n) const {
  IndexList out;
  for (int m = 0; m < n_nodes(); ++m) {
    if (adjacency_(n, m) != 0.0) out.push_back(m);
  }
  return out;
}

Matrix build_laplacian(const Graph& graph) {
  const Matrix& a = graph.adjacency();
  Matrix laplacian = -a;
  for (int i = 0; i < graph.n_nodes(); ++i) {
    laplacian(i, i) = a.row(i).sum();
  }
  return laplacian;
}

double geodesic_distance_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlambda = (lon2 - lon1) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double station_affinity(double distance_km, double altitude_diff_m) {
  const double d = distance_km / 100.0;
  const double h = altitude_diff_m / 1000.0;
  return std::exp(-(d * d + h * h));
}

Graph build_knn_graph(const std::vector<NodeMeta>& stations, int k) {
  const int n = static_cast<int>(stations.size());
  require(k > 0, "knn graph: k must be positive");
  require(n >= k + 1, "knn graph: need at least k+1 stations");
  for (const NodeMeta& s : stations) {
    require(std::isfinite(s.lat) && s.lat >= -90.0 && s.lat <= 90.0,
            "knn graph: latitude out of range for station " + s.id);
    require(std::isfinite(s.lon) && s.lon >= -180.0 && s.lon <= 180.0,
            "knn graph: longitude out of range for station " + s.id);
    require(std::isfinite(s.alt), "knn graph: non-finite altitude for station " + s.id);
  }

  Matrix distance(n, n);
  for (int i = 0; i < n; ++i) {
    distance(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = geodesic_distance_km(stations[i].lat, stations[i].lon,
                                            stations[j].lat, stations[j].lon);
      distance(i, j) = d;
      distance(j, i) = d;
    }
  }

  // k nearest by geodesic distance; edge kept if either endpoint selects the
  // other. Ties broken by node index.
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> edge(n, n);
  edge.setZero();
  for (int i = 0; i < n; ++i) {
    IndexList order;
    order.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distance(i, a) < distance(i, b);
    });
    for (int r = 0; r < k; ++r) {
      const int j = order[r];
      edge(i, j) = 1;
      edge(j, i) = 1;
    }
  }

  Matrix affinity = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!edge(i, j)) continue;
      const double a = station_affinity(
          distance(i, j), stations[i].alt - stations[j].alt);
      affinity(i, j) = a;
      affinity(j, i) = a;
    }
  }

  Vector neighborhood_mass = affinity.rowwise().sum();
  Matrix weights = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!edge(i, j)) continue;
      const double w = affinity(i, j) /
          std::sqrt(neighborhood_mass(i) * neighborhood_mass(j));
      weights(i, j) = w;
      weights(j, i) = w;
    }
  }

  if (!is_connected(weights)) {
    throw numerical_error("knn graph: result is disconnected; raise k");
  }
  return Graph::from_adjacency(std::move(weights), stations);
}

Graph build_rbf_adjacency(const Matrix& binary_adjacency, const Matrix& series,
                          int window) {
  const int n = static_cast<int>(binary_adjacency.rows());
  require(binary_adjacency.cols() == n, "rbf adjacency: binary matrix must be square");
  require(series.rows() == n, "rbf adjacency: series row count must match node count");
  require(window > 0, "rbf adjacency: window must be positive");
  require(series.cols() >= window, "rbf adjacency: series shorter than window");
  for (int i = 0; i < n; ++i) {
    require(binary_adjacency(i, i) == 0.0, "rbf adjacency: diagonal must be zero");
    for (int j = i + 1; j < n; ++j) {
      const double b = binary_adjacency(i, j);
      require(b == binary_adjacency(j, i), "rbf adjacency: binary matrix must be symmetric");
      require(b == 0.0 || b == 1.0, "rbf adjacency: entries must be 0 or 1");
    }
  }

  Matrix weights = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (binary_adjacency(i, j) == 0.0) continue;
      const double sq = (series.row(i).head(window) - series.row(j).head(window))
                            .squaredNorm();
      const double w = std::exp(-sq / 10.0);
      weights(i, j) = w;
      weights(j, i) = w;
    }
  }

  if (!is_connected(weights)) {
    throw numerical_error("rbf adjacency: result is disconnected");
  }
  return Graph::from_adjacency(std::move(weights));
}

}  // namespace sggru
