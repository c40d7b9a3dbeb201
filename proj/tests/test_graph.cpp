#include <doctest.h>

#include <cmath>

#include "sggru/graph.hpp"
#include "test_support.hpp"

using namespace sggru;

TEST_CASE("laplacian of a 2-node unit edge") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Graph g = Graph::from_adjacency(a);
  const Matrix l = build_laplacian(g);
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK((l - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian of a 3-node path") {
  Matrix a(3, 3);
  a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const Matrix l = build_laplacian(Graph::from_adjacency(a));
  Matrix expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((l - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian of a weighted edge") {
  Matrix a(2, 2);
  a << 0, 2, 2, 0;
  const Matrix l = build_laplacian(Graph::from_adjacency(a));
  Matrix expected(2, 2);
  expected << 2, -2, -2, 2;
  CHECK((l - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("graph constructor rejects invalid adjacencies") {
  Matrix asym(2, 2);
  asym << 0, 1, 0.5, 0;
  CHECK_THROWS_AS(Graph::from_adjacency(asym), std::invalid_argument);

  Matrix negative(2, 2);
  negative << 0, -1, -1, 0;
  CHECK_THROWS_AS(Graph::from_adjacency(negative), std::invalid_argument);

  Matrix diag(2, 2);
  diag << 1, 1, 1, 0;
  CHECK_THROWS_AS(Graph::from_adjacency(diag), std::invalid_argument);

  Matrix disconnected = Matrix::Zero(4, 4);
  disconnected(0, 1) = disconnected(1, 0) = 1.0;
  disconnected(2, 3) = disconnected(3, 2) = 1.0;
  CHECK_THROWS_AS(Graph::from_adjacency(disconnected), numerical_error);
}

TEST_CASE("station affinity is 1 at zero separation") {
  CHECK(station_affinity(0.0, 0.0) == 1.0);
  // 100 km at equal altitude: exponent is -1.
  CHECK(station_affinity(100.0, 0.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("geodesic distance sanity") {
  // One degree of latitude is about 111.2 km on the 6371 km sphere.
  const double d = geodesic_distance_km(0.0, 0.0, 1.0, 0.0);
  CHECK(d == doctest::Approx(111.195).epsilon(1e-3));
  CHECK(geodesic_distance_km(40.0, -75.0, 40.0, -75.0) == 0.0);
}

TEST_CASE("knn graph output is symmetric with zero diagonal") {
  std::vector<NodeMeta> stations;
  Rng rng(7);
  for (int i = 0; i < 9; ++i) {
    stations.push_back({"s" + std::to_string(i), 40.0 + rng.uniform(-2.0, 2.0),
                        -100.0 + rng.uniform(-2.0, 2.0), rng.uniform(0.0, 1500.0)});
  }
  const Graph g = build_knn_graph(stations, 3);
  const Matrix& a = g.adjacency();
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(is_connected(a));
}

TEST_CASE("knn weights match the direct formula") {
  // Four stations on a line, nearest-neighbor count 2: edges and weights
  // recomputed independently from the affinity definition.
  std::vector<NodeMeta> stations = {
      {"a", 40.0, -100.0, 200.0},
      {"b", 40.0, -99.5, 350.0},
      {"c", 40.0, -99.0, 150.0},
      {"d", 40.0, -98.2, 900.0},
  };
  const int n = 4, k = 2;
  const Graph g = build_knn_graph(stations, k);

  Matrix distance(n, n), affinity = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      distance(i, j) = geodesic_distance_km(stations[i].lat, stations[i].lon,
                                            stations[j].lat, stations[j].lon);
    }
  }
  // Mutual-inclusion edge set from per-node distance ranking.
  Eigen::MatrixXi edge = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back({distance(i, j), j});
    }
    std::sort(order.begin(), order.end());
    for (int r = 0; r < k; ++r) {
      edge(i, order[r].second) = edge(order[r].second, i) = 1;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (edge(i, j)) {
        const double d = distance(i, j) / 100.0;
        const double h = (stations[i].alt - stations[j].alt) / 1000.0;
        affinity(i, j) = std::exp(-(d * d + h * h));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!edge(i, j)) {
        CHECK(g.adjacency()(i, j) == 0.0);
        continue;
      }
      const double expected =
          affinity(i, j) /
          std::sqrt(affinity.row(i).sum() * affinity.row(j).sum());
      CHECK(g.adjacency()(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("closer station gets the larger weight at equal altitude") {
  // Symmetric arrangement: center at the origin, one near and one far
  // station on each side so the normalization masses match pairwise.
  std::vector<NodeMeta> stations = {
      {"center", 40.0, -100.0, 0.0}, {"near_e", 40.0, -99.7, 0.0},
      {"far_e", 40.0, -99.0, 0.0},   {"near_w", 40.0, -100.3, 0.0},
      {"far_w", 40.0, -101.0, 0.0},
  };
  const Graph g = build_knn_graph(stations, 2);
  CHECK(g.adjacency()(0, 1) > g.adjacency()(0, 2));
}

TEST_CASE("rbf adjacency from series") {
  const int n = 3, t = 8;
  Matrix binary(n, n);
  binary << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  Matrix series = Matrix::Zero(n, t);
  series.row(1).setConstant(1.0);  // ||x0 - x1||^2 = 8 over the window
  // node 2 identical to node 0

  const Graph g = build_rbf_adjacency(binary, series, t);
  CHECK(g.adjacency()(0, 2) == 1.0);  // identical series
  CHECK(g.adjacency()(0, 1) == doctest::Approx(std::exp(-8.0 / 10.0)));
  CHECK(g.adjacency()(1, 2) == doctest::Approx(std::exp(-8.0 / 10.0)));
  CHECK(g.adjacency()(0, 0) == 0.0);

  SUBCASE("zero binary entry stays zero regardless of series") {
    binary(0, 1) = binary(1, 0) = 0;
    const Graph g2 = build_rbf_adjacency(binary, series, t);
    CHECK(g2.adjacency()(0, 1) == 0.0);
  }

  SUBCASE("squared distance of 10 maps to exp(-1)") {
    Matrix s2 = Matrix::Zero(n, t);
    s2(1, 0) = std::sqrt(10.0);
    const Graph g3 = build_rbf_adjacency(binary, s2, t);
    CHECK(g3.adjacency()(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
}

TEST_CASE("rbf adjacency validates inputs") {
  Matrix binary(2, 2);
  binary << 0, 1, 1, 0;
  Matrix series = Matrix::Zero(2, 5);
  CHECK_THROWS_AS(build_rbf_adjacency(binary, series, 6), std::invalid_argument);
  CHECK_THROWS_AS(build_rbf_adjacency(binary, Matrix::Zero(3, 5), 5),
                  std::invalid_argument);
}
