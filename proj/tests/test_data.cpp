#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "sggru/data.hpp"
#include "sggru/sampling.hpp"
#include "test_support.hpp"

using namespace sggru;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "sggru_data_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synthetic generation") {
  SUBCASE("infinite snr gives exactly bandlimited snapshots") {
    SyntheticSpec spec;
    spec.n_nodes = 10;
    spec.n_steps = 30;
    spec.freq_indices = {0, 1, 2};
    spec.snr_db = std::numeric_limits<double>::infinity();
    spec.seed = 5;
    const TimeSeriesDataset d = generate_synthetic(spec);
    const Spectrum s = Spectrum::from_graph(d.graph);
    for (int t = 0; t < d.signals.cols(); t += 7) {
      const BandlimitSplit split = bandlimit_split(d.signals.col(t), spec.freq_indices, s);
      CHECK(split.epsilon <= 1e-10);
    }
  }
  SUBCASE("same seed reproduces the dataset bit for bit") {
    SyntheticSpec spec;
    spec.seed = 77;
    const TimeSeriesDataset a = generate_synthetic(spec);
    const TimeSeriesDataset b = generate_synthetic(spec);
    CHECK(std::memcmp(a.signals.data(), b.signals.data(),
                      sizeof(double) * a.signals.size()) == 0);
    CHECK(std::memcmp(a.graph.adjacency().data(), b.graph.adjacency().data(),
                      sizeof(double) * a.graph.adjacency().size()) == 0);
  }
  SUBCASE("band energy ratio tracks the requested snr") {
    SyntheticSpec spec;
    spec.n_nodes = 12;
    spec.n_steps = 10000;
    spec.freq_indices = {0, 1, 2};
    spec.snr_db = 20.0;
    spec.seed = 13;
    const TimeSeriesDataset d = generate_synthetic(spec);
    const Spectrum s = Spectrum::from_graph(d.graph);
    double band = 0.0, residual = 0.0;
    for (int t = 0; t < d.signals.cols(); ++t) {
      const BandlimitSplit split = bandlimit_split(d.signals.col(t), spec.freq_indices, s);
      band += split.bandlimited_part.squaredNorm();
      residual += split.residual.squaredNorm();
    }
    const double ratio_db = 10.0 * std::log10(band / residual);
    CHECK(std::abs(ratio_db - 20.0) < 10.0 * std::log10(1.05));
  }
  SUBCASE("unstable temporal model is rejected") {
    SyntheticSpec spec;
    spec.ar_coeff = 1.0;
    CHECK_THROWS_AS(generate_synthetic(spec), numerical_error);
  }
}

TEST_CASE("noise injection") {
  SyntheticSpec spec;
  spec.n_nodes = 8;
  spec.n_steps = 50;
  spec.seed = 3;
  const TimeSeriesDataset d = generate_synthetic(spec);

  SUBCASE("zero ratio is an exact identity") {
    CorruptionSpec c{CorruptionKind::noise, 0.0, 0.0, 9};
    const CorruptedDataset out = inject_noise(d, c);
    CHECK(std::memcmp(out.corrupted.data(), d.signals.data(),
                      sizeof(double) * d.signals.size()) == 0);
  }
  SUBCASE("noise std matches ratio times dataset std within 2%") {
    // 50 x 2000 = 1e5 entries.
    SyntheticSpec big;
    big.n_nodes = 50;
    big.n_steps = 2000;
    big.seed = 21;
    const TimeSeriesDataset base = generate_synthetic(big);
    CorruptionSpec c{CorruptionKind::noise, 0.5, 0.0, 33};
    const CorruptedDataset out = inject_noise(base, c);
    const Matrix delta = out.corrupted - base.signals;
    const double measured = dataset_std(delta);
    const double target = 0.5 * dataset_std(base.signals);
    CHECK(std::abs(measured - target) <= 0.02 * target);
  }
  SUBCASE("sigma formula on a dataset with std exactly 10") {
    Matrix signals(2, 40);
    for (int t = 0; t < 40; ++t) {
      signals(0, t) = 10.0;
      signals(1, t) = -10.0;
    }
    CHECK(dataset_std(signals) == 10.0);
    Matrix adj(2, 2);
    adj << 0, 1, 1, 0;
    const TimeSeriesDataset ds =
        make_dataset(signals, Graph::from_adjacency(adj), "degC");
    CorruptionSpec c{CorruptionKind::noise, 0.1, 0.0, 5};
    const CorruptedDataset out = inject_noise(ds, c);
    const double sigma = dataset_std(Matrix(out.corrupted - signals));
    CHECK(sigma == doctest::Approx(1.0).epsilon(0.25));  // sigma_eta = 1 degC
  }
  SUBCASE("seeded noise is reproducible") {
    CorruptionSpec c{CorruptionKind::noise, 0.3, 0.0, 11};
    const CorruptedDataset a = inject_noise(d, c);
    const CorruptedDataset b = inject_noise(d, c);
    CHECK(std::memcmp(a.corrupted.data(), b.corrupted.data(),
                      sizeof(double) * a.corrupted.size()) == 0);
  }
  SUBCASE("wrong kind is rejected") {
    CorruptionSpec c{CorruptionKind::missing, 0.0, 0.1, 0};
    CHECK_THROWS_AS(inject_noise(d, c), std::invalid_argument);
  }
}

TEST_CASE("missing injection") {
  SyntheticSpec spec;
  spec.n_nodes = 100;
  spec.n_steps = 40;
  spec.seed = 7;
  const TimeSeriesDataset d = generate_synthetic(spec);

  SUBCASE("fraction zero leaves an empty mask") {
    CorruptionSpec c{CorruptionKind::missing, 0.0, 0.0, 1};
    const CorruptedDataset out = inject_missing(d, c);
    for (const auto& step : out.absent) CHECK(step.empty());
  }
  SUBCASE("fraction 0.1 marks exactly 10 of 100 nodes per timestep") {
    CorruptionSpec c{CorruptionKind::missing, 0.1, 0.0, 2};
    c.missing_fraction = 0.1;
    const CorruptedDataset out = inject_missing(d, c);
    bool differs = false;
    for (std::size_t t = 0; t < out.absent.size(); ++t) {
      CHECK(out.absent[t].size() == 10);
      if (t > 0 && out.absent[t] != out.absent[t - 1]) differs = true;
    }
    CHECK(differs);  // time-dependent masks
    // Ground truth untouched.
    CHECK(std::memcmp(out.clean.signals.data(), d.signals.data(),
                      sizeof(double) * d.signals.size()) == 0);
  }
  SUBCASE("same seed gives identical masks") {
    CorruptionSpec c{CorruptionKind::missing, 0.2, 0.0, 3};
    c.missing_fraction = 0.2;
    const CorruptedDataset a = inject_missing(d, c);
    const CorruptedDataset b = inject_missing(d, c);
    for (std::size_t t = 0; t < a.absent.size(); ++t) {
      CHECK(a.absent[t] == b.absent[t]);
    }
  }
  SUBCASE("a fraction that blanks whole timesteps is rejected") {
    SyntheticSpec tiny;
    tiny.n_nodes = 3;
    tiny.n_steps = 20;
    tiny.seed = 9;
    const TimeSeriesDataset small = generate_synthetic(tiny);
    CorruptionSpec c{CorruptionKind::missing, 0.0, 0.95, 1};
    CHECK_THROWS_AS(inject_missing(small, c), std::invalid_argument);
  }
}

TEST_CASE("one-hop fill") {
  // Path graph 0-1-2-3.
  Matrix a = Matrix::Zero(4, 4);
  a(0, 1) = a(1, 0) = 1.0;
  a(1, 2) = a(2, 1) = 1.0;
  a(2, 3) = a(3, 2) = 1.0;
  const Graph g = Graph::from_adjacency(a);

  SUBCASE("no absent values is the identity") {
    Vector x(4);
    x << 1.5, 2.5, 3.5, 4.5;
    const Vector filled = one_hop_fill(x, {}, g, Vector::Zero(4));
    CHECK(std::memcmp(filled.data(), x.data(), sizeof(double) * 4) == 0);
  }
  SUBCASE("absent value becomes the mean of present neighbors") {
    Vector x(4);
    x << 2.0, 99.0, 4.0, 7.0;  // node 1 absent; neighbors 0 and 2 present
    const Vector filled = one_hop_fill(x, {1}, g, Vector::Zero(4));
    CHECK(filled(1) == doctest::Approx(3.0));
    CHECK(filled(0) == 2.0);
    CHECK(filled(2) == 4.0);
    CHECK(filled(3) == 7.0);
  }
  SUBCASE("fully absent neighborhood falls back") {
    Vector x(4);
    x << 1.0, -1.0, -1.0, 4.0;  // nodes 1 and 2 absent; 1's neighbors all absent? no:
    // node 1 neighbors {0, 2}: 0 present. Make 0 absent too so node 1 has no
    // present neighbor.
    Vector fb = Vector::Constant(4, 0.5);
    const Vector filled = one_hop_fill(x, {0, 1, 2}, g, fb);
    CHECK(filled(0) == 0.5);   // neighbor 1 absent
    CHECK(filled(1) == 0.5);   // neighbors 0, 2 absent
    CHECK(filled(2) == 4.0);   // neighbor 3 present
    CHECK(filled(3) == 4.0);
  }
}

TEST_CASE("sequential fill with fallback chain") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  a(1, 2) = a(2, 1) = 1.0;
  const Graph g = Graph::from_adjacency(a);

  Matrix signals(3, 3);
  signals << 1.0, 2.0, 3.0,
             4.0, 5.0, 6.0,
             7.0, 8.0, 9.0;
  AbsentMask absent(3);
  absent[1] = {0, 1, 2};  // whole snapshot absent at t=1
  absent[2] = {1};

  const Matrix filled = fill_missing(signals, absent, g);
  // t=0 untouched.
  CHECK(filled(0, 0) == 1.0);
  // t=1: nothing present; every node falls back to the previous filled column.
  CHECK(filled(0, 1) == 1.0);
  CHECK(filled(1, 1) == 4.0);
  CHECK(filled(2, 1) == 7.0);
  // t=2: node 1 absent, neighbors 0 and 2 present.
  CHECK(filled(1, 2) == doctest::Approx(0.5 * (3.0 + 9.0)));
  CHECK(filled(0, 2) == 3.0);

  SUBCASE("t=0 fallback is the mean of present entries") {
    AbsentMask at_zero(3);
    at_zero[0] = {0, 1, 2};
    Matrix s2 = signals;
    const Matrix f2 = fill_missing(s2, at_zero, g);
    double present_mean = 0.0;
    int count = 0;
    for (int t = 1; t < 3; ++t) {
      for (int n = 0; n < 3; ++n) {
        present_mean += signals(n, t);
        ++count;
      }
    }
    present_mean /= count;
    CHECK(f2(0, 0) == doctest::Approx(present_mean));
    CHECK(f2(1, 0) == doctest::Approx(present_mean));
  }
}

TEST_CASE("matrix csv round trip") {
  const fs::path dir = scratch_dir();
  Rng rng(3);
  const Matrix m = testsup::random_symmetric(5, rng);
  const std::string path = (dir / "matrix.csv").string();
  save_matrix_csv(m, path);
  const Matrix loaded = load_matrix_csv(path);
  CHECK(std::memcmp(m.data(), loaded.data(), sizeof(double) * m.size()) == 0);
}

TEST_CASE("signals csv") {
  const fs::path dir = scratch_dir();

  SUBCASE("round trip with NaN mask") {
    Matrix signals(3, 4);
    signals << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    AbsentMask absent(4);
    absent[1] = {2};
    absent[3] = {0, 1};
    const std::string path = (dir / "signals.csv").string();
    save_signals_csv(signals, path, &absent);
    const SignalsCsv loaded = load_signals_csv(path);
    CHECK(loaded.signals.rows() == 3);
    CHECK(loaded.signals.cols() == 4);
    CHECK(loaded.absent[1] == IndexList{2});
    CHECK(loaded.absent[3] == IndexList{0, 1});
    CHECK(loaded.signals(0, 0) == 1.0);
    CHECK(std::isnan(loaded.signals(2, 1)));
  }
  SUBCASE("header row is skipped") {
    const std::string path = (dir / "header.csv").string();
    std::ofstream out(path);
    out << "node0,node1\n1.5,2.5\n3.5,4.5\n";
    out.close();
    const SignalsCsv loaded = load_signals_csv(path);
    CHECK(loaded.signals.rows() == 2);
    CHECK(loaded.signals.cols() == 2);
    CHECK(loaded.signals(0, 0) == 1.5);
    CHECK(loaded.signals(1, 1) == 4.5);
  }
  SUBCASE("parse errors carry the line number") {
    const std::string path = (dir / "bad.csv").string();
    std::ofstream out(path);
    out << "1,2\n3,oops\n";
    out.close();
    try {
      load_signals_csv(path);
      FAIL("expected a parse error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
}

TEST_CASE("meta csv round trip") {
  const fs::path dir = scratch_dir();
  const std::vector<NodeMeta> meta = {
      {"ks001", 39.5, -98.25, 345.5},
      {"tx942", 31.0, -100.0, 812.0},
  };
  const std::string path = (dir / "meta.csv").string();
  save_meta_csv(meta, path);
  const auto loaded = load_meta_csv(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "ks001");
  CHECK(loaded[0].lat == 39.5);
  CHECK(loaded[1].alt == 812.0);
}

TEST_CASE("mask csv round trip") {
  const fs::path dir = scratch_dir();
  AbsentMask mask(5);
  mask[0] = {1, 3};
  mask[4] = {0};
  const std::string path = (dir / "mask.csv").string();
  save_mask_csv(mask, path);
  const AbsentMask loaded = load_mask_csv(path, 5);
  CHECK(loaded[0] == mask[0]);
  CHECK(loaded[4] == mask[4]);
  CHECK(loaded[2].empty());
}

TEST_CASE("load_dataset") {
  const fs::path dir = scratch_dir();
  SyntheticSpec spec;
  spec.n_nodes = 6;
  spec.n_steps = 25;
  spec.seed = 41;
  const TimeSeriesDataset d = generate_synthetic(spec);

  SUBCASE("raw adjacency round trip") {
    save_signals_csv(d.signals, (dir / "ds_signals.csv").string());
    save_matrix_csv(d.graph.adjacency(), (dir / "ds_adjacency.csv").string());
    DatasetSource source;
    source.signals_csv = (dir / "ds_signals.csv").string();
    source.adjacency_csv = (dir / "ds_adjacency.csv").string();
    source.builder = GraphBuilderKind::raw;
    const LoadedDataset loaded = load_dataset(source);
    CHECK(std::memcmp(loaded.dataset.signals.data(), d.signals.data(),
                      sizeof(double) * d.signals.size()) == 0);
    CHECK(std::memcmp(loaded.dataset.graph.adjacency().data(),
                      d.graph.adjacency().data(),
                      sizeof(double) * d.graph.adjacency().size()) == 0);
  }
  SUBCASE("node count mismatch is a dimension error") {
    save_signals_csv(d.signals, (dir / "mm_signals.csv").string());
    save_matrix_csv(Matrix::Zero(7, 7), (dir / "mm_adjacency.csv").string());
    DatasetSource source;
    source.signals_csv = (dir / "mm_signals.csv").string();
    source.adjacency_csv = (dir / "mm_adjacency.csv").string();
    CHECK_THROWS_AS(load_dataset(source), std::invalid_argument);
  }
  SUBCASE("knn builder from metadata produces a valid graph") {
    Rng rng(17);
    std::vector<NodeMeta> meta;
    for (int i = 0; i < 6; ++i) {
      meta.push_back({"s" + std::to_string(i), 40.0 + rng.uniform(-1.0, 1.0),
                      -100.0 + rng.uniform(-1.0, 1.0), rng.uniform(0.0, 500.0)});
    }
    save_meta_csv(meta, (dir / "knn_meta.csv").string());
    save_signals_csv(d.signals, (dir / "knn_signals.csv").string());
    DatasetSource source;
    source.signals_csv = (dir / "knn_signals.csv").string();
    source.meta_csv = (dir / "knn_meta.csv").string();
    source.builder = GraphBuilderKind::knn;
    source.knn_k = 3;
    const LoadedDataset loaded = load_dataset(source);
    const Matrix& adj = loaded.dataset.graph.adjacency();
    CHECK((adj - adj.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(adj.diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("NaN cells are filled and reported in the mask") {
    AbsentMask absent(25);
    absent[3] = {2};
    save_signals_csv(d.signals, (dir / "nan_signals.csv").string(), &absent);
    save_matrix_csv(d.graph.adjacency(), (dir / "nan_adjacency.csv").string());
    DatasetSource source;
    source.signals_csv = (dir / "nan_signals.csv").string();
    source.adjacency_csv = (dir / "nan_adjacency.csv").string();
    const LoadedDataset loaded = load_dataset(source);
    CHECK(loaded.absent[3] == IndexList{2});
    CHECK(loaded.dataset.signals.allFinite());
  }
}
