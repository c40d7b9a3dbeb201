#pragma once

// Shared helpers for the test suites. Oracles here deliberately avoid the
// library's own numerical routines: singular values and eigen pairs come
// from Eigen's SVD/SelfAdjointEigenSolver, gradients from central finite
// differences.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "sggru/data.hpp"
#include "sggru/model.hpp"
#include "sggru/rng.hpp"
#include "sggru/types.hpp"

namespace testsup {

inline sggru::Matrix random_symmetric(int n, sggru::Rng& rng) {
  sggru::Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      m(i, j) = m(j, i) = rng.gaussian();
    }
  }
  return m;
}

inline sggru::Vector random_vector(int n, sggru::Rng& rng) {
  sggru::Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.gaussian();
  return v;
}

/// Singular values via Eigen's SVD, ascending (independent oracle).
inline sggru::Vector svd_singular_values(const sggru::Matrix& m) {
  Eigen::JacobiSVD<sggru::Matrix> svd(m);
  sggru::Vector sv = svd.singularValues();
  return sv.reverse();
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const sggru::Vector&)>& f,
                                 sggru::Vector x, int i, double h = 1e-5) {
  const double saved = x(i);
  x(i) = saved + h;
  const double up = f(x);
  x(i) = saved - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Gradient-check error: relative where the gradient is large, absolute
/// where it is small.
inline double grad_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Worst gradient-check error over all coordinates.
inline double max_grad_error(const std::function<double(const sggru::Vector&)>& f,
                             const sggru::Vector& x, const sggru::Vector& analytic,
                             double h = 1e-5) {
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    worst = std::max(worst, grad_error(analytic(i), central_difference(f, x, i, h)));
  }
  return worst;
}

/// Plan over a random connected graph: the k smallest frequencies and either
/// the natural node order (m == n) or the greedy selection.
inline sggru::SamplingPlan make_test_plan(int n, int m, int k, std::uint64_t seed) {
  const sggru::Spectrum s =
      sggru::Spectrum::from_graph(sggru::random_connected_graph(n, seed));
  sggru::IndexList freqs(k);
  std::iota(freqs.begin(), freqs.end(), 0);
  sggru::IndexList nodes;
  if (m == n) {
    nodes.resize(n);
    std::iota(nodes.begin(), nodes.end(), 0);
  } else {
    nodes = sggru::select_sampling_set_greedy(s, freqs, m);
  }
  return sggru::build_plan(nodes, freqs, s);
}

inline sggru::Matrix random_window(int tau, int m, sggru::Rng& rng) {
  sggru::Matrix w(tau, m);
  for (int t = 0; t < tau; ++t) {
    for (int j = 0; j < m; ++j) w(t, j) = rng.gaussian();
  }
  return w;
}

/// Independent re-evaluation of the model forward pass with scalar loops
/// over plain arrays; shares only the parameter values with the
/// implementation.
inline std::vector<double> oracle_forward(const sggru::SgGruModel& model,
                                          const sggru::Matrix& window) {
  using sggru::Activation;
  using sggru::GruParams;
  const int n = model.dims.n, m = model.dims.m, k = model.dims.k,
            tau = model.dims.tau;
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const bool tanh_candidate =
      model.gru.candidate_activation == Activation::tanh;

  auto run_cell = [&](const GruParams& p, const std::vector<double>& x,
                      std::vector<double>& h) {
    const int d = static_cast<int>(h.size());
    std::vector<double> q(d), r(d), c(d), hn(d);
    for (int i = 0; i < d; ++i) {
      double aq = p.b_q(i), ar = p.b_r(i);
      for (int j = 0; j < d; ++j) {
        aq += p.w_q(i, j) * x[j] + p.v_q(i, j) * h[j];
        ar += p.w_r(i, j) * x[j] + p.v_r(i, j) * h[j];
      }
      q[i] = sig(aq);
      r[i] = sig(ar);
    }
    for (int i = 0; i < d; ++i) {
      double ac = p.b_c(i);
      for (int j = 0; j < d; ++j) {
        ac += p.w_c(i, j) * x[j] + p.v_c(i, j) * (h[j] * r[j]);
      }
      c[i] = tanh_candidate ? std::tanh(ac) : sig(ac);
    }
    for (int i = 0; i < d; ++i) {
      hn[i] = q[i] * c[i] + (1.0 - q[i]) * h[i];
    }
    h = hn;
  };

  std::vector<double> h(m, 0.0), hs(k, 0.0);
  for (int t = 0; t < tau; ++t) {
    std::vector<double> x(m);
    for (int j = 0; j < m; ++j) x[j] = window(t, j);
    run_cell(model.gru, x, h);

    std::vector<double> xhat(k, 0.0);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < m; ++j) xhat[i] += model.truncated_gft(i, j) * x[j];
    }
    run_cell(model.sgru, xhat, hs);
  }

  std::vector<double> stacked(2 * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) stacked[i] += model.plan.interpolator(i, j) * h[j];
    for (int j = 0; j < k; ++j) {
      stacked[n + i] += model.plan.spectral_interpolator(i, j) * hs[j];
    }
  }
  std::vector<double> prediction(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = model.fusion.bias(i);
    for (int j = 0; j < 2 * n; ++j) acc += model.fusion.weight(i, j) * stacked[j];
    prediction[i] = acc;
  }
  return prediction;
}

/// All size-k index subsets of {0..n-1}.
inline std::vector<sggru::IndexList> all_subsets(int n, int k) {
  std::vector<sggru::IndexList> out;
  sggru::IndexList current;
  std::function<void(int)> recurse = [&](int start) {
    if (static_cast<int>(current.size()) == k) {
      out.push_back(current);
      return;
    }
    for (int v = start; v < n; ++v) {
      current.push_back(v);
      recurse(v + 1);
      current.pop_back();
    }
  };
  recurse(0);
  return out;
}

}  // namespace testsup
