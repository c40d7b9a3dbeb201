#pragma once

#include <cstdint>

#include "sggru/nn.hpp"
#include "sggru/sampling.hpp"
#include "sggru/types.hpp"

namespace sggru {

struct SgGruDims {
  int n = 0;        // output nodes
  int m = 0;        // sampled nodes
  int k = 0;        // spectral coefficients
  int tau = 0;      // window length
  int horizon = 0;  // prediction offset p
};

/// The joint forecasting/interpolation model: a vertex-domain GRU over the M
/// sampled values in parallel with a spectral GRU over K truncated-GFT
/// coefficients; both final states are interpolated to N nodes, stacked and
/// fused by a dense layer. The plan matrices and the truncated GFT are
/// frozen constants.
struct SgGruModel {
  GruParams gru;          // D = M
  GruParams sgru;         // D = K
  DenseParams fusion;     // N x 2N
  SamplingPlan plan;
  Matrix truncated_gft;   // K x M, rows of the band basis at S, transposed
  SgGruDims dims;
  std::uint64_t seed = 0;
};

/// Seeded initialization. Pass k <= 0 for the default bandwidth floor(M/3).
SgGruModel init_model(int n, int m, int k, int tau, int horizon,
                      const SamplingPlan& plan, std::uint64_t seed,
                      Activation candidate = Activation::sigmoid);

struct SgGruTrace {
  GruTrace gru;
  GruTrace sgru;
  std::vector<Vector> spectral_inputs;
  Vector y_sampled;   // final vertex hidden state (M)
  Vector z_freq;      // final spectral hidden state (K)
  Vector y_full;      // interpolated vertex branch (N)
  Vector z_full;      // interpolated spectral branch (N)
  Vector stacked;     // [y_full; z_full] (2N)
  Vector prediction;  // fused output (N)
};

/// Forward pass over one window of sampled snapshots (tau x M, row per step).
SgGruTrace forward(const SgGruModel& model, const Matrix& window);

struct SgGruGrads {
  GruGrads gru;
  GruGrads sgru;
  Matrix fusion_weight;
  Vector fusion_bias;
};

/// Exact reverse-mode gradients for the three trainable groups. The plan
/// matrices and truncated GFT are constants and receive no gradient.
SgGruGrads backward(const SgGruModel& model, const SgGruTrace& trace,
                    const Vector& prediction_grad);

/// Single vertex-domain GRU whose final state is interpolated to N nodes;
/// the comparison baseline.
struct BaselineGruModel {
  GruParams gru;  // D = M
  SamplingPlan plan;
  SgGruDims dims;  // k = 0
  std::uint64_t seed = 0;
};

BaselineGruModel init_baseline(int n, int m, int tau, int horizon,
                               const SamplingPlan& plan, std::uint64_t seed,
                               Activation candidate = Activation::sigmoid);

struct BaselineTrace {
  GruTrace gru;
  Vector y_sampled;
  Vector prediction;
};

BaselineTrace forward(const BaselineGruModel& model, const Matrix& window);

GruGrads backward(const BaselineGruModel& model, const BaselineTrace& trace,
                  const Vector& prediction_grad);

/// Flat parameter views (field order: gru, sgru, fusion), used by the
/// optimizer, checkpoints and finite-difference checks.
Eigen::Index param_count(const SgGruModel& model);
Vector param_vector(const SgGruModel& model);
void set_param_vector(SgGruModel& model, const Vector& params);
Vector grad_vector(const SgGruModel& model, const SgGruGrads& grads);

Eigen::Index param_count(const BaselineGruModel& model);
Vector param_vector(const BaselineGruModel& model);
void set_param_vector(BaselineGruModel& model, const Vector& params);
Vector grad_vector(const BaselineGruModel& model, const GruGrads& grads);

/// Cost of one model iteration: KM + 6 tau (M^2 + K^2) + N(K + M) + 2 N^2.
long long estimate_flops(int n, int m, int k, int tau);

}  // namespace sggru
