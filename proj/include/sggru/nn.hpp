#pragma once

#include <vector>

#include "sggru/rng.hpp"
#include "sggru/sampling.hpp"
#include "sggru/types.hpp"

namespace sggru {

enum class Activation { sigmoid, tanh };

double sigmoid(double z);

/// Gated recurrent cell parameters: update gate q, reset gate r, candidate c.
/// All six weight matrices are D x D. The candidate nonlinearity is
/// selectable (sigmoid or tanh) behind `candidate_activation`.
struct GruParams {
  Matrix w_q, v_q, w_r, v_r, w_c, v_c;
  Vector b_q, b_r, b_c;
  Activation candidate_activation = Activation::sigmoid;

  int dim() const { return static_cast<int>(b_q.size()); }
  static GruParams zeros(int d, Activation act = Activation::sigmoid);
  /// Uniform in [-1/sqrt(D), 1/sqrt(D)], consumed from `rng` in field order.
  static GruParams random_init(int d, Activation act, Rng& rng);
  void validate() const;
};

/// Everything the backward pass needs from one forward step.
struct GruStepTrace {
  Vector x, h_prev, q, r, c, h;
};
using GruTrace = std::vector<GruStepTrace>;

/// One recurrence step; the returned trace carries the new hidden state in
/// `h` along with the intermediates. Throws numerical_error on non-finite
/// output.
GruStepTrace gru_cell_forward(const Vector& x, const Vector& h_prev,
                              const GruParams& params);

struct GruGrads {
  Matrix w_q, v_q, w_r, v_r, w_c, v_c;
  Vector b_q, b_r, b_c;
  static GruGrads zeros(int d);
};

struct GruSequenceGrads {
  GruGrads params;
  std::vector<Vector> inputs;  // d loss / d x^t, one per step
  Vector initial_state;        // d loss / d h^0
};

/// Reverse-mode pass over a full forward trace. `output_grads[t]` is the
/// external gradient arriving at h^t (commonly zero except at the last step).
GruSequenceGrads gru_sequence_backward(const GruParams& params, const GruTrace& trace,
                                       const std::vector<Vector>& output_grads);

struct DenseParams {
  Matrix weight;  // O x I
  Vector bias;    // O

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
  static DenseParams zeros(int out, int in);
  static DenseParams random_init(int out, int in, Rng& rng);
};

Vector dense_forward(const Vector& x, const DenseParams& params);

struct DenseGrads {
  Matrix weight;
  Vector bias;
  Vector input;
};

DenseGrads dense_backward(const Vector& x, const DenseParams& params,
                          const Vector& output_grad);

/// Loss value plus the gradient with respect to each prediction.
struct LossResult {
  double value = 0.0;
  std::vector<Vector> gradients;
};

/// Mean squared error over a batch, normalized by batch size times signal
/// length: gradients are 2 (pred - label) / (T_b N).
LossResult loss_supervised(const std::vector<Vector>& predictions,
                           const std::vector<Vector>& labels);

/// MSE with excluded label entries (mask entry 0 drops the term); the
/// normalizer is the number of included terms so that an all-ones mask
/// reproduces loss_supervised exactly.
LossResult loss_supervised_masked(const std::vector<Vector>& predictions,
                                  const std::vector<Vector>& labels,
                                  const std::vector<std::vector<std::uint8_t>>& valid);

/// Length-N training target from M sampled labels: sampled entries are
/// copied verbatim, the rest come from the plan interpolator.
Vector interpolation_target(const Vector& sampled_labels, const SamplingPlan& plan);

/// MSE against the interpolated target built from the sampled labels only.
LossResult loss_semisupervised(const std::vector<Vector>& predictions,
                               const std::vector<Vector>& sampled_labels,
                               const SamplingPlan& plan);

/// Flat views of the nine GRU parameter fields in declaration order
/// (w_q, v_q, w_r, v_r, w_c, v_c, b_q, b_r, b_c), matrices in storage order.
Eigen::Index gru_param_count(int d);
Vector gru_param_vector(const GruParams& params);
void set_gru_param_vector(GruParams& params, const Vector& flat);
Vector gru_grad_vector(const GruGrads& grads);

/// RMSprop with a step-decay learning-rate schedule (factor `decay_factor`
/// every `decay_interval` epochs).
struct OptimizerState {
  Eigen::ArrayXd accumulator;  // running mean of squared gradients
  double lr0 = 1e-4;
  double smoothing = 0.99;
  double epsilon = 1e-8;
  int epoch = 0;
  double decay_factor = 0.5;
  int decay_interval = 10;

  double current_lr() const;
  static OptimizerState for_size(Eigen::Index n, double lr0);
};

void rmsprop_step(Vector& params, const Vector& grads, OptimizerState& state);

}  // namespace sggru
