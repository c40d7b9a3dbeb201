#include "sggru/nn.hpp"

#include <cmath>

namespace sggru {

namespace {

Vector sigmoid_vec(const Vector& z) {
  Vector out(z.size());
  for (int i = 0; i < z.size(); ++i) out(i) = sigmoid(z(i));
  return out;
}

Vector activate(const Vector& z, Activation act) {
  if (act == Activation::sigmoid) return sigmoid_vec(z);
  return z.array().tanh().matrix();
}

/// Derivative of the activation expressed through its output value.
Vector activation_grad_from_output(const Vector& y, Activation act) {
  if (act == Activation::sigmoid) {
    return (y.array() * (1.0 - y.array())).matrix();
  }
  return (1.0 - y.array().square()).matrix();
}

double uniform_fan_in(Rng& rng, int d) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  return rng.uniform(-bound, bound);
}

Matrix random_matrix(int rows, int cols, int fan_in, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = uniform_fan_in(rng, fan_in);
    }
  }
  return m;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

GruParams GruParams::zeros(int d, Activation act) {
  GruParams p;
  p.w_q = p.v_q = p.w_r = p.v_r = p.w_c = p.v_c = Matrix::Zero(d, d);
  p.b_q = p.b_r = p.b_c = Vector::Zero(d);
  p.candidate_activation = act;
  return p;
}

GruParams GruParams::random_init(int d, Activation act, Rng& rng) {
  GruParams p;
  p.w_q = random_matrix(d, d, d, rng);
  p.v_q = random_matrix(d, d, d, rng);
  p.w_r = random_matrix(d, d, d, rng);
  p.v_r = random_matrix(d, d, d, rng);
  p.w_c = random_matrix(d, d, d, rng);
  p.v_c = random_matrix(d, d, d, rng);
  p.b_q = random_matrix(d, 1, d, rng);
  p.b_r = random_matrix(d, 1, d, rng);
  p.b_c = random_matrix(d, 1, d, rng);
  p.candidate_activation = act;
  return p;
}

void GruParams::validate() const {
  const int d = dim();
  require(d > 0, "gru params: empty");
  for (const Matrix* m : {&w_q, &v_q, &w_r, &v_r, &w_c, &v_c}) {
    require(m->rows() == d && m->cols() == d, "gru params: matrices must be D x D");
    require(m->allFinite(), "gru params: non-finite entries");
  }
  for (const Vector* v : {&b_q, &b_r, &b_c}) {
    require(v->size() == d, "gru params: bias size mismatch");
    require(v->allFinite(), "gru params: non-finite entries");
  }
}

GruStepTrace gru_cell_forward(const Vector& x, const Vector& h_prev,
                              const GruParams& params) {
  const int d = params.dim();
  require(x.size() == d && h_prev.size() == d, "gru forward: dimension mismatch");

  GruStepTrace t;
  t.x = x;
  t.h_prev = h_prev;
  t.q = sigmoid_vec(params.w_q * x + params.v_q * h_prev + params.b_q);
  t.r = sigmoid_vec(params.w_r * x + params.v_r * h_prev + params.b_r);
  t.c = activate(params.w_c * x + params.v_c * h_prev.cwiseProduct(t.r) + params.b_c,
                 params.candidate_activation);
  t.h = t.q.cwiseProduct(t.c) + (Vector::Ones(d) - t.q).cwiseProduct(h_prev);
  if (!t.h.allFinite()) {
    throw numerical_error("gru forward: non-finite hidden state");
  }
  return t;
}

GruGrads GruGrads::zeros(int d) {
  GruGrads g;
  g.w_q = g.v_q = g.w_r = g.v_r = g.w_c = g.v_c = Matrix::Zero(d, d);
  g.b_q = g.b_r = g.b_c = Vector::Zero(d);
  return g;
}

GruSequenceGrads gru_sequence_backward(const GruParams& params, const GruTrace& trace,
                                       const std::vector<Vector>& output_grads) {
  require(trace.size() == output_grads.size(),
          "gru backward: trace/grad length mismatch");
  const int d = params.dim();
  GruSequenceGrads out;
  out.params = GruGrads::zeros(d);
  out.inputs.resize(trace.size());

  Vector dh_carry = Vector::Zero(d);
  for (int t = static_cast<int>(trace.size()) - 1; t >= 0; --t) {
    const GruStepTrace& s = trace[t];
    const Vector dh = output_grads[t] + dh_carry;

    const Vector dq = dh.cwiseProduct(s.c - s.h_prev);
    const Vector dc = dh.cwiseProduct(s.q);
    Vector dh_prev = dh.cwiseProduct(Vector::Ones(d) - s.q);

    const Vector da_c =
        dc.cwiseProduct(activation_grad_from_output(s.c, params.candidate_activation));
    const Vector hr = s.h_prev.cwiseProduct(s.r);
    out.params.w_c += da_c * s.x.transpose();
    out.params.v_c += da_c * hr.transpose();
    out.params.b_c += da_c;
    const Vector dhr = params.v_c.transpose() * da_c;
    dh_prev += dhr.cwiseProduct(s.r);
    const Vector dr = dhr.cwiseProduct(s.h_prev);

    const Vector da_r = dr.cwiseProduct(activation_grad_from_output(s.r, Activation::sigmoid));
    out.params.w_r += da_r * s.x.transpose();
    out.params.v_r += da_r * s.h_prev.transpose();
    out.params.b_r += da_r;
    dh_prev += params.v_r.transpose() * da_r;

    const Vector da_q = dq.cwiseProduct(activation_grad_from_output(s.q, Activation::sigmoid));
    out.params.w_q += da_q * s.x.transpose();
    out.params.v_q += da_q * s.h_prev.transpose();
    out.params.b_q += da_q;
    dh_prev += params.v_q.transpose() * da_q;

    out.inputs[t] = params.w_c.transpose() * da_c + params.w_r.transpose() * da_r +
                    params.w_q.transpose() * da_q;
    dh_carry = dh_prev;
  }
  out.initial_state = dh_carry;
  return out;
}

DenseParams DenseParams::zeros(int out, int in) {
  DenseParams p;
  p.weight = Matrix::Zero(out, in);
  p.bias = Vector::Zero(out);
  return p;
}

DenseParams DenseParams::random_init(int out, int in, Rng& rng) {
  DenseParams p;
  p.weight = random_matrix(out, in, in, rng);
  p.bias = random_matrix(out, 1, in, rng);
  return p;
}

Vector dense_forward(const Vector& x, const DenseParams& params) {
  require(x.size() == params.in_dim(), "dense forward: dimension mismatch");
  return params.weight * x + params.bias;
}

DenseGrads dense_backward(const Vector& x, const DenseParams& params,
                          const Vector& output_grad) {
  require(x.size() == params.in_dim(), "dense backward: input dimension mismatch");
  require(output_grad.size() == params.out_dim(),
          "dense backward: gradient dimension mismatch");
  DenseGrads g;
  g.weight = output_grad * x.transpose();
  g.bias = output_grad;
  g.input = params.weight.transpose() * output_grad;
  return g;
}

LossResult loss_supervised(const std::vector<Vector>& predictions,
                           const std::vector<Vector>& labels) {
  require(!predictions.empty(), "loss: empty batch");
  require(predictions.size() == labels.size(), "loss: batch size mismatch");
  const double batch = static_cast<double>(predictions.size());
  const double n = static_cast<double>(predictions[0].size());

  LossResult result;
  result.gradients.resize(predictions.size());
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    require(predictions[t].size() == labels[t].size(), "loss: dimension mismatch");
    const Vector err = predictions[t] - labels[t];
    result.value += err.squaredNorm();
    result.gradients[t] = 2.0 * err / (batch * n);
  }
  result.value /= batch * n;
  return result;
}

LossResult loss_supervised_masked(const std::vector<Vector>& predictions,
                                  const std::vector<Vector>& labels,
                                  const std::vector<std::vector<std::uint8_t>>& valid) {
  require(!predictions.empty(), "loss: empty batch");
  require(predictions.size() == labels.size() && predictions.size() == valid.size(),
          "loss: batch size mismatch");
  long included = 0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    for (std::size_t i = 0; i < valid[t].size(); ++i) {
      if (valid[t][i]) ++included;
    }
  }
  require(included > 0, "loss: all label entries masked out");

  LossResult result;
  result.gradients.resize(predictions.size());
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    const Vector err = predictions[t] - labels[t];
    Vector grad = Vector::Zero(err.size());
    for (int i = 0; i < err.size(); ++i) {
      if (valid[t][i]) {
        result.value += err(i) * err(i);
        grad(i) = 2.0 * err(i) / static_cast<double>(included);
      }
    }
    result.gradients[t] = std::move(grad);
  }
  result.value /= static_cast<double>(included);
  return result;
}

Vector interpolation_target(const Vector& sampled_labels, const SamplingPlan& plan) {
  require(sampled_labels.size() == plan.m(), "interpolation target: label size mismatch");
  Vector target = plan.interpolator * sampled_labels;
  for (int i = 0; i < plan.m(); ++i) {
    target(plan.sample_nodes[i]) = sampled_labels(i);
  }
  return target;
}

LossResult loss_semisupervised(const std::vector<Vector>& predictions,
                               const std::vector<Vector>& sampled_labels,
                               const SamplingPlan& plan) {
  require(predictions.size() == sampled_labels.size(), "loss: batch size mismatch");
  std::vector<Vector> targets(sampled_labels.size());
  for (std::size_t t = 0; t < sampled_labels.size(); ++t) {
    targets[t] = interpolation_target(sampled_labels[t], plan);
  }
  return loss_supervised(predictions, targets);
}

namespace {

template <class T>
std::vector<std::pair<const double*, Eigen::Index>> gru_field_spans(const T& g) {
  return {{g.w_q.data(), g.w_q.size()}, {g.v_q.data(), g.v_q.size()},
          {g.w_r.data(), g.w_r.size()}, {g.v_r.data(), g.v_r.size()},
          {g.w_c.data(), g.w_c.size()}, {g.v_c.data(), g.v_c.size()},
          {g.b_q.data(), g.b_q.size()}, {g.b_r.data(), g.b_r.size()},
          {g.b_c.data(), g.b_c.size()}};
}

template <class T>
Vector flatten_gru_fields(const T& g) {
  Eigen::Index total = 0;
  const auto spans = gru_field_spans(g);
  for (const auto& [ptr, size] : spans) total += size;
  Vector flat(total);
  Eigen::Index offset = 0;
  for (const auto& [ptr, size] : spans) {
    std::copy(ptr, ptr + size, flat.data() + offset);
    offset += size;
  }
  return flat;
}

}  // namespace

Eigen::Index gru_param_count(int d) {
  return 6 * static_cast<Eigen::Index>(d) * d + 3 * d;
}

Vector gru_param_vector(const GruParams& params) { return flatten_gru_fields(params); }

void set_gru_param_vector(GruParams& params, const Vector& flat) {
  require(flat.size() == gru_param_count(params.dim()),
          "gru params: flat size mismatch");
  Eigen::Index offset = 0;
  for (Matrix* m : {&params.w_q, &params.v_q, &params.w_r, &params.v_r, &params.w_c,
                    &params.v_c}) {
    std::copy(flat.data() + offset, flat.data() + offset + m->size(), m->data());
    offset += m->size();
  }
  for (Vector* v : {&params.b_q, &params.b_r, &params.b_c}) {
    std::copy(flat.data() + offset, flat.data() + offset + v->size(), v->data());
    offset += v->size();
  }
}

Vector gru_grad_vector(const GruGrads& grads) { return flatten_gru_fields(grads); }

double OptimizerState::current_lr() const {
  return lr0 * std::pow(decay_factor, epoch / decay_interval);
}

OptimizerState OptimizerState::for_size(Eigen::Index n, double lr) {
  OptimizerState state;
  state.accumulator = Eigen::ArrayXd::Zero(n);
  state.lr0 = lr;
  return state;
}

void rmsprop_step(Vector& params, const Vector& grads, OptimizerState& state) {
  require(params.size() == grads.size(), "rmsprop: shape mismatch");
  require(params.size() == state.accumulator.size(), "rmsprop: state shape mismatch");
  if (!grads.allFinite()) {
    throw numerical_error("rmsprop: non-finite gradients");
  }
  const double lr = state.current_lr();
  state.accumulator = state.smoothing * state.accumulator +
                      (1.0 - state.smoothing) * grads.array().square();
  params.array() -=
      lr * grads.array() / (state.accumulator.sqrt() + state.epsilon);
}

}  // namespace sggru
