#include "sggru/model.hpp"

#include <algorithm>
#include <utility>

namespace sggru {

SgGruModel init_model(int n, int m, int k, int tau, int horizon,
                      const SamplingPlan& plan, std::uint64_t seed,
                      Activation candidate) {
  if (k <= 0) k = default_band_size(m);
  require(n > 0 && m > 0 && k > 0 && tau > 0 && horizon > 0,
          "init model: dimensions must be positive");
  require(m <= n && k <= m, "init model: need K <= M <= N");
  require(plan.n_nodes == n && plan.m() == m && plan.k() == k,
          "init model: plan inconsistent with (n, m, k)");

  SgGruModel model;
  Rng rng(seed);
  model.gru = GruParams::random_init(m, candidate, rng);
  model.sgru = GruParams::random_init(k, candidate, rng);
  model.fusion = DenseParams::random_init(n, 2 * n, rng);
  model.plan = plan;
  model.truncated_gft = Matrix(k, m);
  for (int i = 0; i < m; ++i) {
    model.truncated_gft.col(i) = plan.band_basis.row(plan.sample_nodes[i]).transpose();
  }
  model.dims = {n, m, k, tau, horizon};
  model.seed = seed;
  return model;
}

SgGruTrace forward(const SgGruModel& model, const Matrix& window) {
  const auto& d = model.dims;
  require(window.rows() == d.tau && window.cols() == d.m,
          "sggru forward: window shape mismatch");

  SgGruTrace trace;
  trace.gru.reserve(d.tau);
  trace.sgru.reserve(d.tau);
  trace.spectral_inputs.reserve(d.tau);

  Vector h = Vector::Zero(d.m);
  Vector hs = Vector::Zero(d.k);
  for (int t = 0; t < d.tau; ++t) {
    const Vector x = window.row(t).transpose();
    trace.gru.push_back(gru_cell_forward(x, h, model.gru));
    h = trace.gru.back().h;

    Vector xhat = model.truncated_gft * x;
    trace.sgru.push_back(gru_cell_forward(xhat, hs, model.sgru));
    hs = trace.sgru.back().h;
    trace.spectral_inputs.push_back(std::move(xhat));
  }
  trace.y_sampled = h;
  trace.z_freq = hs;
  trace.y_full = model.plan.interpolator * trace.y_sampled;
  trace.z_full = model.plan.spectral_interpolator * trace.z_freq;
  trace.stacked.resize(2 * d.n);
  trace.stacked << trace.y_full, trace.z_full;
  trace.prediction = dense_forward(trace.stacked, model.fusion);
  if (!trace.prediction.allFinite()) {
    throw numerical_error("sggru forward: non-finite prediction");
  }
  return trace;
}

SgGruGrads backward(const SgGruModel& model, const SgGruTrace& trace,
                    const Vector& prediction_grad) {
  const auto& d = model.dims;
  require(prediction_grad.size() == d.n, "sggru backward: gradient size mismatch");
  require(static_cast<int>(trace.gru.size()) == d.tau, "sggru backward: stale trace");

  SgGruGrads grads;
  const DenseGrads fusion = dense_backward(trace.stacked, model.fusion, prediction_grad);
  grads.fusion_weight = fusion.weight;
  grads.fusion_bias = fusion.bias;

  const Vector dy_full = fusion.input.head(d.n);
  const Vector dz_full = fusion.input.tail(d.n);
  const Vector dy_sampled = model.plan.interpolator.transpose() * dy_full;
  const Vector dz_freq = model.plan.spectral_interpolator.transpose() * dz_full;

  std::vector<Vector> gru_out(d.tau, Vector::Zero(d.m));
  gru_out.back() = dy_sampled;
  grads.gru = gru_sequence_backward(model.gru, trace.gru, gru_out).params;

  std::vector<Vector> sgru_out(d.tau, Vector::Zero(d.k));
  sgru_out.back() = dz_freq;
  grads.sgru = gru_sequence_backward(model.sgru, trace.sgru, sgru_out).params;
  return grads;
}

BaselineGruModel init_baseline(int n, int m, int tau, int horizon,
                               const SamplingPlan& plan, std::uint64_t seed,
                               Activation candidate) {
  require(n > 0 && m > 0 && tau > 0 && horizon > 0,
          "init baseline: dimensions must be positive");
  require(plan.n_nodes == n && plan.m() == m,
          "init baseline: plan inconsistent with (n, m)");
  BaselineGruModel model;
  Rng rng(seed);
  model.gru = GruParams::random_init(m, candidate, rng);
  model.plan = plan;
  model.dims = {n, m, 0, tau, horizon};
  model.seed = seed;
  return model;
}

BaselineTrace forward(const BaselineGruModel& model, const Matrix& window) {
  const auto& d = model.dims;
  require(window.rows() == d.tau && window.cols() == d.m,
          "baseline forward: window shape mismatch");
  BaselineTrace trace;
  trace.gru.reserve(d.tau);
  Vector h = Vector::Zero(d.m);
  for (int t = 0; t < d.tau; ++t) {
    trace.gru.push_back(gru_cell_forward(window.row(t).transpose(), h, model.gru));
    h = trace.gru.back().h;
  }
  trace.y_sampled = h;
  trace.prediction = model.plan.interpolator * h;
  if (!trace.prediction.allFinite()) {
    throw numerical_error("baseline forward: non-finite prediction");
  }
  return trace;
}

GruGrads backward(const BaselineGruModel& model, const BaselineTrace& trace,
                  const Vector& prediction_grad) {
  const auto& d = model.dims;
  require(prediction_grad.size() == d.n, "baseline backward: gradient size mismatch");
  std::vector<Vector> out(d.tau, Vector::Zero(d.m));
  out.back() = model.plan.interpolator.transpose() * prediction_grad;
  return gru_sequence_backward(model.gru, trace.gru, out).params;
}

Eigen::Index param_count(const SgGruModel& model) {
  return gru_param_count(model.dims.m) + gru_param_count(model.dims.k) +
         model.fusion.weight.size() + model.fusion.bias.size();
}

Vector param_vector(const SgGruModel& model) {
  Vector flat(param_count(model));
  Eigen::Index offset = 0;
  const Vector gru = gru_param_vector(model.gru);
  std::copy(gru.data(), gru.data() + gru.size(), flat.data() + offset);
  offset += gru.size();
  const Vector sgru = gru_param_vector(model.sgru);
  std::copy(sgru.data(), sgru.data() + sgru.size(), flat.data() + offset);
  offset += sgru.size();
  std::copy(model.fusion.weight.data(),
            model.fusion.weight.data() + model.fusion.weight.size(),
            flat.data() + offset);
  offset += model.fusion.weight.size();
  std::copy(model.fusion.bias.data(),
            model.fusion.bias.data() + model.fusion.bias.size(), flat.data() + offset);
  return flat;
}

void set_param_vector(SgGruModel& model, const Vector& params) {
  require(params.size() == param_count(model), "set params: size mismatch");
  Eigen::Index offset = 0;
  const Eigen::Index gru_size = gru_param_count(model.dims.m);
  set_gru_param_vector(model.gru, params.segment(offset, gru_size));
  offset += gru_size;
  const Eigen::Index sgru_size = gru_param_count(model.dims.k);
  set_gru_param_vector(model.sgru, params.segment(offset, sgru_size));
  offset += sgru_size;
  std::copy(params.data() + offset,
            params.data() + offset + model.fusion.weight.size(),
            model.fusion.weight.data());
  offset += model.fusion.weight.size();
  std::copy(params.data() + offset,
            params.data() + offset + model.fusion.bias.size(),
            model.fusion.bias.data());
}

Vector grad_vector(const SgGruModel& model, const SgGruGrads& grads) {
  Vector flat(param_count(model));
  Eigen::Index offset = 0;
  const Vector gru = gru_grad_vector(grads.gru);
  std::copy(gru.data(), gru.data() + gru.size(), flat.data() + offset);
  offset += gru.size();
  const Vector sgru = gru_grad_vector(grads.sgru);
  std::copy(sgru.data(), sgru.data() + sgru.size(), flat.data() + offset);
  offset += sgru.size();
  std::copy(grads.fusion_weight.data(),
            grads.fusion_weight.data() + grads.fusion_weight.size(),
            flat.data() + offset);
  offset += grads.fusion_weight.size();
  std::copy(grads.fusion_bias.data(),
            grads.fusion_bias.data() + grads.fusion_bias.size(), flat.data() + offset);
  return flat;
}

Eigen::Index param_count(const BaselineGruModel& model) {
  return gru_param_count(model.dims.m);
}

Vector param_vector(const BaselineGruModel& model) {
  return gru_param_vector(model.gru);
}

void set_param_vector(BaselineGruModel& model, const Vector& params) {
  set_gru_param_vector(model.gru, params);
}

Vector grad_vector(const BaselineGruModel& model, const GruGrads& grads) {
  (void)model;
  return gru_grad_vector(grads);
}

long long estimate_flops(int n, int m, int k, int tau) {
  require(n > 0 && m > 0 && k >= 0 && tau > 0, "flops: dimensions must be positive");
  const long long nn = n, mm = m, kk = k, tt = tau;
  return kk * mm + 6 * tt * (mm * mm + kk * kk) + nn * (kk + mm) + 2 * nn * nn;
}

}  // namespace sggru
