#include "changecap/adam.hpp"

#include <cmath>

namespace ccap {

AdamState make_adam_state(const ModelParams& params) {
  AdamState state;
  for_each_param(const_cast<ModelParams&>(params), [&](const std::string&, Tensor& t) {
    state.m.push_back(Tensor::zeros(t.shape));
    state.v.push_back(Tensor::zeros(t.shape));
  });
  return state;
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, int64_t t, double lr) {
  if (!same_shape(param, grad) || !same_shape(param, m) || !same_shape(param, v))
    throw ShapeError("adam update with mismatched parameter/gradient/state shapes");
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (size_t i = 0; i < param.data.size(); ++i) {
    const double gi = grad.data[i];
    m.data[i] = kAdamBeta1 * m.data[i] + (1.0 - kAdamBeta1) * gi;
    v.data[i] = kAdamBeta2 * v.data[i] + (1.0 - kAdamBeta2) * gi * gi;
    const double m_hat = m.data[i] / bc1;
    const double v_hat = v.data[i] / bc2;
    param.data[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
  }
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr, double max_grad_norm) {
  std::vector<Tensor*> targets;
  std::vector<std::string> names;
  for_each_param(params, [&](const std::string& name, Tensor& t) {
    targets.push_back(&t);
    names.push_back(name);
  });
  if (grads.size() != targets.size() || state.m.size() != targets.size())
    throw ContractError("gradient/state count does not match the parameter set");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].all_finite())
      throw NumericError("non-finite gradient for parameter " + names[i]);
  }

  double clip_scale = 1.0;
  if (max_grad_norm > 0.0) {
    double sq = 0.0;
    for (const Tensor& gt : grads)
      for (double v : gt.data) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_grad_norm) clip_scale = max_grad_norm / norm;
  }

  ++state.step;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (clip_scale != 1.0) {
      Tensor scaled = grads[i];
      for (double& v : scaled.data) v *= clip_scale;
      adam_update(*targets[i], scaled, state.m[i], state.v[i], state.step, lr);
    } else {
      adam_update(*targets[i], grads[i], state.m[i], state.v[i], state.step, lr);
    }
  }
}

}  // namespace ccap
