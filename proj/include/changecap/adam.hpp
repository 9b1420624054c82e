#pragma once

#include "changecap/params.hpp"

namespace ccap {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct AdamState {
  std::vector<Tensor> m;  // first moments, canonical parameter order
  std::vector<Tensor> v;  // second moments
  int64_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

// Single-tensor update with bias correction; t is the 1-based step index.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, int64_t t, double lr);

// Updates every parameter from grads (canonical order). Throws NumericError
// naming the parameter if its gradient is not finite. max_grad_norm > 0
// applies global-norm clipping first.
void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr, double max_grad_norm = 0.0);

}  // namespace ccap
