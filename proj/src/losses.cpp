#include "changecap/losses.hpp"

#include <algorithm>

namespace ccap {

Var caption_loss(Graph& g, Var probs, const std::vector<int32_t>& targets,
                 const std::vector<uint8_t>& mask, bool mean_normalize) {
  const Shape& s = probs.shape();
  if (s.size() != 2 || s[0] != static_cast<int64_t>(targets.size()) ||
      targets.size() != mask.size())
    throw ShapeError("caption loss needs (m, vocab) probabilities aligned with m targets");
  const int64_t m = s[0];
  const int64_t vocab = s[1];
  int64_t unmasked = 0;
  Tensor onehot({m, vocab});
  Tensor padfix({m});  // 1.0 at masked rows so their log term is exactly zero
  for (int64_t t = 0; t < m; ++t) {
    if (!mask[static_cast<size_t>(t)]) {
      padfix.data[static_cast<size_t>(t)] = 1.0;
      continue;
    }
    const int32_t target = targets[static_cast<size_t>(t)];
    if (target < 0 || target >= vocab)
      throw IndexError("caption target " + std::to_string(target) + " outside vocabulary");
    onehot.at(t, target) = 1.0;
    ++unmasked;
  }
  if (unmasked == 0) throw ContractError("caption loss over a fully masked sequence");
  Var picked = g.sum(g.mul(probs, g.leaf(std::move(onehot))), 1);  // (m,) target probabilities
  Var log_p = g.log(g.add(picked, g.leaf(std::move(padfix))));
  Var total = g.scalar_mul(g.sum_all(log_p), -1.0);
  return mean_normalize ? g.scalar_mul(total, 1.0 / static_cast<double>(unmasked)) : total;
}

Var mean_pool_words(Graph& g, Var e_hat, const std::vector<uint8_t>& mask) {
  const Shape& s = e_hat.shape();
  if (s.size() != 2 || s[0] != static_cast<int64_t>(mask.size()))
    throw ShapeError("pooling mask length does not match the sequence length");
  const int64_t count = std::count(mask.begin(), mask.end(), uint8_t{1});
  if (count == 0) throw ContractError("cannot pool a fully masked sequence");
  Tensor weights({1, s[0]});
  const double w = 1.0 / static_cast<double>(count);
  for (int64_t t = 0; t < s[0]; ++t)
    if (mask[static_cast<size_t>(t)]) weights.at(0, t) = w;
  return g.reshape(g.matmul(g.leaf(std::move(weights)), e_hat), {s[1]});
}

Var mean_pool_visual(Graph& g, Var v_hat) {
  if (v_hat.shape().size() != 2) throw ShapeError("pooling needs a 2-D input");
  return g.mean(v_hat, 0);
}

Var similarity_matrix(Graph& g, Var pooled_words, Var pooled_visual, bool cosine) {
  const Shape& a = pooled_words.shape();
  const Shape& b = pooled_visual.shape();
  if (a.size() != 2 || a != b)
    throw ShapeError("similarity needs two equal (B, D) batches, got " + shape_str(a) + " and " +
                     shape_str(b));
  if (cosine) {
    auto normalize = [&](Var x) {
      Var inv_norm = g.exp(g.scalar_mul(g.log(g.sqrt(g.sum(g.square(x), 1))), -1.0));  // (B,)
      Var scale = g.matmul(g.reshape(inv_norm, {a[0], 1}), g.leaf(Tensor::full({1, a[1]}, 1.0)));
      return g.mul(x, scale);
    };
    pooled_words = normalize(pooled_words);
    pooled_visual = normalize(pooled_visual);
  }
  return g.matmul(pooled_words, g.transpose(pooled_visual));
}

namespace {

// -(1/B) sum_k [ S_kk/tau - logsumexp_r(S_kr/tau) ], with the row max
// subtracted as a constant inside each log-sum-exp. The shift is exact for
// both value and gradient.
Var nce_direction(Graph& g, Var scaled) {
  const int64_t b = scaled.shape()[0];
  const Tensor& s = scaled.value();
  Tensor row_max_neg({b, b});
  Tensor row_max({b});
  for (int64_t i = 0; i < b; ++i) {
    double mx = s.at(i, 0);
    for (int64_t j = 1; j < b; ++j) mx = std::max(mx, s.at(i, j));
    row_max.data[static_cast<size_t>(i)] = mx;
    for (int64_t j = 0; j < b; ++j) row_max_neg.at(i, j) = -mx;
  }
  Var shifted = g.add(scaled, g.leaf(std::move(row_max_neg)));
  Var lse = g.add(g.log(g.sum(g.exp(shifted), 1)), g.leaf(std::move(row_max)));  // (B,)
  Var diag = g.sum_all(g.mul(scaled, g.leaf(Tensor::identity(b))));
  return g.scalar_mul(g.sub(g.sum_all(lse), diag), 1.0 / static_cast<double>(b));
}

}  // namespace

Var infonce(Graph& g, Var sim, double tau) {
  if (!(tau > 0.0)) throw ContractError("temperature must be positive");
  const Shape& s = sim.shape();
  if (s.size() != 2 || s[0] != s[1] || s[0] < 1)
    throw ShapeError("similarity matrix must be square, got " + shape_str(s));
  Var scaled = g.scalar_mul(sim, 1.0 / tau);
  Var t2v = nce_direction(g, scaled);
  Var v2t = nce_direction(g, g.transpose(scaled));
  return g.scalar_mul(g.add(t2v, v2t), 0.5);
}

}  // namespace ccap
