#include "changecap/attention.hpp"

#include <cmath>

namespace ccap {

MhaResult multi_head_attention(Graph& g, Var q, Var k, Var v,
                               const AttentionParamsT<Var>& params,
                               const Tensor* additive_mask) {
  const Shape& qs = q.shape();
  const Shape& ks = k.shape();
  const Shape& vs = v.shape();
  if (qs.size() != 2 || ks.size() != 2 || vs.size() != 2 || ks[0] != vs[0])
    throw ShapeError("attention needs 2-D q/k/v with matching key and value counts");
  const size_t heads = params.wq.size();
  const int64_t dk = params.wq[0].shape()[1];
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Var mask;
  if (additive_mask) mask = g.leaf(*additive_mask);

  MhaResult res;
  std::vector<Var> head_outputs;
  head_outputs.reserve(heads);
  for (size_t h = 0; h < heads; ++h) {
    Var qh = g.matmul(q, params.wq[h]);
    Var kh = g.matmul(k, params.wk[h]);
    Var vh = g.matmul(v, params.wv[h]);
    Var logits = g.scalar_mul(g.matmul(qh, g.transpose(kh)), inv_scale);
    if (additive_mask) logits = g.add(logits, mask);
    Var weights = g.softmax(logits, 1);
    res.head_weights.push_back(weights);
    head_outputs.push_back(g.matmul(weights, vh));
  }
  res.output = g.matmul(g.concat(head_outputs, 1), params.wo);
  return res;
}

SharedFeatures shared_features(Graph& g, Var f_bef, Var f_aft, const ModelVars& params,
                               bool subtraction_baseline) {
  SharedFeatures out;
  if (subtraction_baseline) {
    out.before = f_aft;
    out.after = f_bef;
    return out;
  }
  const AttentionParamsT<Var>& fwd = params.diff_attn;
  const AttentionParamsT<Var>& rev = params.diff_attn_rev ? *params.diff_attn_rev
                                                          : params.diff_attn;
  MhaResult b = multi_head_attention(g, f_bef, f_aft, f_aft, fwd);
  MhaResult a = multi_head_attention(g, f_aft, f_bef, f_bef, rev);
  out.before = b.output;
  out.after = a.output;
  out.weights_before = std::move(b.head_weights);
  out.weights_after = std::move(a.head_weights);
  return out;
}

Var difference_features(Graph& g, Var f, Var shared) { return g.sub(f, shared); }

Var fuse_difference(Graph& g, Var d_bef, Var d_aft, const ModelVars& params) {
  Var cat = g.concat({d_bef, d_aft}, 1);
  return g.relu(g.add(g.matmul(cat, params.fuse_w), params.fuse_b));
}

}  // namespace ccap
