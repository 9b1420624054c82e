#pragma once

#include "changecap/params.hpp"

namespace ccap {

struct MhaResult {
  Var output;                     // (n_q, D)
  std::vector<Var> head_weights;  // per head (n_q, n_k), rows sum to 1
};

// Scaled dot-product attention with per-head projections, concatenated and
// output-projected. An optional additive mask (n_q, n_k) is applied to the
// logits of every head; masked entries should carry a large negative value.
MhaResult multi_head_attention(Graph& g, Var q, Var k, Var v,
                               const AttentionParamsT<Var>& params,
                               const Tensor* additive_mask = nullptr);

struct SharedFeatures {
  Var before;  // features of the before image explained by the after image
  Var after;
  std::vector<Var> weights_before;  // cross-attention weights per head
  std::vector<Var> weights_after;
};

// Cross-attention in both directions; one parameter set serves both unless
// an untied second set exists. The subtraction flag bypasses attention and
// uses the opposite image's features directly (the direct-subtraction
// baseline).
SharedFeatures shared_features(Graph& g, Var f_bef, Var f_aft, const ModelVars& params,
                               bool subtraction_baseline = false);

Var difference_features(Graph& g, Var f, Var shared);

// relu([d_bef ; d_aft] W_c + b_c), concat over the channel axis
Var fuse_difference(Graph& g, Var d_bef, Var d_aft, const ModelVars& params);

}  // namespace ccap
