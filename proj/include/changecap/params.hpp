#pragma once

#include <optional>
#include <string>
#include <vector>

#include "changecap/graph.hpp"
#include "changecap/rng.hpp"
#include "changecap/tensor.hpp"

namespace ccap {

// Structural dimensions of one model instance. Everything the forward pass
// needs besides the learned tensors.
struct ModelDims {
  int d_model = 512;
  int embed_width = 300;
  int heads = 8;
  int layers = 2;
  int grid_h = 6;
  int grid_w = 6;
  int feat_channels = 32;
  int vocab = 0;
  int max_len = 12;
  bool mlp = true;               // Eq. 2 head (identity when off)
  bool tied_cross_attention = true;
  bool use_dirl = true;          // MLP head tensors exist only when on
  bool subtraction_baseline = false;

  int hw() const { return grid_h * grid_w; }
  int head_width() const { return d_model / heads; }
};

template <class T>
struct AttentionParamsT {
  std::vector<T> wq, wk, wv;  // one (D, d_k) matrix per head
  T wo;                       // (D, D)
};

template <class T>
struct DecoderLayerT {
  AttentionParamsT<T> self_attn;
  AttentionParamsT<T> cross_attn;
  T ffn_w1, ffn_b1;  // (D, 4D), (4D)
  T ffn_w2, ffn_b2;  // (4D, D), (D)
};

template <class T>
struct MlpHeadT {
  T w1, b1, w2, b2;  // (D, D), (D), (D, D), (D)
};

template <class T>
struct ParamSetT {
  T input_proj;  // (C_f, D), the 1x1-conv equivalent
  T pos_table;   // (HW, D)
  std::optional<MlpHeadT<T>> mlp;
  AttentionParamsT<T> diff_attn;                 // Eq. 5, both directions when tied
  std::optional<AttentionParamsT<T>> diff_attn_rev;  // untied second direction
  T fuse_w, fuse_b;  // (2D, D), (D)
  T tok_embed;       // (vocab, E)
  T tok_embed_proj;  // (E, D)
  T tok_pos;         // (max_len, D)
  std::vector<DecoderLayerT<T>> layers;
  T out_w, out_b;  // (D, vocab), (vocab)
};

using ModelParams = ParamSetT<Tensor>;
using ModelVars = ParamSetT<Var>;

// Visits every tensor in a fixed canonical order with a stable name;
// initialization, Adam state, gradient collection and checkpoints all rely
// on this single ordering.
template <class T, class F>
void for_each_param(ParamSetT<T>& p, F&& f) {
  auto visit_attn = [&](AttentionParamsT<T>& a, const std::string& prefix) {
    for (size_t h = 0; h < a.wq.size(); ++h) {
      f(prefix + ".wq" + std::to_string(h), a.wq[h]);
      f(prefix + ".wk" + std::to_string(h), a.wk[h]);
      f(prefix + ".wv" + std::to_string(h), a.wv[h]);
    }
    f(prefix + ".wo", a.wo);
  };
  f("input_proj", p.input_proj);
  f("pos_table", p.pos_table);
  if (p.mlp) {
    f("mlp.w1", p.mlp->w1);
    f("mlp.b1", p.mlp->b1);
    f("mlp.w2", p.mlp->w2);
    f("mlp.b2", p.mlp->b2);
  }
  visit_attn(p.diff_attn, "diff_attn");
  if (p.diff_attn_rev) visit_attn(*p.diff_attn_rev, "diff_attn_rev");
  f("fuse_w", p.fuse_w);
  f("fuse_b", p.fuse_b);
  f("tok_embed", p.tok_embed);
  f("tok_embed_proj", p.tok_embed_proj);
  f("tok_pos", p.tok_pos);
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const std::string lp = "decoder.layer" + std::to_string(l);
    visit_attn(p.layers[l].self_attn, lp + ".self");
    visit_attn(p.layers[l].cross_attn, lp + ".cross");
    f(lp + ".ffn_w1", p.layers[l].ffn_w1);
    f(lp + ".ffn_b1", p.layers[l].ffn_b1);
    f(lp + ".ffn_w2", p.layers[l].ffn_w2);
    f(lp + ".ffn_b2", p.layers[l].ffn_b2);
  }
  f("out_w", p.out_w);
  f("out_b", p.out_b);
}

// Weight matrices: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)); embedding and
// position tables: gaussian sigma=0.02; biases zero.
ModelParams init_params(const ModelDims& dims, uint64_t seed);

std::vector<std::string> param_names(const ModelParams& p);
int64_t param_count(const ModelParams& p);

// Leaves every parameter into the graph, in canonical order.
ModelVars lift_params(Graph& g, const ModelParams& p, bool requires_grad);

// Reads leaf gradients back in canonical order (after backward).
std::vector<Tensor> collect_grads(const ModelVars& vars);

}  // namespace ccap
