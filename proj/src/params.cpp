#include "changecap/params.hpp"

#include <cmath>

namespace ccap {

namespace {

Tensor uniform_fan_in(Rng& rng, int64_t rows, int64_t cols) {
  Tensor t({rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

Tensor gaussian_table(Rng& rng, int64_t rows, int64_t cols, double sigma) {
  Tensor t({rows, cols});
  for (double& v : t.data) v = rng.gaussian(0.0, sigma);
  return t;
}

AttentionParamsT<Tensor> init_attention(Rng& rng, int d_model, int heads) {
  AttentionParamsT<Tensor> a;
  const int dk = d_model / heads;
  for (int h = 0; h < heads; ++h) {
    a.wq.push_back(uniform_fan_in(rng, d_model, dk));
    a.wk.push_back(uniform_fan_in(rng, d_model, dk));
    a.wv.push_back(uniform_fan_in(rng, d_model, dk));
  }
  a.wo = uniform_fan_in(rng, d_model, d_model);
  return a;
}

}  // namespace

ModelParams init_params(const ModelDims& dims, uint64_t seed) {
  if (dims.d_model % dims.heads != 0)
    throw ContractError("head count must divide the hidden size");
  if (dims.vocab < 4) throw ContractError("vocabulary must include the reserved tokens");
  Rng rng(mix_seed(seed, 0x706172616d73ULL));  // "params"
  const int D = dims.d_model;
  ModelParams p;
  p.input_proj = uniform_fan_in(rng, dims.feat_channels, D);
  p.pos_table = gaussian_table(rng, dims.hw(), D, 0.02);
  if (dims.use_dirl) {
    MlpHeadT<Tensor> mlp;
    mlp.w1 = uniform_fan_in(rng, D, D);
    mlp.b1 = Tensor::zeros({D});
    mlp.w2 = uniform_fan_in(rng, D, D);
    mlp.b2 = Tensor::zeros({D});
    p.mlp = std::move(mlp);
  }
  p.diff_attn = init_attention(rng, D, dims.heads);
  if (!dims.tied_cross_attention) p.diff_attn_rev = init_attention(rng, D, dims.heads);
  p.fuse_w = uniform_fan_in(rng, 2 * D, D);
  p.fuse_b = Tensor::zeros({D});
  p.tok_embed = gaussian_table(rng, dims.vocab, dims.embed_width, 0.02);
  p.tok_embed_proj = uniform_fan_in(rng, dims.embed_width, D);
  p.tok_pos = gaussian_table(rng, dims.max_len, D, 0.02);
  for (int l = 0; l < dims.layers; ++l) {
    DecoderLayerT<Tensor> layer;
    layer.self_attn = init_attention(rng, D, dims.heads);
    layer.cross_attn = init_attention(rng, D, dims.heads);
    layer.ffn_w1 = uniform_fan_in(rng, D, 4 * D);
    layer.ffn_b1 = Tensor::zeros({4 * D});
    layer.ffn_w2 = uniform_fan_in(rng, 4 * D, D);
    layer.ffn_b2 = Tensor::zeros({D});
    p.layers.push_back(std::move(layer));
  }
  p.out_w = uniform_fan_in(rng, D, dims.vocab);
  p.out_b = Tensor::zeros({dims.vocab});
  return p;
}

std::vector<std::string> param_names(const ModelParams& p) {
  std::vector<std::string> names;
  for_each_param(const_cast<ModelParams&>(p),
                 [&](const std::string& name, Tensor&) { names.push_back(name); });
  return names;
}

int64_t param_count(const ModelParams& p) {
  int64_t n = 0;
  for_each_param(const_cast<ModelParams&>(p),
                 [&](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

ModelVars lift_params(Graph& g, const ModelParams& p, bool requires_grad) {
  ModelVars vars;
  auto lift_attn = [&](const AttentionParamsT<Tensor>& a) {
    AttentionParamsT<Var> out;
    for (size_t h = 0; h < a.wq.size(); ++h) {
      out.wq.push_back(g.leaf(a.wq[h], requires_grad));
      out.wk.push_back(g.leaf(a.wk[h], requires_grad));
      out.wv.push_back(g.leaf(a.wv[h], requires_grad));
    }
    out.wo = g.leaf(a.wo, requires_grad);
    return out;
  };
  vars.input_proj = g.leaf(p.input_proj, requires_grad);
  vars.pos_table = g.leaf(p.pos_table, requires_grad);
  if (p.mlp) {
    MlpHeadT<Var> mlp;
    mlp.w1 = g.leaf(p.mlp->w1, requires_grad);
    mlp.b1 = g.leaf(p.mlp->b1, requires_grad);
    mlp.w2 = g.leaf(p.mlp->w2, requires_grad);
    mlp.b2 = g.leaf(p.mlp->b2, requires_grad);
    vars.mlp = mlp;
  }
  vars.diff_attn = lift_attn(p.diff_attn);
  if (p.diff_attn_rev) vars.diff_attn_rev = lift_attn(*p.diff_attn_rev);
  vars.fuse_w = g.leaf(p.fuse_w, requires_grad);
  vars.fuse_b = g.leaf(p.fuse_b, requires_grad);
  vars.tok_embed = g.leaf(p.tok_embed, requires_grad);
  vars.tok_embed_proj = g.leaf(p.tok_embed_proj, requires_grad);
  vars.tok_pos = g.leaf(p.tok_pos, requires_grad);
  for (const auto& layer : p.layers) {
    DecoderLayerT<Var> lv;
    lv.self_attn = lift_attn(layer.self_attn);
    lv.cross_attn = lift_attn(layer.cross_attn);
    lv.ffn_w1 = g.leaf(layer.ffn_w1, requires_grad);
    lv.ffn_b1 = g.leaf(layer.ffn_b1, requires_grad);
    lv.ffn_w2 = g.leaf(layer.ffn_w2, requires_grad);
    lv.ffn_b2 = g.leaf(layer.ffn_b2, requires_grad);
    vars.layers.push_back(std::move(lv));
  }
  vars.out_w = g.leaf(p.out_w, requires_grad);
  vars.out_b = g.leaf(p.out_b, requires_grad);
  return vars;
}

std::vector<Tensor> collect_grads(const ModelVars& vars) {
  std::vector<Tensor> grads;
  for_each_param(const_cast<ModelVars&>(vars),
                 [&](const std::string&, Var& v) { grads.push_back(v.grad()); });
  return grads;
}

}  // namespace ccap
