#include "changecap/model.hpp"

namespace ccap {

Var difference_pipeline(Graph& g, const ModelVars& params, const ModelDims& dims, Var grid_bef,
                        Var grid_aft) {
  Var f_bef = project_embed(g, grid_bef, params);
  Var f_aft = project_embed(g, grid_aft, params);
  SharedFeatures shared = shared_features(g, f_bef, f_aft, params, dims.subtraction_baseline);
  Var d_bef = difference_features(g, f_bef, shared.before);
  Var d_aft = difference_features(g, f_aft, shared.after);
  return fuse_difference(g, d_bef, d_aft, params);
}

ForwardOut forward_caption(Graph& g, const ModelVars& params, const ModelDims& dims,
                           Var grid_bef, Var grid_aft,
                           const std::vector<int32_t>& input_tokens,
                           const DropoutCtx* dropout) {
  ForwardOut out;
  out.f_bef = project_embed(g, grid_bef, params);
  out.f_aft = project_embed(g, grid_aft, params);
  SharedFeatures shared =
      shared_features(g, out.f_bef, out.f_aft, params, dims.subtraction_baseline);
  Var d_bef = difference_features(g, out.f_bef, shared.before);
  Var d_aft = difference_features(g, out.f_aft, shared.after);
  out.f_diff = fuse_difference(g, d_bef, d_aft, params);
  DecodeOut dec = decode_teacher_forced(g, input_tokens, out.f_diff, params, dims, dropout);
  out.probs = dec.probs;
  out.e_hat = dec.final_state.e_hat;
  out.v_hat = dec.final_state.v_hat;
  out.cross_weights = std::move(dec.final_state.cross_weights);
  return out;
}

GreedyResult greedy_decode(const ModelParams& params, const ModelDims& dims,
                           const FeatureGrid& before, const FeatureGrid& after, int max_len) {
  if (max_len < 2) throw ContractError("max_len must be >= 2");

  // Fd does not depend on the prefix; compute it once as a plain tensor.
  Tensor f_diff_value;
  {
    Graph g;
    ModelVars vars = lift_params(g, params, false);
    Var fd = difference_pipeline(g, vars, dims, g.leaf(before.as_tensor()),
                                 g.leaf(after.as_tensor()));
    f_diff_value = fd.value();
  }

  GreedyResult res;
  res.tokens = {Vocab::kBos};
  const int64_t hw = dims.hw();
  while (static_cast<int>(res.tokens.size()) < max_len) {
    Graph g;
    ModelVars vars = lift_params(g, params, false);
    Var f_diff = g.leaf(f_diff_value);
    DecodeOut dec = decode_teacher_forced(g, res.tokens, f_diff, vars, dims);
    const Tensor& probs = dec.probs.value();
    const int64_t last = probs.rows() - 1;
    int32_t best = 0;
    double best_p = probs.at(last, 0);
    for (int64_t v = 1; v < probs.cols(); ++v) {
      if (probs.at(last, v) > best_p) {
        best_p = probs.at(last, v);
        best = static_cast<int32_t>(v);
      }
    }
    // head-averaged cross-attention row for the token being generated
    Tensor attn({hw});
    const auto& heads = dec.final_state.cross_weights;
    for (const Var& w : heads) {
      const Tensor& wt = w.value();
      for (int64_t i = 0; i < hw; ++i) attn.data[static_cast<size_t>(i)] += wt.at(last, i);
    }
    const double inv = 1.0 / static_cast<double>(heads.size());
    for (double& v : attn.data) v *= inv;

    res.tokens.push_back(best);
    res.token_attention.push_back(std::move(attn));
    if (best == Vocab::kEos) return res;
  }
  res.truncated = true;
  return res;
}

}  // namespace ccap
