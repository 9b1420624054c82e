#include "changecap/decoder.hpp"

#include "changecap/attention.hpp"

namespace ccap {

Tensor causal_mask(int64_t m) {
  Tensor mask({m, m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = i + 1; j < m; ++j) mask.at(i, j) = kMaskedLogit;
  return mask;
}

Tensor causal_pad_mask(const std::vector<int32_t>& tokens) {
  const int64_t m = static_cast<int64_t>(tokens.size());
  Tensor mask = causal_mask(m);
  for (int64_t j = 0; j < m; ++j) {
    if (tokens[static_cast<size_t>(j)] != Vocab::kPad) continue;
    for (int64_t i = 0; i < m; ++i) mask.at(i, j) = kMaskedLogit;
  }
  return mask;
}

Var embed_words(Graph& g, const std::vector<int32_t>& tokens, const ModelVars& params,
                const ModelDims& dims) {
  const int64_t m = static_cast<int64_t>(tokens.size());
  if (m == 0) throw ContractError("cannot embed an empty token sequence");
  if (m > dims.max_len)
    throw ContractError("sequence of " + std::to_string(m) + " tokens exceeds max_len " +
                        std::to_string(dims.max_len));
  Var emb = g.matmul(g.embedding(params.tok_embed, tokens), params.tok_embed_proj);
  // first m rows of the position table, selected by a constant 0/1 matrix
  Tensor sel({m, dims.max_len});
  for (int64_t i = 0; i < m; ++i) sel.at(i, i) = 1.0;
  Var pos = g.matmul(g.leaf(std::move(sel)), params.tok_pos);
  return g.add(emb, pos);
}

namespace {

Var maybe_dropout(Graph& g, Var x, const DropoutCtx* ctx) {
  if (!ctx || ctx->p <= 0.0) return x;
  Tensor mask(x.shape());
  const double keep = 1.0 - ctx->p;
  for (double& v : mask.data) v = ctx->rng->uniform() < ctx->p ? 0.0 : 1.0 / keep;
  return g.mul(x, g.leaf(std::move(mask)));
}

}  // namespace

DecoderState decoder_layer(Graph& g, Var x, Var f_d, const DecoderLayerT<Var>& params,
                           const Tensor& self_mask, const DropoutCtx* dropout) {
  DecoderState state;
  MhaResult self = multi_head_attention(g, x, x, x, params.self_attn, &self_mask);
  state.e_hat = g.layer_norm(g.add(x, maybe_dropout(g, self.output, dropout)));
  MhaResult cross = multi_head_attention(g, state.e_hat, f_d, f_d, params.cross_attn);
  state.cross_weights = std::move(cross.head_weights);
  state.v_hat = g.layer_norm(g.add(state.e_hat, maybe_dropout(g, cross.output, dropout)));
  Var ffn = g.add(g.matmul(g.relu(g.add(g.matmul(state.v_hat, params.ffn_w1), params.ffn_b1)),
                           params.ffn_w2),
                  params.ffn_b2);
  state.v_prime = g.layer_norm(g.add(state.v_hat, maybe_dropout(g, ffn, dropout)));
  return state;
}

Var vocab_distribution(Graph& g, Var x, const ModelVars& params) {
  return g.softmax(g.add(g.matmul(x, params.out_w), params.out_b), 1);
}

DecodeOut decode_teacher_forced(Graph& g, const std::vector<int32_t>& input_tokens, Var f_d,
                                const ModelVars& params, const ModelDims& dims,
                                const DropoutCtx* dropout) {
  const Tensor mask = causal_pad_mask(input_tokens);
  Var x = embed_words(g, input_tokens, params, dims);
  DecodeOut out;
  for (const auto& layer : params.layers) {
    out.final_state = decoder_layer(g, x, f_d, layer, mask, dropout);
    x = out.final_state.v_prime;
  }
  out.probs = vocab_distribution(g, x, params);
  return out;
}

}  // namespace ccap
