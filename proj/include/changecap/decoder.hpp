#pragma once

#include "changecap/params.hpp"
#include "changecap/scene.hpp"
#include "changecap/vocab.hpp"

namespace ccap {

// additive logit masks: 0 where attention is allowed, kMaskedLogit elsewhere
inline constexpr double kMaskedLogit = -1e30;

// causal mask: position i may attend to positions <= i
Tensor causal_mask(int64_t m);
// causal plus PAD-key masking for a concrete token sequence
Tensor causal_pad_mask(const std::vector<int32_t>& tokens);

// token embedding lookup, 300->D projection, learned position rows
Var embed_words(Graph& g, const std::vector<int32_t>& tokens, const ModelVars& params,
                const ModelDims& dims);

// Training-time dropout on sublayer outputs; masks are drawn from the
// trainer's per-iteration stream so runs stay reproducible.
struct DropoutCtx {
  double p = 0.0;
  Rng* rng = nullptr;
};

struct DecoderState {
  Var e_hat;    // relation-embedded word features (post self-attention sublayer)
  Var v_hat;    // attended difference features (post cross-attention sublayer)
  Var v_prime;  // enhanced features (post FFN sublayer)
  std::vector<Var> cross_weights;  // per head (m, HW)
};

DecoderState decoder_layer(Graph& g, Var x, Var f_d, const DecoderLayerT<Var>& params,
                           const Tensor& self_mask, const DropoutCtx* dropout = nullptr);

// softmax(x W_h + b_h) per position
Var vocab_distribution(Graph& g, Var x, const ModelVars& params);

struct DecodeOut {
  Var probs;                // (m, vocab)
  DecoderState final_state; // CCR taps e_hat / v_hat here
};

DecodeOut decode_teacher_forced(Graph& g, const std::vector<int32_t>& input_tokens, Var f_d,
                                const ModelVars& params, const ModelDims& dims,
                                const DropoutCtx* dropout = nullptr);

}  // namespace ccap
