#pragma once

#include "changecap/attention.hpp"
#include "changecap/decoder.hpp"
#include "changecap/encoder.hpp"
#include "changecap/scene.hpp"

namespace ccap {

// Teacher-forced forward pass over one sample pair.
struct ForwardOut {
  Var f_bef, f_aft;  // position-embedded projections (Eq. 1 outputs)
  Var f_diff;        // fused difference features
  Var probs;         // (m_in, vocab)
  Var e_hat, v_hat;  // final-layer states consumed by the contrastive loss
  std::vector<Var> cross_weights;  // final layer, per head (m_in, HW)
};

ForwardOut forward_caption(Graph& g, const ModelVars& params, const ModelDims& dims,
                           Var grid_bef, Var grid_aft,
                           const std::vector<int32_t>& input_tokens,
                           const DropoutCtx* dropout = nullptr);

// Fused difference features only (used at inference, Fd is decode-invariant).
Var difference_pipeline(Graph& g, const ModelVars& params, const ModelDims& dims, Var grid_bef,
                        Var grid_aft);

struct GreedyResult {
  std::vector<int32_t> tokens;  // BOS ... (EOS when terminated)
  bool truncated = false;
  // per generated token: head-averaged final-layer cross-attention, (HW)
  std::vector<Tensor> token_attention;
};

// Iterative argmax decoding; ties break toward the lowest token id.
GreedyResult greedy_decode(const ModelParams& params, const ModelDims& dims,
                           const FeatureGrid& before, const FeatureGrid& after, int max_len);

}  // namespace ccap
