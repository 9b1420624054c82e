#pragma once

#include "changecap/graph.hpp"
#include "changecap/vocab.hpp"

namespace ccap {

// Negative log-likelihood of the target tokens under the per-position
// distributions. mean_normalize divides by the unmasked token count;
// otherwise the printed per-sequence sum is returned.
Var caption_loss(Graph& g, Var probs, const std::vector<int32_t>& targets,
                 const std::vector<uint8_t>& mask, bool mean_normalize = true);

// mean over unmasked rows of a (m, D) matrix
Var mean_pool_words(Graph& g, Var e_hat, const std::vector<uint8_t>& mask);

// mean over all rows (the sequence axis)
Var mean_pool_visual(Graph& g, Var v_hat);

// raw dot products (B, B); cosine normalizes both sides first
Var similarity_matrix(Graph& g, Var pooled_words, Var pooled_visual, bool cosine = false);

// symmetric InfoNCE over a similarity matrix, diagonal entries positive
Var infonce(Graph& g, Var sim, double tau);

}  // namespace ccap
