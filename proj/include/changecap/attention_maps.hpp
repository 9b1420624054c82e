#pragma once

#include "changecap/metrics.hpp"
#include "changecap/model.hpp"
#include "changecap/vocab.hpp"

namespace ccap {

// Reshapes per-token cross-attention rows to (H, W) maps and aggregates the
// content tokens (sentinels excluded; falls back to all generated tokens
// when the caption is empty).
AttentionMap build_attention_map(const GreedyResult& result, const Vocab& vocab, int height,
                                 int width);

// One max-normalized 8-bit P5 graymap per token, named
// <token_index>_<token>.pgm, plus aggregate.pgm.
void export_attention(const AttentionMap& attn, const std::string& dir);

struct Pgm {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;
};
Pgm read_pgm(const std::string& path);

}  // namespace ccap
