#pragma once

#include <string>
#include <vector>

#include "changecap/scene.hpp"

namespace ccap {

using TokenList = std::vector<std::string>;

// Corpus-level BLEU with uniform 1..4-gram weights, modified precision,
// brevity penalty and no smoothing: a zero n-gram overlap yields 0.
double bleu4(const std::vector<TokenList>& candidates, const std::vector<TokenList>& references);

// fraction of candidates token-identical to their reference
double exact_match(const std::vector<TokenList>& candidates,
                   const std::vector<TokenList>& references);

// fraction of aligned positions with equal tokens, over max(len_c, len_r)
double token_accuracy(const std::vector<TokenList>& candidates,
                      const std::vector<TokenList>& references);

struct AttentionMap {
  int height = 0;
  int width = 0;
  std::vector<std::string> token_labels;  // one per generated token
  std::vector<Tensor> token_maps;         // (H, W) each, rows of a softmax
  Tensor aggregate;                       // mean over content-token maps
};

// hit iff the aggregate argmax (lowest index on ties) falls inside the
// changed cells or their 8-neighborhood on the cyclic grid
bool pointing_game(const AttentionMap& attn, const std::vector<Cell>& change_cells);

}  // namespace ccap
