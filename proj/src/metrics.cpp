#include "changecap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ccap {

namespace {

std::map<std::vector<std::string>, int64_t> ngram_counts(const TokenList& tokens, size_t n) {
  std::map<std::vector<std::string>, int64_t> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

double bleu4(const std::vector<TokenList>& candidates, const std::vector<TokenList>& references) {
  if (candidates.empty()) throw ContractError("BLEU needs a non-empty candidate corpus");
  if (candidates.size() != references.size())
    throw ContractError("BLEU needs one reference per candidate");

  double log_precision = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    int64_t clipped = 0, total = 0;
    for (size_t i = 0; i < candidates.size(); ++i) {
      const auto cand = ngram_counts(candidates[i], n);
      const auto ref = ngram_counts(references[i], n);
      for (const auto& [gram, count] : cand) {
        const auto it = ref.find(gram);
        clipped += std::min(count, it == ref.end() ? int64_t{0} : it->second);
        total += count;
      }
    }
    if (clipped == 0 || total == 0) return 0.0;
    log_precision += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }

  int64_t cand_len = 0, ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<int64_t>(candidates[i].size());
    ref_len += static_cast<int64_t>(references[i].size());
  }
  if (cand_len == 0) return 0.0;
  const double bp =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_precision / 4.0);
}

double exact_match(const std::vector<TokenList>& candidates,
                   const std::vector<TokenList>& references) {
  if (candidates.size() != references.size() || candidates.empty())
    throw ContractError("exact match needs matching non-empty corpora");
  int64_t hits = 0;
  for (size_t i = 0; i < candidates.size(); ++i) hits += candidates[i] == references[i];
  return static_cast<double>(hits) / static_cast<double>(candidates.size());
}

double token_accuracy(const std::vector<TokenList>& candidates,
                      const std::vector<TokenList>& references) {
  if (candidates.size() != references.size() || candidates.empty())
    throw ContractError("token accuracy needs matching non-empty corpora");
  int64_t correct = 0, total = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const size_t common = std::min(candidates[i].size(), references[i].size());
    for (size_t t = 0; t < common; ++t) correct += candidates[i][t] == references[i][t];
    total += static_cast<int64_t>(std::max(candidates[i].size(), references[i].size()));
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

bool pointing_game(const AttentionMap& attn, const std::vector<Cell>& change_cells) {
  if (change_cells.empty())
    throw ContractError("pointing game needs at least one changed cell");
  const Tensor& map = attn.aggregate;
  if (map.rank() != 2) throw ShapeError("aggregate attention map must be 2-D");
  const int64_t h = map.rows(), w = map.cols();
  int64_t best = 0;
  for (int64_t i = 1; i < h * w; ++i)
    if (map.data[static_cast<size_t>(i)] > map.data[static_cast<size_t>(best)]) best = i;
  const int br = static_cast<int>(best / w);
  const int bc = static_cast<int>(best % w);
  for (const Cell& cell : change_cells) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        // cyclic neighborhood: shift distractors wrap the grid, so does the ring
        const int rr = ((cell.row + dr) % static_cast<int>(h) + static_cast<int>(h)) %
                       static_cast<int>(h);
        const int cc = ((cell.col + dc) % static_cast<int>(w) + static_cast<int>(w)) %
                       static_cast<int>(w);
        if (rr == br && cc == bc) return true;
      }
    }
  }
  return false;
}

}  // namespace ccap
