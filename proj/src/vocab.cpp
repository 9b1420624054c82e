#include "changecap/vocab.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "changecap/tensor.hpp"

namespace ccap {

std::vector<uint8_t> TokenSequence::mask() const {
  std::vector<uint8_t> m(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) m[i] = ids[i] != Vocab::kPad;
  return m;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Vocab Vocab::build(const std::vector<std::string>& captions) {
  if (captions.empty()) throw ContractError("cannot build a vocabulary from an empty caption list");
  std::set<std::string> uniq;
  for (const std::string& c : captions)
    for (const std::string& t : tokenize(c)) uniq.insert(t);
  std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>"};
  tokens.insert(tokens.end(), uniq.begin(), uniq.end());
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 4) throw ContractError("vocabulary must include the four reserved tokens");
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (size_t i = 0; i < v.tokens_.size(); ++i)
    v.index_[v.tokens_[i]] = static_cast<int32_t>(i);
  return v;
}

const std::string& Vocab::token(int32_t id) const {
  if (id < 0 || id >= size())
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(size()));
  return tokens_[static_cast<size_t>(id)];
}

int32_t Vocab::id_of(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

TokenSequence Vocab::encode(const std::string& caption) const {
  TokenSequence seq;
  seq.ids.push_back(kBos);
  for (const std::string& t : tokenize(caption)) seq.ids.push_back(id_of(t));
  seq.ids.push_back(kEos);
  return seq;
}

std::string Vocab::decode(const std::vector<int32_t>& ids) const {
  std::string out;
  for (int32_t id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

}  // namespace ccap
